#pragma once

// Direct-loop reference implementations, written against the layer
// definitions rather than the engine. They stay deliberately dumb (per-pixel
// helper reads, no pointer arithmetic, long-double accumulation) so they can
// arbitrate the optimized forward passes.

#include <vector>

#include "facescan/net.hpp"
#include "facescan/tensor.hpp"

namespace facescan::testing {

Tensor naive_conv(const Tensor& in, const LayerSpec& spec, const std::vector<double>& weights,
                  const std::vector<double>& bias);
Tensor naive_maxpool(const Tensor& in, const LayerSpec& spec);
Tensor naive_fc(const Tensor& in, const LayerSpec& spec, const std::vector<double>& weights,
                const std::vector<double>& bias);
Tensor naive_lrn(const Tensor& in, const LayerSpec& spec);
std::vector<double> naive_softmax(const std::vector<double>& logits);

}  // namespace facescan::testing
