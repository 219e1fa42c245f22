#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "facescan/tensor.hpp"

namespace facescan {

enum class LayerKind { Conv, MaxPool, Relu, FullyConnected, Lrn, Softmax };

const char* to_string(LayerKind kind);

struct LrnParams {
    int local_size = 5;  // odd channel window
    double alpha = 1e-4;
    double beta = 0.75;
    double k = 1.0;
};

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    int kernel = 0;  // conv/pool, square
    int stride = 1;
    int pad = 0;
    int in_channels = 0;   // conv/fc
    int out_channels = 0;  // conv/fc
    int in_height = 0;     // fc: expected input shape, exact
    int in_width = 0;
    LrnParams lrn;
    bool from_fc = false;  // conv produced by fc_to_conv
};

// Weight layout: conv [out][in][ky][kx]; fc [out][flat(in_c, in_h, in_w)].
// The fc flattening order equals Tensor memory order, so reinterpreting an
// fc weight matrix as conv filters is a pure relabeling.
struct Layer {
    LayerSpec spec;
    std::vector<double> weights;
    std::vector<double> bias;
};

struct Shape {
    int channels = 0;
    int height = 0;
    int width = 0;
};

// Sweep geometry of a fully-convolutional net: one score-map cell covers a
// window x window input patch, cells are stride pixels apart. `exact` is
// false when any layer pads, in which case the mapping is nominal.
struct ScanGeometry {
    int window = 0;
    int stride = 0;
    bool exact = true;
};

struct NetworkSpec {
    int input_channels = 1;
    std::vector<double> mean;  // per input channel, subtracted first
    double scale = 1.0;        // applied after mean subtraction
    std::vector<Layer> layers;
    // Index of the first fully-connected layer (or the conv layer it became
    // after conversion). The activation feeding this layer is the feature
    // map box regression reads. -1 when unknown.
    int feature_layer = -1;

    bool fully_convolutional() const;
    std::size_t parameter_count() const;
};

// ---- single-layer forward passes ----

Tensor conv_forward(const Tensor& input, const LayerSpec& spec,
                    const std::vector<double>& weights, const std::vector<double>& bias);
Tensor maxpool_forward(const Tensor& input, const LayerSpec& spec);
Tensor relu_forward(const Tensor& input);
Tensor lrn_forward(const Tensor& input, const LayerSpec& spec);
Tensor fc_forward(const Tensor& input, const LayerSpec& spec,
                  const std::vector<double>& weights, const std::vector<double>& bias);

// Numerically stable softmax (max subtraction), components sum to 1.
std::vector<double> softmax(const std::vector<double>& logits);
// Softmax across channels at every spatial cell.
Tensor softmax_forward(const Tensor& input);

// ---- shape bookkeeping ----

// Output shape of one layer; throws ShapeMismatch/Config naming the layer.
Shape propagate_shape(const LayerSpec& spec, const Shape& in, int layer_index);
// Shape after the whole stack.
Shape output_shape(const NetworkSpec& net, const Shape& input);
// Structural + shape validation. Throws on the first inconsistent layer.
void validate(const NetworkSpec& net);
// Square input size that produces a 1x1 output (the training window).
// Works for both fully-connected and converted nets.
int input_window(const NetworkSpec& net);
// Window/stride of a fully-convolutional net. Throws Config if the net
// still has fully-connected layers or no window in [1, 10000] fits.
ScanGeometry receptive_geometry(const NetworkSpec& net);

// ---- whole-network forward ----

// Mean subtraction and scaling; returns the tensor the first layer sees.
Tensor preprocess(const NetworkSpec& net, const Tensor& input);
Tensor forward(const NetworkSpec& net, const Tensor& input);
// All activations: [0] is the preprocessed input, [i + 1] the output of
// layer i. The backward pass and feature extraction both consume this.
std::vector<Tensor> forward_all(const NetworkSpec& net, const Tensor& input);

// Reshape fully-connected layers into convolutions (the first into a
// window-sized filter bank, later ones into 1x1 convolutions). Parameters
// are reinterpreted, not copied into a new order; a net without
// fully-connected layers comes back unchanged.
NetworkSpec fc_to_conv(const NetworkSpec& net);

}  // namespace facescan
