#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "facescan/net.hpp"
#include "facescan/sampler.hpp"

namespace facescan {

// Parameter-shaped gradient (or velocity) storage: one weight and one bias
// slot per layer, empty where the layer has no parameters.
struct Gradients {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> bias;
};

Gradients make_zero_gradients(const NetworkSpec& net);

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    int iterations = 2000;
    BatchSpec batch;
    std::uint64_t seed = 1;
};

// Mean negative log-probability of the true labels over the batch.
// Probabilities are clamped at 1e-12 before the log.
double batch_risk(const NetworkSpec& net, std::span<const Patch> batch);

// Analytic gradient of batch_risk with respect to every parameter.
Gradients backward(const NetworkSpec& net, std::span<const Patch> batch);

// One pass computing both; the risk comes for free with the gradients.
double backward_with_risk(const NetworkSpec& net, std::span<const Patch> batch, Gradients& grads);

// Momentum update: v <- momentum*v - lr*(g + weight_decay*w); w <- w + v.
void sgd_step(NetworkSpec& net, const Gradients& grads, const TrainConfig& cfg,
              Gradients& velocity);

// Max relative disagreement between analytic gradients and central finite
// differences over a seeded parameter subsample touching every
// parameterized layer.
double gradient_check(const NetworkSpec& net, std::span<const Patch> batch, double epsilon,
                      std::uint64_t seed = 7, int samples_per_tensor = 6);

// Centered uniform with fan-in scaling; biases zero.
NetworkSpec init_random(NetworkSpec net, std::uint64_t seed);

struct RiskPoint {
    int iteration = 0;
    double risk = 0;
};

// compose_batch -> backward -> sgd_step for cfg.iterations rounds; pure in
// (net, pools, cfg.seed). Per-iteration batch seeds derive from cfg.seed by
// splitmix64.
NetworkSpec finetune(NetworkSpec net, std::span<const Patch> positives,
                     std::span<const Patch> negatives, const TrainConfig& cfg,
                     std::vector<RiskPoint>* trace = nullptr, std::ostream* log = nullptr);

void write_risk_trace_csv(std::ostream& out, std::span<const RiskPoint> trace);

}  // namespace facescan
