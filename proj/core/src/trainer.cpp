#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "facescan/rng.hpp"
#include "facescan/trainer.hpp"

namespace facescan {

Gradients make_zero_gradients(const NetworkSpec& net) {
    Gradients g;
    g.weights.resize(net.layers.size());
    g.bias.resize(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        g.weights[i].assign(net.layers[i].weights.size(), 0.0);
        g.bias[i].assign(net.layers[i].bias.size(), 0.0);
    }
    return g;
}

namespace {

constexpr double kProbFloor = 1e-12;

int label_channel(const Patch& p) { return p.face ? 1 : 0; }

// ---- per-layer backward passes ----
// Each takes the layer's input activation, the gradient at its output, and
// accumulates parameter gradients; returns the gradient at its input.

Tensor conv_backward(const Layer& l, const Tensor& in, const Tensor& grad_out,
                     std::vector<double>& dw, std::vector<double>& db) {
    const LayerSpec& s = l.spec;
    const int k = s.kernel;
    const int ih = in.height, iw = in.width;
    Tensor grad_in(in.channels, ih, iw);
    for (int oc = 0; oc < s.out_channels; ++oc) {
        const double* wbase = l.weights.data() + static_cast<std::size_t>(oc) * s.in_channels * k * k;
        double* dwbase = dw.data() + static_cast<std::size_t>(oc) * s.in_channels * k * k;
        const double* gplane = grad_out.plane(oc);
        for (int oy = 0; oy < grad_out.height; ++oy) {
            const int y0 = oy * s.stride - s.pad;
            const int ky_lo = std::max(0, -y0);
            const int ky_hi = std::min(k, ih - y0);
            for (int ox = 0; ox < grad_out.width; ++ox) {
                const double g = gplane[static_cast<std::size_t>(oy) * grad_out.width + ox];
                if (g == 0.0) continue;
                const int x0 = ox * s.stride - s.pad;
                const int kx_lo = std::max(0, -x0);
                const int kx_hi = std::min(k, iw - x0);
                db[oc] += g;
                for (int ic = 0; ic < s.in_channels; ++ic) {
                    const double* iplane = in.plane(ic);
                    double* giplane = grad_in.plane(ic);
                    const double* wplane = wbase + static_cast<std::size_t>(ic) * k * k;
                    double* dwplane = dwbase + static_cast<std::size_t>(ic) * k * k;
                    for (int ky = ky_lo; ky < ky_hi; ++ky) {
                        const std::size_t row = static_cast<std::size_t>(y0 + ky) * iw + x0;
                        const std::size_t wrow = static_cast<std::size_t>(ky) * k;
                        for (int kx = kx_lo; kx < kx_hi; ++kx) {
                            dwplane[wrow + kx] += g * iplane[row + kx];
                            giplane[row + kx] += g * wplane[wrow + kx];
                        }
                    }
                }
            }
        }
    }
    return grad_in;
}

Tensor fc_backward(const Layer& l, const Tensor& in, const Tensor& grad_out,
                   std::vector<double>& dw, std::vector<double>& db) {
    const std::size_t in_dim = in.size();
    Tensor grad_in(in.channels, in.height, in.width);
    for (int o = 0; o < l.spec.out_channels; ++o) {
        const double g = grad_out.data[o];
        if (g == 0.0) continue;
        db[o] += g;
        const double* wrow = l.weights.data() + static_cast<std::size_t>(o) * in_dim;
        double* dwrow = dw.data() + static_cast<std::size_t>(o) * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) {
            dwrow[i] += g * in.data[i];
            grad_in.data[i] += g * wrow[i];
        }
    }
    return grad_in;
}

Tensor relu_backward(const Tensor& in, const Tensor& grad_out) {
    Tensor grad_in(in.channels, in.height, in.width);
    for (std::size_t i = 0; i < in.size(); ++i)
        grad_in.data[i] = in.data[i] > 0.0 ? grad_out.data[i] : 0.0;
    return grad_in;
}

// The forward max scans (ky, kx) keeping the first strict maximum and reads
// padded samples as zero; the gradient follows the same winner (and is
// dropped when a padded zero won).
Tensor maxpool_backward(const LayerSpec& s, const Tensor& in, const Tensor& grad_out) {
    const int k = s.kernel;
    Tensor grad_in(in.channels, in.height, in.width);
    for (int c = 0; c < in.channels; ++c) {
        const double* iplane = in.plane(c);
        const double* gplane = grad_out.plane(c);
        double* giplane = grad_in.plane(c);
        for (int oy = 0; oy < grad_out.height; ++oy) {
            const int y0 = oy * s.stride - s.pad;
            for (int ox = 0; ox < grad_out.width; ++ox) {
                const int x0 = ox * s.stride - s.pad;
                double best = -std::numeric_limits<double>::infinity();
                int by = -1, bx = -1;
                for (int ky = 0; ky < k; ++ky) {
                    const int y = y0 + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        const int x = x0 + kx;
                        const bool inside = y >= 0 && y < in.height && x >= 0 && x < in.width;
                        const double v = inside ? iplane[static_cast<std::size_t>(y) * in.width + x] : 0.0;
                        if (v > best) {
                            best = v;
                            by = inside ? y : -1;
                            bx = inside ? x : -1;
                        }
                    }
                }
                if (by >= 0)
                    giplane[static_cast<std::size_t>(by) * in.width + bx] +=
                        gplane[static_cast<std::size_t>(oy) * grad_out.width + ox];
            }
        }
    }
    return grad_in;
}

Tensor lrn_backward(const LayerSpec& s, const Tensor& in, const Tensor& grad_out) {
    const LrnParams& p = s.lrn;
    const int half = p.local_size / 2;
    const int C = in.channels;
    const std::size_t plane = static_cast<std::size_t>(in.height) * in.width;
    Tensor grad_in(in.channels, in.height, in.width);
    std::vector<double> denom(C);
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < C; ++c) {
            const int lo = std::max(0, c - half);
            const int hi = std::min(C - 1, c + half);
            double sum = 0.0;
            for (int j = lo; j <= hi; ++j) {
                const double a = in.data[static_cast<std::size_t>(j) * plane + i];
                sum += a * a;
            }
            denom[c] = p.k + p.alpha / p.local_size * sum;
        }
        for (int c = 0; c < C; ++c) {
            const double a_c = in.data[static_cast<std::size_t>(c) * plane + i];
            const double g_c = grad_out.data[static_cast<std::size_t>(c) * plane + i];
            double v = g_c * std::pow(denom[c], -p.beta);
            const int lo = std::max(0, c - half);
            const int hi = std::min(C - 1, c + half);
            double cross = 0.0;
            for (int j = lo; j <= hi; ++j) {
                const double a_j = in.data[static_cast<std::size_t>(j) * plane + i];
                const double g_j = grad_out.data[static_cast<std::size_t>(j) * plane + i];
                cross += g_j * a_j * std::pow(denom[j], -p.beta - 1.0);
            }
            v -= 2.0 * p.alpha * p.beta / p.local_size * a_c * cross;
            grad_in.data[static_cast<std::size_t>(c) * plane + i] = v;
        }
    }
    return grad_in;
}

void accumulate_example(const NetworkSpec& net, const Patch& patch, double inv_batch,
                        Gradients& grads, double& risk_sum) {
    const std::vector<Tensor> acts = forward_all(net, patch.tensor);
    const int n = static_cast<int>(net.layers.size());
    const Tensor& probs = acts[n];

    if (net.layers.back().spec.kind != LayerKind::Softmax)
        fail(ErrorKind::Config, "training requires a softmax final layer");
    if (probs.height != 1 || probs.width != 1)
        fail(ErrorKind::ShapeMismatch, "training patches must map to a 1x1 output");

    const int label = label_channel(patch);
    risk_sum += -std::log(std::max(probs.data[label], kProbFloor));

    // softmax and the log-loss fold into one gradient at the logits
    Tensor grad(probs.channels, 1, 1);
    for (int c = 0; c < probs.channels; ++c)
        grad.data[c] = (probs.data[c] - (c == label ? 1.0 : 0.0)) * inv_batch;

    for (int i = n - 2; i >= 0; --i) {
        const Layer& l = net.layers[i];
        switch (l.spec.kind) {
            case LayerKind::Conv:
                grad = conv_backward(l, acts[i], grad, grads.weights[i], grads.bias[i]);
                break;
            case LayerKind::FullyConnected:
                grad = fc_backward(l, acts[i], grad, grads.weights[i], grads.bias[i]);
                break;
            case LayerKind::Relu:
                grad = relu_backward(acts[i], grad);
                break;
            case LayerKind::MaxPool:
                grad = maxpool_backward(l.spec, acts[i], grad);
                break;
            case LayerKind::Lrn:
                grad = lrn_backward(l.spec, acts[i], grad);
                break;
            case LayerKind::Softmax:
                fail(ErrorKind::Config, "softmax must be the final layer");
        }
    }
}

}  // namespace

double batch_risk(const NetworkSpec& net, std::span<const Patch> batch) {
    if (batch.empty()) fail(ErrorKind::InvalidArgument, "batch is empty");
    double sum = 0.0;
    for (const Patch& p : batch) {
        const Tensor out = forward(net, p.tensor);
        if (out.height != 1 || out.width != 1)
            fail(ErrorKind::ShapeMismatch, "training patches must map to a 1x1 output");
        sum += -std::log(std::max(out.data[label_channel(p)], kProbFloor));
    }
    return sum / static_cast<double>(batch.size());
}

double backward_with_risk(const NetworkSpec& net, std::span<const Patch> batch, Gradients& grads) {
    if (batch.empty()) fail(ErrorKind::InvalidArgument, "batch is empty");
    grads = make_zero_gradients(net);
    double risk_sum = 0.0;
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (const Patch& p : batch) accumulate_example(net, p, inv, grads, risk_sum);
    return risk_sum * inv;
}

Gradients backward(const NetworkSpec& net, std::span<const Patch> batch) {
    Gradients g;
    backward_with_risk(net, batch, g);
    return g;
}

void sgd_step(NetworkSpec& net, const Gradients& grads, const TrainConfig& cfg,
              Gradients& velocity) {
    if (grads.weights.size() != net.layers.size() || velocity.weights.size() != net.layers.size())
        fail(ErrorKind::ShapeMismatch, "gradient shapes do not match the network");
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        Layer& l = net.layers[i];
        if (grads.weights[i].size() != l.weights.size() || grads.bias[i].size() != l.bias.size())
            fail(ErrorKind::ShapeMismatch, "gradient shapes do not match layer " + std::to_string(i));
        for (std::size_t j = 0; j < l.weights.size(); ++j) {
            double& v = velocity.weights[i][j];
            v = cfg.momentum * v -
                cfg.learning_rate * (grads.weights[i][j] + cfg.weight_decay * l.weights[j]);
            l.weights[j] += v;
        }
        for (std::size_t j = 0; j < l.bias.size(); ++j) {
            double& v = velocity.bias[i][j];
            v = cfg.momentum * v -
                cfg.learning_rate * (grads.bias[i][j] + cfg.weight_decay * l.bias[j]);
            l.bias[j] += v;
        }
    }
}

double gradient_check(const NetworkSpec& net, std::span<const Patch> batch, double epsilon,
                      std::uint64_t seed, int samples_per_tensor) {
    if (!(epsilon > 0)) fail(ErrorKind::InvalidArgument, "epsilon must be positive");
    NetworkSpec probe = net;
    const Gradients analytic = backward(probe, batch);
    Rng rng(seed);
    double worst = 0.0;

    auto probe_vector = [&](std::vector<double>& params, const std::vector<double>& grad) {
        if (params.empty()) return;
        const int n = std::min<int>(samples_per_tensor, static_cast<int>(params.size()));
        for (int s = 0; s < n; ++s) {
            const std::size_t j = rng.below(params.size());
            const double saved = params[j];
            params[j] = saved + epsilon;
            const double up = batch_risk(probe, batch);
            params[j] = saved - epsilon;
            const double down = batch_risk(probe, batch);
            params[j] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double denom = std::max({std::abs(numeric), std::abs(grad[j]), 1e-8});
            worst = std::max(worst, std::abs(numeric - grad[j]) / denom);
        }
    };

    for (std::size_t i = 0; i < probe.layers.size(); ++i) {
        probe_vector(probe.layers[i].weights, analytic.weights[i]);
        probe_vector(probe.layers[i].bias, analytic.bias[i]);
    }
    return worst;
}

NetworkSpec init_random(NetworkSpec net, std::uint64_t seed) {
    Rng rng(seed);
    for (Layer& l : net.layers) {
        if (l.weights.empty()) continue;
        std::size_t fan_in = 1;
        if (l.spec.kind == LayerKind::Conv)
            fan_in = static_cast<std::size_t>(l.spec.in_channels) * l.spec.kernel * l.spec.kernel;
        else if (l.spec.kind == LayerKind::FullyConnected)
            fan_in = static_cast<std::size_t>(l.spec.in_channels) * l.spec.in_height * l.spec.in_width;
        const double bound = std::sqrt(3.0 / static_cast<double>(fan_in));
        for (double& w : l.weights) w = rng.uniform(-bound, bound);
        for (double& b : l.bias) b = 0.0;
    }
    return net;
}

NetworkSpec finetune(NetworkSpec net, std::span<const Patch> positives,
                     std::span<const Patch> negatives, const TrainConfig& cfg,
                     std::vector<RiskPoint>* trace, std::ostream* log) {
    if (cfg.iterations < 1) fail(ErrorKind::InvalidArgument, "iterations must be >= 1");
    if (!(cfg.learning_rate > 0)) fail(ErrorKind::InvalidArgument, "learning rate must be positive");

    Gradients velocity = make_zero_gradients(net);
    Gradients grads;
    if (trace) trace->reserve(cfg.iterations);
    for (int iter = 0; iter < cfg.iterations; ++iter) {
        const std::vector<Patch> batch =
            compose_batch(positives, negatives, cfg.batch, derive_seed(cfg.seed, iter));
        const double risk = backward_with_risk(net, batch, grads);
        sgd_step(net, grads, cfg, velocity);
        if (trace) trace->push_back({iter, risk});
        if (log && (iter % 200 == 0 || iter == cfg.iterations - 1))
            *log << "iter " << iter << " risk " << risk << "\n";
    }
    return net;
}

void write_risk_trace_csv(std::ostream& out, std::span<const RiskPoint> trace) {
    out << "iteration,risk\n";
    char buf[64];
    for (const RiskPoint& p : trace) {
        std::snprintf(buf, sizeof(buf), "%d,%.9f\n", p.iteration, p.risk);
        out << buf;
    }
}

}  // namespace facescan
