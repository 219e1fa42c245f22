#include <algorithm>
#include <cmath>
#include <string>

#include "facescan/net.hpp"

namespace facescan {

const char* to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::Relu: return "relu";
        case LayerKind::FullyConnected: return "fc";
        case LayerKind::Lrn: return "lrn";
        case LayerKind::Softmax: return "softmax";
    }
    return "unknown";
}

bool NetworkSpec::fully_convolutional() const {
    for (const Layer& l : layers)
        if (l.spec.kind == LayerKind::FullyConnected) return false;
    return true;
}

std::size_t NetworkSpec::parameter_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers) n += l.weights.size() + l.bias.size();
    return n;
}

namespace {

std::string layer_name(const LayerSpec& spec, int index) {
    return std::string("layer ") + std::to_string(index) + " (" + to_string(spec.kind) + ")";
}

int windowed_out(int in, int kernel, int stride, int pad, const LayerSpec& spec, int index) {
    if (in + 2 * pad < kernel)
        fail(ErrorKind::ShapeMismatch,
             layer_name(spec, index) + ": kernel " + std::to_string(kernel) +
                 " exceeds padded input extent " + std::to_string(in + 2 * pad));
    return (in + 2 * pad - kernel) / stride + 1;
}

}  // namespace

Shape propagate_shape(const LayerSpec& spec, const Shape& in, int layer_index) {
    switch (spec.kind) {
        case LayerKind::Conv: {
            if (in.channels != spec.in_channels)
                fail(ErrorKind::ShapeMismatch,
                     layer_name(spec, layer_index) + ": expects " +
                         std::to_string(spec.in_channels) + " channels, got " +
                         std::to_string(in.channels));
            return {spec.out_channels,
                    windowed_out(in.height, spec.kernel, spec.stride, spec.pad, spec, layer_index),
                    windowed_out(in.width, spec.kernel, spec.stride, spec.pad, spec, layer_index)};
        }
        case LayerKind::MaxPool:
            return {in.channels,
                    windowed_out(in.height, spec.kernel, spec.stride, spec.pad, spec, layer_index),
                    windowed_out(in.width, spec.kernel, spec.stride, spec.pad, spec, layer_index)};
        case LayerKind::Relu:
        case LayerKind::Lrn:
            return in;
        case LayerKind::Softmax:
            if (in.channels < 2)
                fail(ErrorKind::ShapeMismatch,
                     layer_name(spec, layer_index) + ": needs at least 2 channels, got " +
                         std::to_string(in.channels));
            return in;
        case LayerKind::FullyConnected:
            if (in.channels != spec.in_channels || in.height != spec.in_height ||
                in.width != spec.in_width)
                fail(ErrorKind::ShapeMismatch,
                     layer_name(spec, layer_index) + ": expects " +
                         std::to_string(spec.in_channels) + "x" + std::to_string(spec.in_height) +
                         "x" + std::to_string(spec.in_width) + ", got " +
                         std::to_string(in.channels) + "x" + std::to_string(in.height) + "x" +
                         std::to_string(in.width));
            return {spec.out_channels, 1, 1};
    }
    fail(ErrorKind::Config, "unknown layer kind");
}

Shape output_shape(const NetworkSpec& net, const Shape& input) {
    Shape s = input;
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        s = propagate_shape(net.layers[i].spec, s, static_cast<int>(i));
    return s;
}

namespace {

constexpr int kMaxWindowSearch = 10000;

// Smallest square input that the stack maps to a 1x1 grid.
int find_window(const NetworkSpec& net) {
    for (int w = 1; w <= kMaxWindowSearch; ++w) {
        try {
            Shape out = output_shape(net, {net.input_channels, w, w});
            if (out.height == 1 && out.width == 1) return w;
        } catch (const Error&) {
            // this size does not fit; keep growing
        }
    }
    fail(ErrorKind::Config,
         "no input size in [1, " + std::to_string(kMaxWindowSearch) + "] yields a 1x1 output");
}

void validate_structure(const NetworkSpec& net) {
    if (net.layers.empty()) fail(ErrorKind::Config, "network has no layers");
    if (net.input_channels < 1) fail(ErrorKind::Config, "input channel count must be >= 1");
    if (net.mean.size() != static_cast<std::size_t>(net.input_channels))
        fail(ErrorKind::Config, "preprocessing mean must list one value per input channel");
    if (!(net.scale > 0.0) || !std::isfinite(net.scale))
        fail(ErrorKind::Config, "preprocessing scale must be positive and finite");
    if (net.layers.back().spec.kind != LayerKind::Softmax)
        fail(ErrorKind::Config, "final layer must be softmax");

    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& l = net.layers[i];
        const LayerSpec& s = l.spec;
        const std::string name = layer_name(s, static_cast<int>(i));
        switch (s.kind) {
            case LayerKind::Conv: {
                if (s.kernel < 1 || s.stride < 1 || s.pad < 0 || s.in_channels < 1 ||
                    s.out_channels < 1)
                    fail(ErrorKind::Config, name + ": bad kernel/stride/pad/channels");
                const std::size_t want =
                    static_cast<std::size_t>(s.out_channels) * s.in_channels * s.kernel * s.kernel;
                if (l.weights.size() != want ||
                    l.bias.size() != static_cast<std::size_t>(s.out_channels))
                    fail(ErrorKind::Config, name + ": parameter sizes do not match the spec");
                break;
            }
            case LayerKind::MaxPool:
                if (s.kernel < 1 || s.stride < 1 || s.pad < 0)
                    fail(ErrorKind::Config, name + ": bad kernel/stride/pad");
                if (!l.weights.empty() || !l.bias.empty())
                    fail(ErrorKind::Config, name + ": pooling carries no parameters");
                break;
            case LayerKind::FullyConnected: {
                if (s.in_channels < 1 || s.in_height < 1 || s.in_width < 1 || s.out_channels < 1)
                    fail(ErrorKind::Config, name + ": missing recorded input shape");
                const std::size_t want = static_cast<std::size_t>(s.out_channels) * s.in_channels *
                                         s.in_height * s.in_width;
                if (l.weights.size() != want ||
                    l.bias.size() != static_cast<std::size_t>(s.out_channels))
                    fail(ErrorKind::Config, name + ": parameter sizes do not match the spec");
                break;
            }
            case LayerKind::Lrn:
                if (s.lrn.local_size < 1 || (s.lrn.local_size % 2) == 0)
                    fail(ErrorKind::Config, name + ": local size must be a positive odd number");
                if (!(s.lrn.k >= 0.0) || !(s.lrn.alpha >= 0.0) || !(s.lrn.beta > 0.0))
                    fail(ErrorKind::Config, name + ": bad lrn parameters");
                [[fallthrough]];
            case LayerKind::Relu:
            case LayerKind::Softmax:
                if (!l.weights.empty() || !l.bias.empty())
                    fail(ErrorKind::Config, name + ": layer carries no parameters");
                break;
        }
    }
}

}  // namespace

void validate(const NetworkSpec& net) {
    validate_structure(net);
    find_window(net);  // throws Config when no consistent input size exists
}

int input_window(const NetworkSpec& net) { return find_window(net); }

ScanGeometry receptive_geometry(const NetworkSpec& net) {
    if (!net.fully_convolutional())
        fail(ErrorKind::Config,
             "receptive geometry is defined for fully-convolutional nets; run fc_to_conv first");
    ScanGeometry g;
    g.window = find_window(net);
    g.stride = 1;
    g.exact = true;
    for (const Layer& l : net.layers) {
        if (l.spec.kind == LayerKind::Conv || l.spec.kind == LayerKind::MaxPool) {
            g.stride *= l.spec.stride;
            if (l.spec.pad > 0) g.exact = false;
        }
    }
    return g;
}

Tensor preprocess(const NetworkSpec& net, const Tensor& input) {
    if (input.channels != net.input_channels)
        fail(ErrorKind::ShapeMismatch,
             "network expects " + std::to_string(net.input_channels) + " input channels, got " +
                 std::to_string(input.channels));
    Tensor out = input;
    const std::size_t plane = static_cast<std::size_t>(input.height) * input.width;
    for (int c = 0; c < input.channels; ++c) {
        const double m = net.mean[c];
        double* p = out.plane(c);
        for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m) * net.scale;
    }
    return out;
}

namespace {

Tensor layer_forward(const Layer& l, const Tensor& in) {
    switch (l.spec.kind) {
        case LayerKind::Conv: return conv_forward(in, l.spec, l.weights, l.bias);
        case LayerKind::MaxPool: return maxpool_forward(in, l.spec);
        case LayerKind::Relu: return relu_forward(in);
        case LayerKind::Lrn: return lrn_forward(in, l.spec);
        case LayerKind::FullyConnected: return fc_forward(in, l.spec, l.weights, l.bias);
        case LayerKind::Softmax: return softmax_forward(in);
    }
    fail(ErrorKind::Config, "unknown layer kind");
}

void check_input_size(const NetworkSpec& net, const Tensor& input) {
    const int window = find_window(net);
    if (net.fully_convolutional()) {
        if (input.height < window || input.width < window)
            fail(ErrorKind::TooSmall,
                 "image " + std::to_string(input.width) + "x" + std::to_string(input.height) +
                     " is smaller than the network window; needs at least " +
                     std::to_string(window) + "x" + std::to_string(window));
    } else {
        if (input.height != window || input.width != window)
            fail(ErrorKind::ShapeMismatch,
                 "a network with fully-connected layers requires exactly " +
                     std::to_string(window) + "x" + std::to_string(window) + " input, got " +
                     std::to_string(input.width) + "x" + std::to_string(input.height));
    }
}

}  // namespace

Tensor forward(const NetworkSpec& net, const Tensor& input) {
    check_input_size(net, input);
    Tensor t = preprocess(net, input);
    for (const Layer& l : net.layers) t = layer_forward(l, t);
    return t;
}

std::vector<Tensor> forward_all(const NetworkSpec& net, const Tensor& input) {
    check_input_size(net, input);
    std::vector<Tensor> acts;
    acts.reserve(net.layers.size() + 1);
    acts.push_back(preprocess(net, input));
    for (const Layer& l : net.layers) acts.push_back(layer_forward(l, acts.back()));
    return acts;
}

NetworkSpec fc_to_conv(const NetworkSpec& net) {
    NetworkSpec out = net;
    bool seen_fc = false;
    for (std::size_t i = 0; i < out.layers.size(); ++i) {
        Layer& l = out.layers[i];
        if (l.spec.kind != LayerKind::FullyConnected) continue;
        if (l.spec.in_channels < 1 || l.spec.in_height < 1 || l.spec.in_width < 1)
            fail(ErrorKind::Config,
                 layer_name(l.spec, static_cast<int>(i)) + ": no recorded input shape to reshape");
        if (l.spec.in_height != l.spec.in_width)
            fail(ErrorKind::Config,
                 layer_name(l.spec, static_cast<int>(i)) +
                     ": non-square input shape cannot become a square convolution kernel");
        if (!seen_fc) {
            seen_fc = true;
            if (out.feature_layer < 0) out.feature_layer = static_cast<int>(i);
        }
        LayerSpec conv;
        conv.kind = LayerKind::Conv;
        conv.kernel = l.spec.in_height;  // later fc layers see 1x1 maps, so this becomes 1
        conv.stride = 1;
        conv.pad = 0;
        conv.in_channels = l.spec.in_channels;
        conv.out_channels = l.spec.out_channels;
        conv.from_fc = true;
        l.spec = conv;
        // weights stay byte-identical: fc rows flatten in tensor order
    }
    return out;
}

}  // namespace facescan
