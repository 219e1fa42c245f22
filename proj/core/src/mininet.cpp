#include "facescan/mininet.hpp"

namespace facescan {

namespace {

Layer conv_layer(int in, int out, int kernel, int stride) {
    Layer l;
    l.spec.kind = LayerKind::Conv;
    l.spec.in_channels = in;
    l.spec.out_channels = out;
    l.spec.kernel = kernel;
    l.spec.stride = stride;
    l.spec.pad = 0;
    l.weights.assign(static_cast<std::size_t>(out) * in * kernel * kernel, 0.0);
    l.bias.assign(out, 0.0);
    return l;
}

Layer pool_layer(int kernel, int stride) {
    Layer l;
    l.spec.kind = LayerKind::MaxPool;
    l.spec.kernel = kernel;
    l.spec.stride = stride;
    return l;
}

Layer fc_layer(int in_c, int in_h, int in_w, int out) {
    Layer l;
    l.spec.kind = LayerKind::FullyConnected;
    l.spec.in_channels = in_c;
    l.spec.in_height = in_h;
    l.spec.in_width = in_w;
    l.spec.out_channels = out;
    l.weights.assign(static_cast<std::size_t>(out) * in_c * in_h * in_w, 0.0);
    l.bias.assign(out, 0.0);
    return l;
}

Layer plain_layer(LayerKind kind) {
    Layer l;
    l.spec.kind = kind;
    return l;
}

}  // namespace

NetworkSpec mininet() {
    NetworkSpec net;
    net.input_channels = 1;
    net.mean = {128.0};
    net.scale = 1.0 / 128.0;
    net.layers.push_back(conv_layer(1, 4, 5, 2));   // 35 -> 16
    net.layers.push_back(plain_layer(LayerKind::Relu));
    net.layers.push_back(pool_layer(2, 2));         // 16 -> 8
    net.layers.push_back(conv_layer(4, 8, 3, 1));   // 8 -> 6
    net.layers.push_back(plain_layer(LayerKind::Relu));
    net.layers.push_back(fc_layer(8, 6, 6, 16));
    net.layers.push_back(fc_layer(16, 1, 1, 2));
    net.layers.push_back(plain_layer(LayerKind::Softmax));
    return net;
}

}  // namespace facescan
