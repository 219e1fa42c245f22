#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "facescan/net.hpp"

namespace facescan {

namespace {

int conv_out_dim(int in, int kernel, int stride, int pad) {
    return (in + 2 * pad - kernel) / stride + 1;
}

void check_window_fits(const Tensor& input, const LayerSpec& spec, const char* what) {
    if (input.height + 2 * spec.pad < spec.kernel || input.width + 2 * spec.pad < spec.kernel)
        fail(ErrorKind::ShapeMismatch,
             std::string(what) + " kernel " + std::to_string(spec.kernel) +
                 " exceeds padded input " + std::to_string(input.height) + "x" +
                 std::to_string(input.width) + " (pad " + std::to_string(spec.pad) + ")");
}

}  // namespace

Tensor conv_forward(const Tensor& input, const LayerSpec& spec,
                    const std::vector<double>& weights, const std::vector<double>& bias) {
    if (input.channels != spec.in_channels)
        fail(ErrorKind::ShapeMismatch,
             "convolution expects " + std::to_string(spec.in_channels) + " input channels, got " +
                 std::to_string(input.channels));
    check_window_fits(input, spec, "convolution");
    const int k = spec.kernel;
    if (weights.size() != static_cast<std::size_t>(spec.out_channels) * spec.in_channels * k * k ||
        bias.size() != static_cast<std::size_t>(spec.out_channels))
        fail(ErrorKind::ShapeMismatch, "convolution parameter sizes do not match the layer spec");

    const int oh = conv_out_dim(input.height, k, spec.stride, spec.pad);
    const int ow = conv_out_dim(input.width, k, spec.stride, spec.pad);
    Tensor out(spec.out_channels, oh, ow);

    const int ih = input.height;
    const int iw = input.width;
    for (int oc = 0; oc < spec.out_channels; ++oc) {
        const double* wbase = weights.data() + static_cast<std::size_t>(oc) * spec.in_channels * k * k;
        double* oplane = out.plane(oc);
        for (int oy = 0; oy < oh; ++oy) {
            const int y0 = oy * spec.stride - spec.pad;
            const int ky_lo = std::max(0, -y0);
            const int ky_hi = std::min(k, ih - y0);
            for (int ox = 0; ox < ow; ++ox) {
                const int x0 = ox * spec.stride - spec.pad;
                const int kx_lo = std::max(0, -x0);
                const int kx_hi = std::min(k, iw - x0);
                double acc = bias[oc];
                for (int ic = 0; ic < spec.in_channels; ++ic) {
                    const double* iplane = input.plane(ic);
                    const double* wplane = wbase + static_cast<std::size_t>(ic) * k * k;
                    for (int ky = ky_lo; ky < ky_hi; ++ky) {
                        const double* irow = iplane + static_cast<std::size_t>(y0 + ky) * iw + x0;
                        const double* wrow = wplane + static_cast<std::size_t>(ky) * k;
                        for (int kx = kx_lo; kx < kx_hi; ++kx) acc += irow[kx] * wrow[kx];
                    }
                }
                oplane[static_cast<std::size_t>(oy) * ow + ox] = acc;
            }
        }
    }
    return out;
}

Tensor maxpool_forward(const Tensor& input, const LayerSpec& spec) {
    check_window_fits(input, spec, "max-pool");
    const int k = spec.kernel;
    const int oh = conv_out_dim(input.height, k, spec.stride, spec.pad);
    const int ow = conv_out_dim(input.width, k, spec.stride, spec.pad);
    Tensor out(input.channels, oh, ow);

    const int ih = input.height;
    const int iw = input.width;
    for (int c = 0; c < input.channels; ++c) {
        const double* iplane = input.plane(c);
        double* oplane = out.plane(c);
        for (int oy = 0; oy < oh; ++oy) {
            const int y0 = oy * spec.stride - spec.pad;
            for (int ox = 0; ox < ow; ++ox) {
                const int x0 = ox * spec.stride - spec.pad;
                // padded samples read as zero, same convention as convolution
                double best = -std::numeric_limits<double>::infinity();
                for (int ky = 0; ky < k; ++ky) {
                    const int y = y0 + ky;
                    for (int kx = 0; kx < k; ++kx) {
                        const int x = x0 + kx;
                        const double v = (y < 0 || y >= ih || x < 0 || x >= iw)
                                             ? 0.0
                                             : iplane[static_cast<std::size_t>(y) * iw + x];
                        if (v > best) best = v;
                    }
                }
                oplane[static_cast<std::size_t>(oy) * ow + ox] = best;
            }
        }
    }
    return out;
}

Tensor relu_forward(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor lrn_forward(const Tensor& input, const LayerSpec& spec) {
    const LrnParams& p = spec.lrn;
    if (p.local_size < 1 || (p.local_size % 2) == 0)
        fail(ErrorKind::Config, "lrn local size must be a positive odd number");
    const int half = p.local_size / 2;
    const int C = input.channels;
    Tensor out(C, input.height, input.width);
    const std::size_t plane = static_cast<std::size_t>(input.height) * input.width;
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < C; ++c) {
            const int lo = std::max(0, c - half);
            const int hi = std::min(C - 1, c + half);
            double sum = 0.0;
            for (int j = lo; j <= hi; ++j) {
                const double a = input.data[static_cast<std::size_t>(j) * plane + i];
                sum += a * a;
            }
            const double denom = std::pow(p.k + p.alpha / p.local_size * sum, p.beta);
            out.data[static_cast<std::size_t>(c) * plane + i] =
                input.data[static_cast<std::size_t>(c) * plane + i] / denom;
        }
    }
    return out;
}

Tensor fc_forward(const Tensor& input, const LayerSpec& spec,
                  const std::vector<double>& weights, const std::vector<double>& bias) {
    if (input.channels != spec.in_channels || input.height != spec.in_height ||
        input.width != spec.in_width)
        fail(ErrorKind::ShapeMismatch,
             "fully-connected layer expects " + std::to_string(spec.in_channels) + "x" +
                 std::to_string(spec.in_height) + "x" + std::to_string(spec.in_width) + ", got " +
                 std::to_string(input.channels) + "x" + std::to_string(input.height) + "x" +
                 std::to_string(input.width));
    const std::size_t in_dim = input.size();
    if (weights.size() != in_dim * spec.out_channels ||
        bias.size() != static_cast<std::size_t>(spec.out_channels))
        fail(ErrorKind::ShapeMismatch, "fully-connected parameter sizes do not match the layer spec");

    Tensor out(spec.out_channels, 1, 1);
    for (int o = 0; o < spec.out_channels; ++o) {
        const double* wrow = weights.data() + static_cast<std::size_t>(o) * in_dim;
        double acc = bias[o];
        for (std::size_t i = 0; i < in_dim; ++i) acc += wrow[i] * input.data[i];
        out.data[o] = acc;
    }
    return out;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    if (logits.size() < 2)
        fail(ErrorKind::InvalidArgument, "softmax needs at least 2 logits");
    double mx = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) fail(ErrorKind::Numeric, "softmax logit is not finite");
        mx = std::max(mx, v);
    }
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

Tensor softmax_forward(const Tensor& input) {
    if (input.channels < 2)
        fail(ErrorKind::ShapeMismatch, "softmax layer needs at least 2 channels");
    Tensor out(input.channels, input.height, input.width);
    const std::size_t plane = static_cast<std::size_t>(input.height) * input.width;
    std::vector<double> logits(input.channels);
    for (std::size_t i = 0; i < plane; ++i) {
        for (int c = 0; c < input.channels; ++c)
            logits[c] = input.data[static_cast<std::size_t>(c) * plane + i];
        std::vector<double> probs = softmax(logits);
        for (int c = 0; c < input.channels; ++c)
            out.data[static_cast<std::size_t>(c) * plane + i] = probs[c];
    }
    return out;
}

}  // namespace facescan
