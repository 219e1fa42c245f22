#include <cmath>

#include "doctest.h"

#include "facescan/net.hpp"
#include "facescan/rng.hpp"
#include "naive_layers.hpp"

using namespace facescan;
using facescan::testing::naive_conv;
using facescan::testing::naive_fc;
using facescan::testing::naive_lrn;
using facescan::testing::naive_maxpool;
using facescan::testing::naive_softmax;

namespace {

Tensor random_tensor(Rng& rng, int c, int h, int w, double lo = -2.0, double hi = 2.0) {
    Tensor t(c, h, w);
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

std::vector<double> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
    return worst;
}

LayerSpec conv_spec(int in, int out, int k, int s, int p) {
    LayerSpec spec;
    spec.kind = LayerKind::Conv;
    spec.in_channels = in;
    spec.out_channels = out;
    spec.kernel = k;
    spec.stride = s;
    spec.pad = p;
    return spec;
}

}  // namespace

TEST_CASE("conv: zero input gives bias-only output") {
    Tensor in(1, 3, 3, 0.0);
    LayerSpec spec = conv_spec(1, 1, 3, 1, 0);
    std::vector<double> w(9, 0.5);
    Tensor out = conv_forward(in, spec, w, {0.0});
    CHECK(out.channels == 1);
    CHECK(out.height == 1);
    CHECK(out.width == 1);
    CHECK(out.data[0] == doctest::Approx(0.0));
}

TEST_CASE("conv: all-ones 3x3 with unit filter and bias 1 sums to 10") {
    Tensor in(1, 3, 3, 1.0);
    LayerSpec spec = conv_spec(1, 1, 3, 1, 0);
    Tensor out = conv_forward(in, spec, std::vector<double>(9, 1.0), {1.0});
    CHECK(out.data[0] == doctest::Approx(10.0));
}

TEST_CASE("conv: shape mismatch names the problem") {
    Tensor in(2, 4, 4, 0.0);
    LayerSpec spec = conv_spec(3, 1, 3, 1, 0);
    CHECK_THROWS_AS(conv_forward(in, spec, std::vector<double>(27, 0.0), {0.0}), Error);
}

TEST_CASE("conv matches the nested-loop reference on random shapes") {
    Rng rng(101);
    for (int trial = 0; trial < 60; ++trial) {
        const int in_c = rng.uniform_int(1, 4);
        const int out_c = rng.uniform_int(1, 5);
        const int k = rng.uniform_int(1, 5);
        const int s = rng.uniform_int(1, 3);
        const int p = rng.uniform_int(0, 2);
        const int h = rng.uniform_int(std::max(1, k - 2 * p), 12);
        const int w = rng.uniform_int(std::max(1, k - 2 * p), 12);
        if (h + 2 * p < k || w + 2 * p < k) continue;
        const Tensor in = random_tensor(rng, in_c, h, w);
        LayerSpec spec = conv_spec(in_c, out_c, k, s, p);
        const std::vector<double> weights = random_vec(rng, static_cast<std::size_t>(out_c) * in_c * k * k);
        const std::vector<double> bias = random_vec(rng, out_c);
        const Tensor got = conv_forward(in, spec, weights, bias);
        const Tensor want = naive_conv(in, spec, weights, bias);
        CHECK(max_abs_diff(got, want) <= 1e-6);
    }
}

TEST_CASE("maxpool: 2x2 block reduces to its max") {
    Tensor in(1, 2, 2);
    in.data = {1, 2, 3, 4};
    LayerSpec spec;
    spec.kind = LayerKind::MaxPool;
    spec.kernel = 2;
    spec.stride = 2;
    Tensor out = maxpool_forward(in, spec);
    CHECK(out.height == 1);
    CHECK(out.data[0] == 4.0);
}

TEST_CASE("maxpool: constant input stays constant") {
    Tensor in(2, 6, 6, 3.25);
    LayerSpec spec;
    spec.kind = LayerKind::MaxPool;
    spec.kernel = 3;
    spec.stride = 1;
    Tensor out = maxpool_forward(in, spec);
    for (double v : out.data) CHECK(v == 3.25);
}

TEST_CASE("maxpool matches the reference exactly on random shapes") {
    Rng rng(202);
    for (int trial = 0; trial < 60; ++trial) {
        const int c = rng.uniform_int(1, 3);
        const int k = rng.uniform_int(1, 4);
        const int s = rng.uniform_int(1, 3);
        const int p = rng.uniform_int(0, 1);
        const int h = rng.uniform_int(std::max(1, k), 11);
        const int w = rng.uniform_int(std::max(1, k), 11);
        const Tensor in = random_tensor(rng, c, h, w);
        LayerSpec spec;
        spec.kind = LayerKind::MaxPool;
        spec.kernel = k;
        spec.stride = s;
        spec.pad = p;
        const Tensor got = maxpool_forward(in, spec);
        const Tensor want = naive_maxpool(in, spec);
        CHECK(max_abs_diff(got, want) == 0.0);
    }
}

TEST_CASE("relu basics") {
    Tensor in(1, 1, 3);
    in.data = {-1, 0, 2};
    Tensor out = relu_forward(in);
    CHECK(out.data == std::vector<double>{0, 0, 2});

    Tensor neg(2, 3, 3, -5.0);
    for (double v : relu_forward(neg).data) CHECK(v == 0.0);

    Rng rng(3);
    Tensor r = random_tensor(rng, 2, 4, 4);
    CHECK(max_abs_diff(relu_forward(relu_forward(r)), relu_forward(r)) == 0.0);
}

TEST_CASE("lrn: hand case and zero input") {
    LayerSpec spec;
    spec.kind = LayerKind::Lrn;
    spec.lrn = {1, 1.0, 1.0, 1.0};
    Tensor one(1, 1, 1, 1.0);
    CHECK(lrn_forward(one, spec).data[0] == doctest::Approx(0.5).epsilon(1e-12));

    Tensor zero(3, 2, 2, 0.0);
    LayerSpec def;
    def.kind = LayerKind::Lrn;
    for (double v : lrn_forward(zero, def).data) CHECK(v == 0.0);
}

TEST_CASE("lrn rejects even window sizes") {
    LayerSpec spec;
    spec.kind = LayerKind::Lrn;
    spec.lrn.local_size = 4;
    Tensor in(4, 2, 2, 1.0);
    CHECK_THROWS_AS(lrn_forward(in, spec), Error);
}

TEST_CASE("lrn matches the direct-formula reference") {
    Rng rng(303);
    for (int trial = 0; trial < 40; ++trial) {
        const int c = rng.uniform_int(1, 8);
        const Tensor in = random_tensor(rng, c, rng.uniform_int(1, 6), rng.uniform_int(1, 6));
        LayerSpec spec;
        spec.kind = LayerKind::Lrn;
        spec.lrn.local_size = 2 * rng.uniform_int(0, 3) + 1;
        spec.lrn.alpha = rng.uniform(1e-4, 2.0);
        spec.lrn.beta = rng.uniform(0.4, 1.2);
        spec.lrn.k = rng.uniform(0.5, 2.0);
        CHECK(max_abs_diff(lrn_forward(in, spec), naive_lrn(in, spec)) <= 1e-6);
    }
}

TEST_CASE("fc: identity weights flatten the input") {
    Rng rng(4);
    Tensor in = random_tensor(rng, 2, 2, 2);
    LayerSpec spec;
    spec.kind = LayerKind::FullyConnected;
    spec.in_channels = 2;
    spec.in_height = 2;
    spec.in_width = 2;
    spec.out_channels = 8;
    std::vector<double> w(64, 0.0);
    for (int i = 0; i < 8; ++i) w[static_cast<std::size_t>(i) * 8 + i] = 1.0;
    Tensor out = fc_forward(in, spec, w, std::vector<double>(8, 0.0));
    for (int i = 0; i < 8; ++i) CHECK(out.data[i] == in.data[i]);

    // zero weights pass the bias through
    Tensor biased = fc_forward(in, spec, std::vector<double>(64, 0.0),
                               std::vector<double>(8, 0.75));
    for (double v : biased.data) CHECK(v == 0.75);
}

TEST_CASE("fc matches the dot-product reference") {
    Rng rng(404);
    for (int trial = 0; trial < 40; ++trial) {
        const int c = rng.uniform_int(1, 4);
        const int h = rng.uniform_int(1, 5);
        const int w = rng.uniform_int(1, 5);
        const int out = rng.uniform_int(1, 6);
        const Tensor in = random_tensor(rng, c, h, w);
        LayerSpec spec;
        spec.kind = LayerKind::FullyConnected;
        spec.in_channels = c;
        spec.in_height = h;
        spec.in_width = w;
        spec.out_channels = out;
        const std::vector<double> weights = random_vec(rng, in.size() * out);
        const std::vector<double> bias = random_vec(rng, out);
        CHECK(max_abs_diff(fc_forward(in, spec, weights, bias),
                           naive_fc(in, spec, weights, bias)) <= 1e-6);
    }
}

TEST_CASE("fc rejects a mismatched input shape") {
    Tensor in(1, 3, 3, 0.0);
    LayerSpec spec;
    spec.kind = LayerKind::FullyConnected;
    spec.in_channels = 1;
    spec.in_height = 2;
    spec.in_width = 2;
    spec.out_channels = 1;
    CHECK_THROWS_AS(fc_forward(in, spec, std::vector<double>(4, 0.0), {0.0}), Error);
}

TEST_CASE("softmax: symmetry, closed form, stability") {
    const std::vector<double> equal = softmax({0.0, 0.0});
    CHECK(equal[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(equal[1] == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<double> closed = softmax({std::log(3.0), 0.0});
    CHECK(closed[0] == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(closed[1] == doctest::Approx(0.25).epsilon(1e-12));

    const std::vector<double> big = softmax({1000.0, 0.0});
    CHECK(big[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(big[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::isfinite(big[0]));
}

TEST_CASE("softmax matches the direct-formula reference and normalizes") {
    Rng rng(505);
    for (int trial = 0; trial < 60; ++trial) {
        std::vector<double> logits(rng.uniform_int(2, 9));
        for (double& v : logits) v = rng.uniform(-6.0, 6.0);
        const std::vector<double> got = softmax(logits);
        const std::vector<double> want = naive_softmax(logits);
        double sum = 0.0;
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-9));
            CHECK(got[i] > 0.0);
            sum += got[i];
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("softmax rejects non-finite logits") {
    CHECK_THROWS_AS(softmax({std::nan(""), 0.0}), Error);
}
