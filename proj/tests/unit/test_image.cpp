#include <algorithm>
#include <cmath>

#include "doctest.h"

#include "facescan/image.hpp"
#include "facescan/rng.hpp"
#include "test_paths.hpp"

using namespace facescan;
using facescan::testing::scratch_dir;

namespace {

Image random_image(Rng& rng, int c, int h, int w) {
    Image img(c, h, w);
    for (double& v : img.data) v = std::floor(rng.uniform(0.0, 256.0));
    return img;
}

}  // namespace

TEST_CASE("resize: factor 1 is the identity") {
    Rng rng(1);
    const Image img = random_image(rng, 1, 9, 13);
    const Image out = resize_bilinear(img, 1.0);
    CHECK(out.data == img.data);
}

TEST_CASE("resize: constants stay constant at any factor") {
    const Image img(3, 8, 8, 77.5);
    for (double f : {0.3, 0.5, 1.7, 3.14}) {
        const Image out = resize_bilinear(img, f);
        CHECK(out.height == scaled_dim(8, f));
        for (double v : out.data) CHECK(v == doctest::Approx(77.5).epsilon(1e-12));
    }
}

TEST_CASE("resize: checkerboard doubling, hand-computed samples") {
    Image img(1, 2, 2);
    img.data = {0, 255, 255, 0};
    const Image out = resize_bilinear(img, 2.0);
    REQUIRE(out.height == 4);
    REQUIRE(out.width == 4);
    // src = (dst + 0.5) / 2 - 0.5; interior samples mix 3:1
    CHECK(out.at(0, 1, 1) == doctest::Approx(95.625).epsilon(1e-12));
    CHECK(out.at(0, 1, 2) == doctest::Approx(159.375).epsilon(1e-12));
    CHECK(out.at(0, 2, 1) == doctest::Approx(159.375).epsilon(1e-12));
    CHECK(out.at(0, 2, 2) == doctest::Approx(95.625).epsilon(1e-12));
    // corners clamp to the nearest source pixel
    CHECK(out.at(0, 0, 0) == doctest::Approx(0.0));
    CHECK(out.at(0, 0, 3) == doctest::Approx(255.0));
}

TEST_CASE("resize: output range never leaves the input range") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Image img = random_image(rng, 1, rng.uniform_int(2, 12), rng.uniform_int(2, 12));
        const double lo = *std::min_element(img.data.begin(), img.data.end());
        const double hi = *std::max_element(img.data.begin(), img.data.end());
        const Image out = resize_bilinear(img, rng.uniform(0.3, 3.0));
        for (double v : out.data) {
            CHECK(v >= lo - 1e-9);
            CHECK(v <= hi + 1e-9);
        }
    }
}

TEST_CASE("resize: collapsing factors are rejected") {
    const Image img(1, 4, 4, 0.0);
    CHECK_THROWS_AS(resize_bilinear(img, 0.05), Error);
    CHECK_THROWS_AS(resize_bilinear(img, -1.0), Error);
    CHECK(resize_to(img, 1, 7).width == 7);
    CHECK_THROWS_AS(resize_to(img, 0, 7), Error);
}

TEST_CASE("gray conversion uses the luma weights") {
    Image img(3, 1, 1);
    img.at(0, 0, 0) = 100;  // r
    img.at(1, 0, 0) = 200;  // g
    img.at(2, 0, 0) = 50;   // b
    const Image gray = to_gray(img);
    CHECK(gray.channels == 1);
    CHECK(gray.at(0, 0, 0) == doctest::Approx(0.299 * 100 + 0.587 * 200 + 0.114 * 50));
    // gray input passes through; rgb replication matches
    CHECK(to_gray(gray).data == gray.data);
    const Image rgb = to_rgb(gray);
    CHECK(rgb.at(0, 0, 0) == rgb.at(2, 0, 0));
}

TEST_CASE("crop extracts the exact rectangle") {
    Rng rng(3);
    const Image img = random_image(rng, 2, 10, 10);
    const Image c = crop(img, 3, 2, 4, 5);
    CHECK(c.width == 4);
    CHECK(c.height == 5);
    CHECK(c.at(1, 0, 0) == img.at(1, 2, 3));
    CHECK(c.at(0, 4, 3) == img.at(0, 6, 6));
    CHECK_THROWS_AS(crop(img, 8, 8, 4, 4), Error);
}

TEST_CASE("pnm: gray and color round trips") {
    Rng rng(4);
    const std::string dir = scratch_dir("pnm");
    for (int channels : {1, 3}) {
        const Image img = random_image(rng, channels, 7, 5);
        const std::string path = dir + (channels == 1 ? "/t.pgm" : "/t.ppm");
        write_image(path, img);
        const Image back = read_image(path);
        CHECK(back.channels == channels);
        CHECK(back.width == 5);
        CHECK(back.height == 7);
        CHECK(back.data == img.data);  // integral samples survive exactly
    }
}

TEST_CASE("pnm: comments and malformed headers") {
    const std::string with_comment = "P5\n# a comment\n2 2\n255\n";
    std::vector<std::uint8_t> bytes(with_comment.begin(), with_comment.end());
    bytes.insert(bytes.end(), {10, 20, 30, 40});
    const Image img = decode_pnm(bytes);
    CHECK(img.at(0, 1, 1) == 40);

    const std::string bad_maxval = "P5\n2 2\n65535\n";
    std::vector<std::uint8_t> bad(bad_maxval.begin(), bad_maxval.end());
    bad.insert(bad.end(), 8, 0);
    CHECK_THROWS_AS(decode_pnm(bad), Error);

    std::vector<std::uint8_t> short_raster(with_comment.begin(), with_comment.end());
    short_raster.insert(short_raster.end(), {1, 2});
    CHECK_THROWS_AS(decode_pnm(short_raster), Error);
}

TEST_CASE("png: gray and color round trips") {
    Rng rng(5);
    const std::string dir = scratch_dir("png");
    for (int channels : {1, 3}) {
        const Image img = random_image(rng, channels, 11, 6);
        const std::string path = dir + "/t" + std::to_string(channels) + ".png";
        write_image(path, img);
        const Image back = read_image(path);
        CHECK(back.channels == channels);
        CHECK(back.width == 6);
        CHECK(back.height == 11);
        CHECK(back.data == img.data);
    }
}

TEST_CASE("png: rejects what it does not support") {
    CHECK_THROWS_AS(decode_png({1, 2, 3, 4}), Error);
    // truncated after the signature
    std::vector<std::uint8_t> sig = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    CHECK_THROWS_AS(decode_png(sig), Error);
}

TEST_CASE("image write dispatches on extension") {
    const std::string dir = scratch_dir("dispatch");
    const Image img(1, 2, 2, 128.0);
    CHECK_THROWS_AS(write_image(dir + "/x.bmp", img), Error);
    write_image(dir + "/x.png", img);
    CHECK(read_image(dir + "/x.png").channels == 1);
}
