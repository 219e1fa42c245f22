#include <algorithm>
#include <cmath>
#include <cstdio>

#include "facescan/nms.hpp"
#include "facescan/rng.hpp"
#include "synthetic.hpp"

namespace facescan::testing {

namespace {

double smoothstep(double lo, double hi, double v) {
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

// Radial profile of the target: bright core, dark ring, bright ring, then
// background. d is distance / (side / 2), contrast scales the swing.
double target_profile(double d, double background, double contrast) {
    const double bright = background + 100.0 * contrast;
    const double dark = background - 95.0 * contrast;
    double v = bright;
    v = v + (dark - v) * smoothstep(0.26, 0.36, d);    // core -> dark ring
    v = v + (bright - v) * smoothstep(0.58, 0.68, d);  // dark -> bright ring
    v = v + (background - v) * smoothstep(0.90, 1.0, d);
    return v;
}

void splat_disc(Image& img, Rng& rng, double cx, double cy, double radius, double delta) {
    const int x0 = std::max(0, static_cast<int>(cx - radius - 2));
    const int x1 = std::min(img.width - 1, static_cast<int>(cx + radius + 2));
    const int y0 = std::max(0, static_cast<int>(cy - radius - 2));
    const int y1 = std::min(img.height - 1, static_cast<int>(cy + radius + 2));
    (void)rng;
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - cx, y - cy) / radius;
            if (d > 1.0) continue;
            img.at(0, y, x) += delta * (1.0 - smoothstep(0.8, 1.0, d));
        }
}

void splat_arc(Image& img, double cx, double cy, double r_in, double r_out, double a0,
               double a1, double delta) {
    const double r_max = r_out + 2;
    const int x0 = std::max(0, static_cast<int>(cx - r_max));
    const int x1 = std::min(img.width - 1, static_cast<int>(cx + r_max));
    const int y0 = std::max(0, static_cast<int>(cy - r_max));
    const int y1 = std::min(img.height - 1, static_cast<int>(cy + r_max));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double r = std::hypot(x - cx, y - cy);
            if (r < r_in || r > r_out) continue;
            double angle = std::atan2(y - cy, x - cx);
            if (angle < a0) angle += 2 * 3.14159265358979323846;
            if (angle >= a0 && angle <= a1) img.at(0, y, x) += delta;
        }
}

void splat_bar(Image& img, Rng& rng, double delta) {
    const bool horizontal = rng.flip();
    const int len = rng.uniform_int(14, 44);
    const int thick = rng.uniform_int(3, 7);
    const int w = horizontal ? len : thick;
    const int h = horizontal ? thick : len;
    if (img.width <= w || img.height <= h) return;
    const int x0 = rng.uniform_int(0, img.width - w - 1);
    const int y0 = rng.uniform_int(0, img.height - h - 1);
    for (int y = y0; y < y0 + h; ++y)
        for (int x = x0; x < x0 + w; ++x) img.at(0, y, x) += delta;
}

}  // namespace

void draw_target(Image& img, double cx, double cy, double side, double contrast) {
    const double radius = side / 2.0;
    const int x0 = std::max(0, static_cast<int>(cx - radius - 1));
    const int x1 = std::min(img.width - 1, static_cast<int>(cx + radius + 1));
    const int y0 = std::max(0, static_cast<int>(cy - radius - 1));
    const int y1 = std::min(img.height - 1, static_cast<int>(cy + radius + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - cx, y - cy) / radius;
            if (d > 1.0) continue;
            const double background = img.at(0, y, x);
            img.at(0, y, x) = target_profile(d, background, contrast);
        }
}

SyntheticScene make_scene(std::uint64_t seed, int size, int min_targets, int max_targets,
                          double min_side, double max_side) {
    Rng rng(seed);
    SyntheticScene scene;
    scene.image = Image(1, size, size);

    // background: plateau + gentle gradient + noise
    const double base = rng.uniform(112.0, 144.0);
    const double gx = rng.uniform(-0.12, 0.12);
    const double gy = rng.uniform(-0.12, 0.12);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            scene.image.at(0, y, x) = base + gx * (x - size / 2.0) + gy * (y - size / 2.0);

    // Targets first so clutter placement can avoid them. Multi-target
    // scenes keep centers far apart: a window squeezed between two nearby
    // targets overlaps each in the (0.3, 0.5) IOU band, where it can be
    // labeled neither positive nor negative.
    const double min_center_distance = 1.6 * max_side;
    const int targets = rng.uniform_int(min_targets, max_targets);
    for (int t = 0; t < targets; ++t) {
        for (int attempt = 0; attempt < 60; ++attempt) {
            const double side = rng.uniform(min_side, max_side);
            const double margin = side / 2.0 + 4.0;
            if (2 * margin >= size) continue;
            const double cx = rng.uniform(margin, size - margin);
            const double cy = rng.uniform(margin, size - margin);
            const Box candidate{cx - side / 2.0, cy - side / 2.0, side, side};
            bool clear = true;
            for (const Box& g : scene.gts)
                if (std::hypot(g.cx() - cx, g.cy() - cy) < min_center_distance) clear = false;
            if (!clear) continue;
            draw_target(scene.image, cx, cy, side, rng.uniform(0.85, 1.0));
            scene.gts.push_back(candidate);
            break;
        }
    }

    // clutter that keeps out of the target boxes
    const int clutter = rng.uniform_int(6, 12);
    for (int i = 0; i < clutter; ++i) {
        const int kind = rng.uniform_int(0, 2);
        const double delta = (rng.flip() ? 1.0 : -1.0) * rng.uniform(35.0, 80.0);
        if (kind == 0) {
            const double radius = rng.uniform(4.0, 16.0);
            const double cx = rng.uniform(radius, size - radius);
            const double cy = rng.uniform(radius, size - radius);
            const Box spot{cx - radius, cy - radius, 2 * radius, 2 * radius};
            bool clear = true;
            for (const Box& g : scene.gts)
                if (iou(spot, g) > 0.0) clear = false;
            if (clear) splat_disc(scene.image, rng, cx, cy, radius, delta);
        } else if (kind == 1) {
            splat_bar(scene.image, rng, delta * 0.8);
        } else {
            const double r_out = rng.uniform(8.0, 18.0);
            const double r_in = r_out - rng.uniform(2.5, 5.0);
            const double cx = rng.uniform(r_out, size - r_out);
            const double cy = rng.uniform(r_out, size - r_out);
            const Box spot{cx - r_out, cy - r_out, 2 * r_out, 2 * r_out};
            bool clear = true;
            for (const Box& g : scene.gts)
                if (iou(spot, g) > 0.0) clear = false;
            if (!clear) continue;
            const double a0 = rng.uniform(0.0, 6.283);
            splat_arc(scene.image, cx, cy, r_in, r_out, a0, a0 + rng.uniform(1.2, 3.5), delta);
        }
    }

    // sensor noise, then clamp to the sample range
    for (double& v : scene.image.data) {
        v += rng.normal() * 4.5;
        v = std::clamp(v, 0.0, 255.0);
    }
    return scene;
}

std::vector<SyntheticScene> make_corpus(std::uint64_t seed, int count, int size) {
    std::vector<SyntheticScene> scenes;
    scenes.reserve(count);
    char id[32];
    for (int i = 0; i < count; ++i) {
        SyntheticScene s = make_scene(derive_seed(seed, i), size);
        std::snprintf(id, sizeof(id), "img_%04d", i);
        s.id = id;
        scenes.push_back(std::move(s));
    }
    return scenes;
}

}  // namespace facescan::testing
