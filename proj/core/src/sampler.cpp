#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "facescan/nms.hpp"  // iou
#include "facescan/rng.hpp"
#include "facescan/sampler.hpp"

namespace facescan {

int BatchSpec::positive_count() const {
    if (size < 1 || !(positive_fraction > 0.0) || !(positive_fraction < 1.0))
        fail(ErrorKind::InvalidArgument, "batch needs size >= 1 and fraction in (0, 1)");
    const double exact = size * positive_fraction;
    const double rounded = std::floor(exact + 0.5);
    if (std::abs(exact - rounded) > 1e-9)
        fail(ErrorKind::InvalidArgument, "batch size times positive fraction must be integral");
    return static_cast<int>(rounded);
}

namespace {

constexpr int kAttemptsPerPatch = 200;

struct IntRect {
    int x, y, w, h;
};

// round to pixel grid; the recorded source rect is what actually got cut
IntRect round_rect(double x, double y, double w, double h) {
    IntRect r;
    r.x = static_cast<int>(std::floor(x + 0.5));
    r.y = static_cast<int>(std::floor(y + 0.5));
    r.w = std::max(1, static_cast<int>(std::floor(w + 0.5)));
    r.h = std::max(1, static_cast<int>(std::floor(h + 0.5)));
    return r;
}

IntRect clamp_rect(IntRect r, int img_w, int img_h) {
    r.x = std::clamp(r.x, 0, img_w - 1);
    r.y = std::clamp(r.y, 0, img_h - 1);
    r.w = std::min(r.w, img_w - r.x);
    r.h = std::min(r.h, img_h - r.y);
    return r;
}

Patch cut_patch(const Image& img, const std::string& image_id, const IntRect& r, bool face,
                int window) {
    Patch p;
    p.face = face;
    p.image_id = image_id;
    p.source = {static_cast<double>(r.x), static_cast<double>(r.y), static_cast<double>(r.w),
                static_cast<double>(r.h)};
    const Image patch = resize_to(crop(img, r.x, r.y, r.w, r.h), window, window);
    p.tensor = to_tensor(patch);
    return p;
}

Box to_box(const IntRect& r) {
    return {static_cast<double>(r.x), static_cast<double>(r.y), static_cast<double>(r.w),
            static_cast<double>(r.h)};
}

}  // namespace

std::vector<Patch> sample_positives(const Image& img, const std::string& image_id,
                                    std::span<const Box> gts, double iou_min, int count,
                                    std::uint64_t seed, int window) {
    if (!(iou_min > 0.0) || iou_min > 1.0)
        fail(ErrorKind::InvalidArgument, "iou_min must lie in (0, 1]");
    if (gts.empty())
        fail(ErrorKind::InvalidArgument, "positive sampling needs at least one ground-truth box");
    if (count < 0) fail(ErrorKind::InvalidArgument, "count must be >= 0");
    if (window < 1) fail(ErrorKind::InvalidArgument, "window must be >= 1");

    Rng rng(seed);
    std::vector<Patch> patches;
    patches.reserve(count);
    while (static_cast<int>(patches.size()) < count) {
        bool accepted = false;
        for (int attempt = 0; attempt < kAttemptsPerPatch && !accepted; ++attempt) {
            const Box& gt = gts[rng.below(gts.size())];
            const double s = rng.uniform(0.7, 1.4);
            const double dx = rng.uniform(-0.5, 0.5) * gt.w;
            const double dy = rng.uniform(-0.5, 0.5) * gt.h;
            const double w = gt.w * s;
            const double h = gt.h * s;
            IntRect r = round_rect(gt.cx() + dx - w / 2.0, gt.cy() + dy - h / 2.0, w, h);
            r = clamp_rect(r, img.width, img.height);
            const Box candidate = to_box(r);
            double best = 0.0;
            for (const Box& g : gts) best = std::max(best, iou(candidate, g));
            if (best > iou_min) {
                patches.push_back(cut_patch(img, image_id, r, true, window));
                accepted = true;
            }
        }
        if (!accepted)
            fail(ErrorKind::SamplingExhausted,
                 image_id + ": no window with IOU > " + std::to_string(iou_min) + " found in " +
                     std::to_string(kAttemptsPerPatch) + " attempts");
    }
    return patches;
}

std::vector<Patch> sample_negatives(const Image& img, const std::string& image_id,
                                    std::span<const Box> gts, double iou_max, int count,
                                    std::uint64_t seed, int window) {
    if (iou_max < 0.0 || !(iou_max < 1.0))
        fail(ErrorKind::InvalidArgument, "iou_max must lie in [0, 1)");
    if (count < 0) fail(ErrorKind::InvalidArgument, "count must be >= 0");
    if (window < 1) fail(ErrorKind::InvalidArgument, "window must be >= 1");

    const int max_side = std::min(img.width, img.height);
    const int min_side = std::min(std::max(4, window / 2), max_side);

    Rng rng(seed);
    std::vector<Patch> patches;
    patches.reserve(count);
    while (static_cast<int>(patches.size()) < count) {
        bool accepted = false;
        for (int attempt = 0; attempt < kAttemptsPerPatch && !accepted; ++attempt) {
            // Half the proposals anchor on a ground-truth box so the pool
            // carries hard cases: containers that see the object small,
            // interior fragments that see it too large, and near misses.
            // The acceptance rule below holds for all of them.
            IntRect r;
            if (!gts.empty() && rng.flip()) {
                // Proposals hug the IOU boundary; the acceptance filter below
                // throws away the illegal ones, leaving the hardest legal cases.
                const Box& gt = gts[rng.below(gts.size())];
                const double base = std::max(gt.w, gt.h);
                const int mode = rng.uniform_int(0, 2);
                double side, dx = 0.0, dy = 0.0;
                if (mode == 0) {
                    side = base * rng.uniform(1.4, 4.0);
                    dx = rng.uniform(-0.4, 0.4) * side;
                    dy = rng.uniform(-0.4, 0.4) * side;
                } else if (mode == 1) {
                    side = base * rng.uniform(0.3, 0.8);
                    dx = rng.uniform(-0.4, 0.4) * gt.w;
                    dy = rng.uniform(-0.4, 0.4) * gt.h;
                } else {
                    side = base * rng.uniform(0.8, 1.3);
                    dx = (rng.flip() ? 1.0 : -1.0) * rng.uniform(0.4, 1.5) * gt.w;
                    dy = (rng.flip() ? 1.0 : -1.0) * rng.uniform(0.4, 1.5) * gt.h;
                }
                r = round_rect(gt.cx() + dx - side / 2.0, gt.cy() + dy - side / 2.0, side, side);
                r = clamp_rect(r, img.width, img.height);
            } else {
                const int side = rng.uniform_int(min_side, max_side);
                r = {rng.uniform_int(0, img.width - side), rng.uniform_int(0, img.height - side),
                     side, side};
            }
            const Box candidate = to_box(r);
            bool clear = true;
            for (const Box& g : gts)
                if (iou(candidate, g) > iou_max) {
                    clear = false;
                    break;
                }
            if (clear) {
                patches.push_back(cut_patch(img, image_id, r, false, window));
                accepted = true;
            }
        }
        if (!accepted)
            fail(ErrorKind::SamplingExhausted,
                 image_id + ": no window with IOU <= " + std::to_string(iou_max) +
                     " against all ground truth found in " + std::to_string(kAttemptsPerPatch) +
                     " attempts");
    }
    return patches;
}

Patch flip_patch(const Patch& p) {
    Patch out = p;
    const Tensor& t = p.tensor;
    for (int c = 0; c < t.channels; ++c)
        for (int y = 0; y < t.height; ++y)
            for (int x = 0; x < t.width; ++x)
                out.tensor.at(c, y, x) = t.at(c, y, t.width - 1 - x);
    out.flipped = !p.flipped;
    return out;
}

std::vector<Patch> compose_batch(std::span<const Patch> positives,
                                 std::span<const Patch> negatives, const BatchSpec& spec,
                                 std::uint64_t seed) {
    const int n_pos = spec.positive_count();
    const int n_neg = spec.size - n_pos;
    if (positives.empty() || negatives.empty())
        fail(ErrorKind::InvalidArgument, "batch composition needs non-empty pools");

    Rng rng(seed);
    std::vector<Patch> batch;
    batch.reserve(spec.size);
    for (int i = 0; i < n_pos; ++i) batch.push_back(positives[rng.below(positives.size())]);
    for (int i = 0; i < n_neg; ++i) batch.push_back(negatives[rng.below(negatives.size())]);
    for (Patch& p : batch)
        if (rng.flip()) p = flip_patch(p);
    // Fisher-Yates
    for (int i = spec.size - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
        std::swap(batch[i], batch[j]);
    }
    return batch;
}

std::vector<PoseAnnotation> parse_pose_annotations(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::vector<PoseAnnotation> out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (line[line.find_first_not_of(" \t")] == '#') continue;
        std::istringstream ss(line);
        PoseAnnotation a;
        if (!(ss >> a.id >> a.roll >> a.pitch >> a.yaw))
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) +
                                       ": want 'id roll pitch yaw'");
        if (!std::isfinite(a.roll) || !std::isfinite(a.pitch) || !std::isfinite(a.yaw))
            fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": non-finite angle");
        out.push_back(std::move(a));
    }
    return out;
}

PoseHistograms pose_histogram(std::span<const PoseAnnotation> annotations, double bin_width) {
    if (!(bin_width > 0)) fail(ErrorKind::InvalidArgument, "bin width must be positive");
    const int bins = static_cast<int>(std::ceil(360.0 / bin_width));
    PoseHistograms h;
    h.bin_width = bin_width;
    h.bin_lo.resize(bins);
    for (int i = 0; i < bins; ++i) h.bin_lo[i] = -180.0 + i * bin_width;
    h.roll.assign(bins, 0);
    h.pitch.assign(bins, 0);
    h.yaw.assign(bins, 0);

    auto bin_of = [&](double angle) {
        double a = std::fmod(angle + 180.0, 360.0);
        if (a < 0) a += 360.0;
        const int b = static_cast<int>(a / bin_width);
        return std::min(b, bins - 1);
    };
    for (const PoseAnnotation& a : annotations) {
        ++h.roll[bin_of(a.roll)];
        ++h.pitch[bin_of(a.pitch)];
        ++h.yaw[bin_of(a.yaw)];
    }
    return h;
}

void dump_patches(const std::string& directory, std::span<const Patch> patches) {
    std::filesystem::create_directories(directory);
    std::ostringstream index;
    index << "file\tlabel\timage\tx\ty\tw\th\tflipped\n";
    char name[64];
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Patch& p = patches[i];
        std::snprintf(name, sizeof(name), "patch_%05zu.pgm", i);
        write_image((std::filesystem::path(directory) / name).string(), to_image(p.tensor));
        char row[256];
        std::snprintf(row, sizeof(row), "%s\t%s\t%s\t%.0f\t%.0f\t%.0f\t%.0f\t%d\n", name,
                      p.face ? "face" : "background", p.image_id.c_str(), p.source.x, p.source.y,
                      p.source.w, p.source.h, p.flipped ? 1 : 0);
        index << row;
    }
    const std::string text = index.str();
    write_file((std::filesystem::path(directory) / "index.tsv").string(),
               std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace facescan
