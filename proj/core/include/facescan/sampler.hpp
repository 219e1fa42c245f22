#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "facescan/geometry.hpp"
#include "facescan/image.hpp"
#include "facescan/tensor.hpp"

namespace facescan {

// A window-sized training example cut from a source image.
struct Patch {
    Tensor tensor;  // window x window, raw [0, 255] samples
    bool face = false;
    std::string image_id;
    Box source;  // rectangle the patch was cut from, original coordinates
    bool flipped = false;
};

struct BatchSpec {
    int size = 128;
    double positive_fraction = 0.25;

    int positive_count() const;  // validates that size * fraction is integral
};

// Random sub-windows with IOU > iou_min against at least one ground-truth
// box, proposed as jittered ground-truth rectangles (scale 0.7..1.4, shift
// up to half the box size) and resized to window x window. Deterministic in
// the seed; throws SamplingExhausted when the attempt budget runs out.
std::vector<Patch> sample_positives(const Image& img, const std::string& image_id,
                                    std::span<const Box> gts, double iou_min, int count,
                                    std::uint64_t seed, int window);

// Random windows with IOU <= iou_max against every ground-truth box. Half
// the proposals are uniform (side between window/2 and the image extent);
// the rest anchor on a ground-truth box to mine hard cases: containing
// windows at 1.7-4x scale, interior fragments at 0.3-0.7x, and shifted
// near misses. Every emitted patch satisfies the IOU bound regardless of
// how it was proposed.
std::vector<Patch> sample_negatives(const Image& img, const std::string& image_id,
                                    std::span<const Box> gts, double iou_max, int count,
                                    std::uint64_t seed, int window);

// Horizontal mirror; label kept, flipped flag toggled (an involution).
Patch flip_patch(const Patch& p);

// Exactly size * positive_fraction positives and the rest negatives, drawn
// uniformly with replacement from the pools, shuffled, each selection
// mirrored with probability 1/2.
std::vector<Patch> compose_batch(std::span<const Patch> positives,
                                 std::span<const Patch> negatives, const BatchSpec& spec,
                                 std::uint64_t seed);

struct PoseAnnotation {
    std::string id;
    double roll = 0;   // in-plane
    double pitch = 0;
    double yaw = 0;
};

// Text lines "id roll pitch yaw", angles in degrees.
std::vector<PoseAnnotation> parse_pose_annotations(const std::string& path);

// Fixed-width bins covering [-180, 180); angles wrap into that range.
struct PoseHistograms {
    double bin_width = 0;
    std::vector<double> bin_lo;  // left edge per bin
    std::vector<long> roll, pitch, yaw;
};

PoseHistograms pose_histogram(std::span<const PoseAnnotation> annotations, double bin_width);

// PGM per patch plus a tab-separated index (file, label, source, flipped).
void dump_patches(const std::string& directory, std::span<const Patch> patches);

}  // namespace facescan
