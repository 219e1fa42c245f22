#pragma once

#include <cmath>
#include <ostream>
#include <vector>

#include "facescan/image.hpp"

namespace facescan {

// Per-level downscale ratio: three levels per octave.
inline double default_scale_step() { return std::cbrt(0.5); }

struct PyramidConfig {
    double upscale = 5.0;               // level-0 magnification
    double scale_step = default_scale_step();  // f_s, ratio between consecutive levels
    int min_dim = 0;                    // usually the network window
};

struct PyramidLevel {
    Image image;
    double scale = 1.0;  // level resolution / original resolution
};

// Level k is the original image resized by upscale * scale_step^k. Levels
// are emitted while min(level dims) >= min_dim; each level is resampled
// from the original in one jump, not from the previous level. An image
// whose level 0 is already below min_dim yields an empty list (and a note
// on `log` when given).
std::vector<PyramidLevel> build_pyramid(const Image& img, const PyramidConfig& cfg,
                                        std::ostream* log = nullptr);

}  // namespace facescan
