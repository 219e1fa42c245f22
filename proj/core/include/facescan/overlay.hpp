#pragma once

#include <span>

#include "facescan/geometry.hpp"
#include "facescan/image.hpp"

namespace facescan {

// RGB copy of the image with 2-pixel box outlines and the score printed at
// the top-left corner of each box using a built-in 5x7 digit bitmap, so no
// font dependency is needed.
Image draw_detections(const Image& img, std::span<const Detection> dets);

}  // namespace facescan
