#pragma once

#include <algorithm>

namespace facescan {

// Axis-aligned rectangle in pixel coordinates, (x, y) = top-left corner.
struct Box {
    double x = 0;
    double y = 0;
    double w = 0;
    double h = 0;

    double right() const { return x + w; }
    double bottom() const { return y + h; }
    double cx() const { return x + w / 2.0; }
    double cy() const { return y + h / 2.0; }
    double area() const { return (w > 0 && h > 0) ? w * h : 0.0; }
};

inline Box clamp_to(const Box& b, double width, double height) {
    double x0 = std::max(0.0, b.x);
    double y0 = std::max(0.0, b.y);
    double x1 = std::min(width, b.right());
    double y1 = std::min(height, b.bottom());
    return {x0, y0, std::max(0.0, x1 - x0), std::max(0.0, y1 - y0)};
}

// A window the detector scored, mapped back to original-image pixels.
struct Detection {
    Box box;
    double score = 0.0;
    int level = 0;  // pyramid level the window came from
};

}  // namespace facescan
