#pragma once

#include <cstddef>
#include <vector>

#include "facescan/errors.hpp"

namespace facescan {

// Dense 3-D array, channel-major then row-major. The carrier for images
// entering the network, feature maps, and score maps.
struct Tensor {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Tensor() = default;

    Tensor(int c, int h, int w, double fill = 0.0)
        : channels(c), height(h), width(w) {
        if (c < 1 || h < 1 || w < 1)
            fail(ErrorKind::InvalidArgument, "tensor dimensions must be >= 1");
        data.assign(static_cast<std::size_t>(c) * h * w, fill);
    }

    std::size_t size() const { return data.size(); }

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }

    double& at(int c, int y, int x) { return data[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data[index(c, y, x)]; }

    const double* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }
    double* plane(int c) { return data.data() + static_cast<std::size_t>(c) * height * width; }

    bool same_shape(const Tensor& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

}  // namespace facescan
