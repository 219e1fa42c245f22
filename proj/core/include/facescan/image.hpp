#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "facescan/errors.hpp"
#include "facescan/tensor.hpp"

namespace facescan {

// Planar raster image, samples in [0, 255], channel-major like Tensor.
// channels is 1 (gray) or 3 (rgb).
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;

    Image(int c, int h, int w, double fill = 0.0) : channels(c), height(h), width(w) {
        if (c < 1 || h < 1 || w < 1)
            fail(ErrorKind::InvalidArgument, "image dimensions must be >= 1");
        data.assign(static_cast<std::size_t>(c) * h * w, fill);
    }

    std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    double& at(int c, int y, int x) { return data[index(c, y, x)]; }
    double at(int c, int y, int x) const { return data[index(c, y, x)]; }
    const double* plane(int c) const { return data.data() + static_cast<std::size_t>(c) * height * width; }
};

// round-half-up both axes
inline int scaled_dim(int dim, double factor) {
    return static_cast<int>(std::floor(static_cast<double>(dim) * factor + 0.5));
}

// Bilinear rescale. Destination sample (x, y) reads the source at
// ((x + 0.5) / factor - 0.5, (y + 0.5) / factor - 0.5) with edge clamping,
// so output values never leave the input range.
Image resize_bilinear(const Image& img, double factor);

// Bilinear rescale to an exact target size (per-axis factors).
Image resize_to(const Image& img, int out_height, int out_width);

// Rec.601 luma. Gray input is returned as-is.
Image to_gray(const Image& img);
// Channel replication for gray input; rgb returned as-is.
Image to_rgb(const Image& img);

// Match the channel count a network expects (1 or 3).
Image adapt_channels(const Image& img, int channels);

Tensor to_tensor(const Image& img);
Image to_image(const Tensor& t);

// Extract a pixel-aligned crop; the rectangle must lie inside the image.
Image crop(const Image& img, int x, int y, int w, int h);

// ---- codecs ----
// PGM (P5) and PPM (P6), binary, maxval 255. PNG limited to 8-bit
// non-interlaced gray / gray+alpha / rgb / rgba (alpha dropped on read).

Image decode_pnm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_pnm(const Image& img);
Image decode_png(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_png(const Image& img);

// Dispatch on content magic (read) or file extension (write: .pgm/.ppm/.png).
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace facescan
