#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>

#include "facescan/image.hpp"

namespace facescan {

namespace {

struct SampleWeights {
    int lo, hi;
    double frac;
};

SampleWeights edge_clamped(double src, int limit) {
    const double f = std::floor(src);
    SampleWeights s;
    s.frac = src - f;
    s.lo = std::clamp(static_cast<int>(f), 0, limit - 1);
    s.hi = std::clamp(static_cast<int>(f) + 1, 0, limit - 1);
    return s;
}

Image resize_with_factors(const Image& img, int oh, int ow, double fy, double fx) {
    if (oh < 1 || ow < 1)
        fail(ErrorKind::InvalidArgument, "resize target collapses to an empty image");
    Image out(img.channels, oh, ow);
    std::vector<SampleWeights> cols(ow);
    for (int x = 0; x < ow; ++x) cols[x] = edge_clamped((x + 0.5) / fx - 0.5, img.width);
    for (int c = 0; c < img.channels; ++c) {
        const double* src = img.plane(c);
        double* dst = out.data.data() + static_cast<std::size_t>(c) * oh * ow;
        for (int y = 0; y < oh; ++y) {
            const SampleWeights r = edge_clamped((y + 0.5) / fy - 0.5, img.height);
            const double* top = src + static_cast<std::size_t>(r.lo) * img.width;
            const double* bot = src + static_cast<std::size_t>(r.hi) * img.width;
            for (int x = 0; x < ow; ++x) {
                const SampleWeights& cw = cols[x];
                const double t = top[cw.lo] + (top[cw.hi] - top[cw.lo]) * cw.frac;
                const double b = bot[cw.lo] + (bot[cw.hi] - bot[cw.lo]) * cw.frac;
                dst[static_cast<std::size_t>(y) * ow + x] = t + (b - t) * r.frac;
            }
        }
    }
    return out;
}

}  // namespace

Image resize_bilinear(const Image& img, double factor) {
    if (!(factor > 0.0))
        fail(ErrorKind::InvalidArgument, "resize factor must be positive");
    const int oh = scaled_dim(img.height, factor);
    const int ow = scaled_dim(img.width, factor);
    if (oh < 1 || ow < 1)
        fail(ErrorKind::InvalidArgument, "resize factor collapses the image to an empty raster");
    return resize_with_factors(img, oh, ow, factor, factor);
}

Image resize_to(const Image& img, int out_height, int out_width) {
    if (out_height < 1 || out_width < 1)
        fail(ErrorKind::InvalidArgument, "resize target must be >= 1x1");
    return resize_with_factors(img, out_height, out_width,
                               static_cast<double>(out_height) / img.height,
                               static_cast<double>(out_width) / img.width);
}

Image to_gray(const Image& img) {
    if (img.channels == 1) return img;
    if (img.channels != 3) fail(ErrorKind::InvalidArgument, "expected a 1- or 3-channel image");
    Image out(1, img.height, img.width);
    const double* r = img.plane(0);
    const double* g = img.plane(1);
    const double* b = img.plane(2);
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return out;
}

Image to_rgb(const Image& img) {
    if (img.channels == 3) return img;
    if (img.channels != 1) fail(ErrorKind::InvalidArgument, "expected a 1- or 3-channel image");
    Image out(3, img.height, img.width);
    const std::size_t plane = img.data.size();
    for (int c = 0; c < 3; ++c)
        std::copy(img.data.begin(), img.data.end(),
                  out.data.begin() + static_cast<std::size_t>(c) * plane);
    return out;
}

Image adapt_channels(const Image& img, int channels) {
    if (channels == 1) return to_gray(img);
    if (channels == 3) return to_rgb(img);
    fail(ErrorKind::InvalidArgument, "networks take 1- or 3-channel input");
}

Tensor to_tensor(const Image& img) {
    Tensor t(img.channels, img.height, img.width);
    t.data = img.data;
    return t;
}

Image to_image(const Tensor& t) {
    Image img(t.channels, t.height, t.width);
    img.data = t.data;
    return img;
}

Image crop(const Image& img, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width || y + h > img.height)
        fail(ErrorKind::InvalidArgument, "crop rectangle leaves the image");
    Image out(img.channels, h, w);
    for (int c = 0; c < img.channels; ++c) {
        const double* src = img.plane(c);
        double* dst = out.data.data() + static_cast<std::size_t>(c) * h * w;
        for (int row = 0; row < h; ++row)
            std::memcpy(dst + static_cast<std::size_t>(row) * w,
                        src + (static_cast<std::size_t>(y + row) * img.width + x),
                        sizeof(double) * w);
    }
    return out;
}

// ---- PNM ----

namespace {

std::uint8_t to_byte(double v) {
    const double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

// skips whitespace and '#' comments, then reads a decimal token
int pnm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        if (std::isspace(bytes[pos])) {
            ++pos;
        } else if (bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
        fail(ErrorKind::Parse, "pnm header: expected a number");
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1000000000L) fail(ErrorKind::Parse, "pnm header: number out of range");
        ++pos;
    }
    return static_cast<int>(v);
}

}  // namespace

Image decode_pnm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        fail(ErrorKind::Parse, "not a binary pgm/ppm file");
    const int channels = bytes[1] == '5' ? 1 : 3;
    std::size_t pos = 2;
    const int w = pnm_int(bytes, pos);
    const int h = pnm_int(bytes, pos);
    const int maxval = pnm_int(bytes, pos);
    if (w < 1 || h < 1) fail(ErrorKind::Parse, "pnm: empty raster");
    if (maxval != 255) fail(ErrorKind::Parse, "pnm: only maxval 255 is supported");
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        fail(ErrorKind::Parse, "pnm: missing separator before raster");
    ++pos;  // single whitespace byte after maxval
    const std::size_t need = static_cast<std::size_t>(w) * h * channels;
    if (bytes.size() - pos < need) fail(ErrorKind::Truncated, "pnm raster is shorter than the header promises");

    Image img(channels, h, w);
    // interleaved on disk, planar in memory
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) = bytes[pos + (static_cast<std::size_t>(y) * w + x) * channels + c];
    return img;
}

std::vector<std::uint8_t> encode_pnm(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        fail(ErrorKind::InvalidArgument, "pnm supports 1- or 3-channel images");
    std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" +
                         std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + img.data.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) out.push_back(to_byte(img.at(c, y, x)));
    return out;
}

// ---- files ----

std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorKind::Io, "read failed: " + path);
    return bytes;
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot create " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
    if (s.size() < suffix.size()) return false;
    for (std::size_t i = 0; i < suffix.size(); ++i)
        if (std::tolower(s[s.size() - suffix.size() + i]) != suffix[i]) return false;
    return true;
}

}  // namespace

Image read_image(const std::string& path) {
    const std::vector<std::uint8_t> bytes = read_file(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6'))
        return decode_pnm(bytes);
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
        bytes[3] == 'G')
        return decode_png(bytes);
    fail(ErrorKind::Parse, path + ": unrecognized image format (want pgm, ppm, or png)");
}

void write_image(const std::string& path, const Image& img) {
    if (has_suffix(path, ".png")) {
        write_file(path, encode_png(img));
    } else if (has_suffix(path, ".pgm")) {
        write_file(path, encode_pnm(to_gray(img)));
    } else if (has_suffix(path, ".ppm")) {
        write_file(path, encode_pnm(to_rgb(img)));
    } else {
        fail(ErrorKind::InvalidArgument, path + ": unsupported output extension (want .pgm, .ppm, or .png)");
    }
}

}  // namespace facescan
