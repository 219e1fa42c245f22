#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>

#include <zlib.h>

#include "facescan/image.hpp"

// Minimal PNG support: 8-bit, non-interlaced, gray / gray+alpha / rgb / rgba.
// zlib does the compression; chunk framing and row filters live here.

namespace facescan {

namespace {

std::uint32_t read_u32(const std::uint8_t* p) {
    return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
           (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

void push_u32(std::vector<std::uint8_t>& v, std::uint32_t x) {
    v.push_back(static_cast<std::uint8_t>(x >> 24));
    v.push_back(static_cast<std::uint8_t>(x >> 16));
    v.push_back(static_cast<std::uint8_t>(x >> 8));
    v.push_back(static_cast<std::uint8_t>(x));
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

void unfilter_rows(std::vector<std::uint8_t>& raw, int height, std::size_t row_bytes, int bpp) {
    std::vector<std::uint8_t> prev(row_bytes, 0);
    for (int y = 0; y < height; ++y) {
        std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (row_bytes + 1);
        const int filter = row[0];
        std::uint8_t* cur = row + 1;
        switch (filter) {
            case 0:
                break;
            case 1:
                for (std::size_t i = bpp; i < row_bytes; ++i) cur[i] += cur[i - bpp];
                break;
            case 2:
                for (std::size_t i = 0; i < row_bytes; ++i) cur[i] += prev[i];
                break;
            case 3:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    cur[i] += static_cast<std::uint8_t>((left + prev[i]) / 2);
                }
                break;
            case 4:
                for (std::size_t i = 0; i < row_bytes; ++i) {
                    const int left = i >= static_cast<std::size_t>(bpp) ? cur[i - bpp] : 0;
                    const int upleft = i >= static_cast<std::size_t>(bpp) ? prev[i - bpp] : 0;
                    cur[i] += static_cast<std::uint8_t>(paeth(left, prev[i], upleft));
                }
                break;
            default:
                fail(ErrorKind::Parse, "png: unknown row filter " + std::to_string(filter));
        }
        std::memcpy(prev.data(), cur, row_bytes);
    }
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[5],
                  const std::vector<std::uint8_t>& payload) {
    push_u32(out, static_cast<std::uint32_t>(payload.size()));
    const std::size_t crc_start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), payload.begin(), payload.end());
    const uLong crc = crc32(crc32(0L, Z_NULL, 0), out.data() + crc_start,
                            static_cast<uInt>(out.size() - crc_start));
    push_u32(out, static_cast<std::uint32_t>(crc));
}

const std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

}  // namespace

Image decode_png(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0)
        fail(ErrorKind::Parse, "png: bad signature");

    int width = 0, height = 0, color_type = -1, source_channels = 0;
    std::vector<std::uint8_t> idat;
    std::size_t pos = 8;
    bool saw_ihdr = false, saw_iend = false;
    while (pos + 8 <= bytes.size() && !saw_iend) {
        const std::uint32_t len = read_u32(bytes.data() + pos);
        if (pos + 12 + len > bytes.size()) fail(ErrorKind::Truncated, "png: chunk runs past end of file");
        const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
        const std::uint8_t* payload = bytes.data() + pos + 8;
        if (std::memcmp(type, "IHDR", 4) == 0) {
            if (len != 13) fail(ErrorKind::Parse, "png: bad IHDR length");
            width = static_cast<int>(read_u32(payload));
            height = static_cast<int>(read_u32(payload + 4));
            const int bit_depth = payload[8];
            color_type = payload[9];
            const int interlace = payload[12];
            if (width < 1 || height < 1) fail(ErrorKind::Parse, "png: empty raster");
            if (bit_depth != 8) fail(ErrorKind::Parse, "png: only 8-bit depth is supported");
            if (interlace != 0) fail(ErrorKind::Parse, "png: interlaced files are not supported");
            switch (color_type) {
                case 0: source_channels = 1; break;
                case 2: source_channels = 3; break;
                case 4: source_channels = 2; break;
                case 6: source_channels = 4; break;
                default: fail(ErrorKind::Parse, "png: unsupported color type " + std::to_string(color_type));
            }
            saw_ihdr = true;
        } else if (std::memcmp(type, "IDAT", 4) == 0) {
            idat.insert(idat.end(), payload, payload + len);
        } else if (std::memcmp(type, "IEND", 4) == 0) {
            saw_iend = true;
        }
        pos += 12 + len;  // length + type + payload + crc
    }
    if (!saw_ihdr) fail(ErrorKind::Parse, "png: missing IHDR");
    if (idat.empty()) fail(ErrorKind::Parse, "png: missing IDAT");

    const std::size_t row_bytes = static_cast<std::size_t>(width) * source_channels;
    const std::size_t raw_size = static_cast<std::size_t>(height) * (row_bytes + 1);
    std::vector<std::uint8_t> raw(raw_size);
    uLongf dest_len = raw_size;
    const int rc = uncompress(raw.data(), &dest_len, idat.data(), static_cast<uLong>(idat.size()));
    if (rc != Z_OK || dest_len != raw_size) fail(ErrorKind::Parse, "png: inflate failed");
    unfilter_rows(raw, height, row_bytes, source_channels);

    const bool has_alpha = color_type == 4 || color_type == 6;
    const int channels = source_channels - (has_alpha ? 1 : 0);
    Image img(channels, height, width);
    for (int y = 0; y < height; ++y) {
        const std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * (row_bytes + 1) + 1;
        for (int x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) = row[static_cast<std::size_t>(x) * source_channels + c];
    }
    return img;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.channels != 1 && img.channels != 3)
        fail(ErrorKind::InvalidArgument, "png encoder takes 1- or 3-channel images");

    const std::size_t row_bytes = static_cast<std::size_t>(img.width) * img.channels;
    std::vector<std::uint8_t> raw;
    raw.reserve(static_cast<std::size_t>(img.height) * (row_bytes + 1));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);  // filter: none
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c) {
                const double v = std::floor(img.at(c, y, x) + 0.5);
                raw.push_back(static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0)));
            }
    }

    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> compressed(bound);
    if (compress2(compressed.data(), &bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK)
        fail(ErrorKind::Io, "png: deflate failed");
    compressed.resize(bound);

    std::vector<std::uint8_t> ihdr;
    push_u32(ihdr, static_cast<std::uint32_t>(img.width));
    push_u32(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.push_back(8);                                  // bit depth
    ihdr.push_back(img.channels == 1 ? 0 : 2);          // color type
    ihdr.push_back(0);                                  // compression
    ihdr.push_back(0);                                  // filter method
    ihdr.push_back(0);                                  // no interlace

    std::vector<std::uint8_t> out(kSignature, kSignature + 8);
    append_chunk(out, "IHDR", ihdr);
    append_chunk(out, "IDAT", compressed);
    append_chunk(out, "IEND", {});
    return out;
}

}  // namespace facescan
