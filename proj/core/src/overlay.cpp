#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "facescan/overlay.hpp"

namespace facescan {

namespace {

// 5x7 glyphs for '0'-'9' and '.', one byte per row, low 5 bits used
const std::uint8_t kGlyphs[11][7] = {
    {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
    {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
    {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
    {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
    {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
    {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
    {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
    {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
    {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
    {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
    {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c},  // .
};

struct Color {
    double r, g, b;
};

const Color kBoxColor{60.0, 220.0, 60.0};
const Color kTextColor{255.0, 255.0, 255.0};
const Color kTextShadow{0.0, 0.0, 0.0};

void put_pixel(Image& img, int x, int y, const Color& c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    img.at(0, y, x) = c.r;
    img.at(1, y, x) = c.g;
    img.at(2, y, x) = c.b;
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, const Color& c) {
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) put_pixel(img, x, y, c);
}

void draw_box(Image& img, const Box& b, int thickness, const Color& c) {
    const int x0 = static_cast<int>(std::floor(b.x + 0.5));
    const int y0 = static_cast<int>(std::floor(b.y + 0.5));
    const int x1 = static_cast<int>(std::floor(b.right() + 0.5));
    const int y1 = static_cast<int>(std::floor(b.bottom() + 0.5));
    fill_rect(img, x0, y0, x1, y0 + thickness, c);
    fill_rect(img, x0, y1 - thickness, x1, y1, c);
    fill_rect(img, x0, y0, x0 + thickness, y1, c);
    fill_rect(img, x1 - thickness, y0, x1, y1, c);
}

void draw_glyph(Image& img, int x, int y, int glyph, const Color& c) {
    for (int row = 0; row < 7; ++row)
        for (int col = 0; col < 5; ++col)
            if (kGlyphs[glyph][row] & (1 << (4 - col))) put_pixel(img, x + col, y + row, c);
}

void draw_text(Image& img, int x, int y, const char* text) {
    for (const char* p = text; *p; ++p, x += 6) {
        int glyph;
        if (*p >= '0' && *p <= '9') glyph = *p - '0';
        else if (*p == '.') glyph = 10;
        else continue;
        draw_glyph(img, x + 1, y + 1, glyph, kTextShadow);
        draw_glyph(img, x, y, glyph, kTextColor);
    }
}

}  // namespace

Image draw_detections(const Image& img, std::span<const Detection> dets) {
    Image out = to_rgb(img);
    char label[16];
    for (const Detection& d : dets) {
        draw_box(out, d.box, 2, kBoxColor);
        std::snprintf(label, sizeof(label), "%.2f", d.score);
        const int tx = static_cast<int>(std::floor(d.box.x + 0.5)) + 3;
        const int ty = static_cast<int>(std::floor(d.box.y + 0.5)) + 3;
        draw_text(out, tx, ty, label);
    }
    return out;
}

}  // namespace facescan
