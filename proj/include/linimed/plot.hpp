#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "linimed/errors.hpp"
#include "linimed/harness.hpp"

namespace linimed {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
};

/// Minimal RGB raster with PNG output; enough to draw curve plots.
class Canvas {
public:
    Canvas(int width, int height, Rgb fill = {255, 255, 255})
        : w_(width), h_(height), px_(static_cast<std::size_t>(width) * height, fill) {}

    int width() const { return w_; }
    int height() const { return h_; }
    Rgb at(int x, int y) const { return px_[static_cast<std::size_t>(y) * w_ + x]; }

    void blend(int x, int y, Rgb c, double opacity = 1.0) {
        if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
        auto& p = px_[static_cast<std::size_t>(y) * w_ + x];
        auto mix = [opacity](std::uint8_t a, std::uint8_t b) {
            return static_cast<std::uint8_t>(std::lround(a * (1.0 - opacity) + b * opacity));
        };
        p = {mix(p.r, c.r), mix(p.g, c.g), mix(p.b, c.b)};
    }

    void line(double x0, double y0, double x1, double y1, Rgb c, int thickness = 1) {
        const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
        for (int i = 0; i <= steps; ++i) {
            const double f = static_cast<double>(i) / steps;
            const int x = static_cast<int>(std::lround(x0 + f * (x1 - x0)));
            const int y = static_cast<int>(std::lround(y0 + f * (y1 - y0)));
            for (int dx = 0; dx < thickness; ++dx)
                for (int dy = 0; dy < thickness; ++dy) blend(x + dx - thickness / 2, y + dy - thickness / 2, c);
        }
    }

    void rect(int x0, int y0, int x1, int y1, Rgb c, double opacity = 1.0) {
        for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
            for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) blend(x, y, c, opacity);
    }

    // 5x7 bitmap text, upper-cased; unknown characters render blank.
    void text(int x, int y, std::string_view s, Rgb c, int scale = 1) {
        for (char ch : s) {
            const auto& g = glyph(ch);
            for (int row = 0; row < 7; ++row)
                for (int col = 0; col < 5; ++col)
                    if (g[row] & (0x10 >> col)) rect(x + col * scale, y + row * scale, x + col * scale + scale - 1,
                                                     y + row * scale + scale - 1, c);
            x += 6 * scale;
        }
    }

    std::vector<std::uint8_t> encode_png() const {
        std::vector<std::uint8_t> raw;
        raw.reserve(static_cast<std::size_t>(h_) * (1 + 3 * w_));
        for (int y = 0; y < h_; ++y) {
            raw.push_back(0);  // filter: none
            for (int x = 0; x < w_; ++x) {
                const Rgb p = at(x, y);
                raw.insert(raw.end(), {p.r, p.g, p.b});
            }
        }
        uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
        std::vector<std::uint8_t> packed(packed_len);
        if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
            throw IoError("png: zlib compression failed");
        packed.resize(packed_len);

        std::vector<std::uint8_t> png = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
        auto be32 = [](std::vector<std::uint8_t>& v, std::uint32_t x) {
            v.insert(v.end(), {static_cast<std::uint8_t>(x >> 24), static_cast<std::uint8_t>(x >> 16),
                               static_cast<std::uint8_t>(x >> 8), static_cast<std::uint8_t>(x)});
        };
        auto chunk = [&](const char* type, const std::vector<std::uint8_t>& data) {
            be32(png, static_cast<std::uint32_t>(data.size()));
            std::vector<std::uint8_t> body(type, type + 4);
            body.insert(body.end(), data.begin(), data.end());
            png.insert(png.end(), body.begin(), body.end());
            be32(png, static_cast<std::uint32_t>(crc32(0L, body.data(), static_cast<uInt>(body.size()))));
        };
        std::vector<std::uint8_t> ihdr;
        be32(ihdr, static_cast<std::uint32_t>(w_));
        be32(ihdr, static_cast<std::uint32_t>(h_));
        ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB, no interlace
        chunk("IHDR", ihdr);
        chunk("IDAT", packed);
        chunk("IEND", {});
        return png;
    }

    void write_png(const std::filesystem::path& path) const {
        const auto bytes = encode_png();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + path.string());
    }

private:
    static const std::array<std::uint8_t, 7>& glyph(char ch) {
        static const std::array<std::uint8_t, 7> blank{};
        static const std::array<std::array<std::uint8_t, 7>, 26> letters = {{
            {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}, {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},
            {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}, {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C},
            {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}, {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},
            {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}, {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},
            {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}, {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},
            {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}, {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},
            {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}, {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},
            {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},
            {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}, {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},
            {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}, {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},
            {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}, {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},
            {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}, {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},
            {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},
        }};
        static const std::array<std::array<std::uint8_t, 7>, 10> digits = {{
            {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
            {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
            {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
            {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
            {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
        }};
        static const std::array<std::uint8_t, 7> minus{0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00};
        static const std::array<std::uint8_t, 7> dot{0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
        static const std::array<std::uint8_t, 7> plus{0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00};
        static const std::array<std::uint8_t, 7> equals{0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00};
        static const std::array<std::uint8_t, 7> slash{0x00, 0x01, 0x02, 0x04, 0x08, 0x10, 0x00};
        static const std::array<std::uint8_t, 7> underscore{0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F};
        const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        if (u >= 'A' && u <= 'Z') return letters[u - 'A'];
        if (u >= '0' && u <= '9') return digits[u - '0'];
        switch (u) {
            case '-': return minus;
            case '.': return dot;
            case '+': return plus;
            case '=': return equals;
            case '/': return slash;
            case '_': return underscore;
            default: return blank;
        }
    }

    int w_, h_;
    std::vector<Rgb> px_;
};

inline std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

/// Mean curve per policy with a translucent mean +/- std band.
inline Canvas render_curves(const std::vector<AggregateCurve>& curves, std::string_view y_label = "",
                            int width = 960, int height = 600) {
    if (curves.empty()) throw UsageError("plot: no curves");
    static constexpr std::array<Rgb, 8> palette = {{{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                                                    {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {23, 190, 207}}};
    Canvas canvas(width, height);
    const int left = 80, right = 20, top = 20, bottom = 50;
    const int pw = width - left - right, ph = height - top - bottom;

    std::size_t T = 1;
    double lo = 0.0, hi = 0.0;
    for (const auto& c : curves) {
        T = std::max(T, c.mean.size());
        for (std::size_t t = 0; t < c.mean.size(); ++t) {
            const double s = t < c.std.size() ? c.std[t] : 0.0;
            lo = std::min(lo, c.mean[t] - s);
            hi = std::max(hi, c.mean[t] + s);
        }
    }
    if (hi <= lo) hi = lo + 1.0;
    auto px = [&](double round) { return left + (round - 1.0) / std::max<double>(1.0, T - 1.0) * pw; };
    auto py = [&](double v) { return top + (hi - v) / (hi - lo) * ph; };

    const Rgb axis{40, 40, 40}, grid{225, 225, 225};
    for (int i = 0; i <= 5; ++i) {
        const double fy = lo + (hi - lo) * i / 5.0;
        const double fx = 1.0 + (T - 1.0) * i / 5.0;
        canvas.line(left, py(fy), left + pw, py(fy), grid);
        canvas.line(px(fx), top, px(fx), top + ph, grid);
        const auto yl = tick_label(fy);
        canvas.text(left - 8 - 6 * static_cast<int>(yl.size()), static_cast<int>(py(fy)) - 3, yl, axis);
        const auto xl = tick_label(std::round(fx));
        canvas.text(static_cast<int>(px(fx)) - 3 * static_cast<int>(xl.size()), top + ph + 8, xl, axis);
    }
    canvas.line(left, top, left, top + ph, axis, 2);
    canvas.line(left, top + ph, left + pw, top + ph, axis, 2);
    canvas.text(left + pw / 2 - 15, height - 18, "ROUND", axis);
    if (!y_label.empty()) canvas.text(8, 6, y_label, axis);

    // Shade the +/- std band per x column, once per pixel to keep opacity uniform.
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        if (c.mean.empty() || c.std.size() != c.mean.size()) continue;
        const Rgb col = palette[k % palette.size()];
        for (int x = left; x <= left + pw; ++x) {
            const double round = 1.0 + static_cast<double>(x - left) / pw * std::max<double>(1.0, T - 1.0);
            const std::size_t t = std::min(c.mean.size() - 1, static_cast<std::size_t>(std::lround(round - 1.0)));
            const int y0 = static_cast<int>(py(c.mean[t] + c.std[t]));
            const int y1 = static_cast<int>(py(c.mean[t] - c.std[t]));
            for (int y = y0; y <= y1; ++y) canvas.blend(x, y, col, 0.18);
        }
    }
    for (std::size_t k = 0; k < curves.size(); ++k) {
        const auto& c = curves[k];
        const Rgb col = palette[k % palette.size()];
        // At most one segment per horizontal pixel.
        const std::size_t stride = std::max<std::size_t>(1, c.mean.size() / static_cast<std::size_t>(pw));
        for (std::size_t t = stride; t < c.mean.size(); t += stride)
            canvas.line(px(static_cast<double>(t - stride + 1)), py(c.mean[t - stride]), px(static_cast<double>(t + 1)),
                        py(c.mean[t]), col, 2);
        const int ly = top + 10 + 14 * static_cast<int>(k);
        canvas.rect(left + 12, ly, left + 28, ly + 6, col);
        canvas.text(left + 34, ly, c.label, axis);
    }
    return canvas;
}

inline void emit_plot(const std::vector<AggregateCurve>& curves, const std::filesystem::path& path,
                      std::string_view y_label = "") {
    render_curves(curves, y_label).write_png(path);
}

}  // namespace linimed
