#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rendet/errors.hpp"
#include "rendet/geometry.hpp"

namespace rendet {

/// Row-major single-channel raster.
template <class T>
struct Raster {
    int width = 0;
    int height = 0;
    std::vector<T> data;

    Raster() = default;
    Raster(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    size_t size() const { return data.size(); }
    T& operator()(int row, int col) { return data[static_cast<size_t>(row) * width + col]; }
    const T& operator()(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }

    bool operator==(const Raster&) const = default;
};

/// H x W x 3 linear radiance in [0,1].
struct Image {
    int width = 0;
    int height = 0;
    std::vector<float> pixels; // interleaved RGB

    Image() = default;
    Image(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h * 3, 0.0f) {}

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }
    float& at(int row, int col, int ch) { return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch]; }
    float at(int row, int col, int ch) const { return pixels[(static_cast<size_t>(row) * width + col) * 3 + ch]; }

    bool operator==(const Image&) const = default;
};

/// Values are strictly 0 or 1.
using BinaryMask = Raster<std::uint8_t>;

/// Continuous per-pixel values: luminance maps and soft masks.
using ScalarMap = Raster<double>;

template <class A, class B>
void require_same_size(const A& a, const B& b, const char* what)
{
    if (a.width != b.width || a.height != b.height) {
        throw DimensionMismatch(std::string(what) + ": " + std::to_string(a.width) + "x" +
                                std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                std::to_string(b.height));
    }
}

inline bool is_binary(const BinaryMask& m)
{
    return std::all_of(m.data.begin(), m.data.end(), [](std::uint8_t v) { return v <= 1; });
}

inline size_t count(const BinaryMask& m)
{
    return static_cast<size_t>(std::count(m.data.begin(), m.data.end(), std::uint8_t{1}));
}

inline BinaryMask mask_or(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "mask_or");
    BinaryMask out(a.width, a.height);
    for (size_t i = 0; i < a.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(a.data[i] | b.data[i]);
    }
    return out;
}

inline BinaryMask mask_and(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "mask_and");
    BinaryMask out(a.width, a.height);
    for (size_t i = 0; i < a.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(a.data[i] & b.data[i]);
    }
    return out;
}

/// a AND NOT b
inline BinaryMask mask_minus(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "mask_minus");
    BinaryMask out(a.width, a.height);
    for (size_t i = 0; i < a.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(a.data[i] & (b.data[i] ^ 1u));
    }
    return out;
}

inline BinaryMask mask_not(const BinaryMask& a)
{
    BinaryMask out(a.width, a.height);
    for (size_t i = 0; i < a.size(); ++i) {
        out.data[i] = static_cast<std::uint8_t>(a.data[i] ^ 1u);
    }
    return out;
}

/// Intersection over union; two empty masks count as a perfect match.
inline double iou(const BinaryMask& a, const BinaryMask& b)
{
    require_same_size(a, b, "iou");
    size_t inter = 0;
    size_t uni = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        inter += a.data[i] & b.data[i];
        uni += a.data[i] | b.data[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// Values strictly above 0.5 map to 1; a tie at exactly 0.5 maps to 0.
inline BinaryMask binarize(const ScalarMap& m, double threshold = 0.5)
{
    BinaryMask out(m.width, m.height);
    for (size_t i = 0; i < m.size(); ++i) {
        out.data[i] = m.data[i] > threshold ? 1 : 0;
    }
    return out;
}

inline ScalarMap to_scalar(const BinaryMask& m)
{
    ScalarMap out(m.width, m.height);
    for (size_t i = 0; i < m.size(); ++i) {
        out.data[i] = m.data[i];
    }
    return out;
}

inline ScalarMap luminance_map(const Image& img)
{
    ScalarMap out(img.width, img.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        out.data[i] = luminance(img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]);
    }
    return out;
}

/// Rec. 709 luminance of the per-channel absolute difference.
inline ScalarMap abs_diff_luminance(const Image& a, const Image& b)
{
    require_same_size(a, b, "abs_diff_luminance");
    ScalarMap out(a.width, a.height);
    for (size_t i = 0; i < a.pixel_count(); ++i) {
        const double dr = std::abs(static_cast<double>(a.pixels[3 * i]) - b.pixels[3 * i]);
        const double dg = std::abs(static_cast<double>(a.pixels[3 * i + 1]) - b.pixels[3 * i + 1]);
        const double db = std::abs(static_cast<double>(a.pixels[3 * i + 2]) - b.pixels[3 * i + 2]);
        out.data[i] = luminance(dr, dg, db);
    }
    return out;
}

} // namespace rendet
