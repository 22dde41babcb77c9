#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <png.h>

#include "rendet/errors.hpp"
#include "rendet/image.hpp"

namespace rendet {

inline double linear_to_srgb(double c)
{
    c = std::clamp(c, 0.0, 1.0);
    return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

inline double srgb_to_linear(double c)
{
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

/// Raw 8-bit PNG contents; channels is 1 (grey) or 3 (RGB).
struct Png8 {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<std::uint8_t> bytes;
};

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const
    {
        if (f != nullptr) {
            std::fclose(f);
        }
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] inline void png_fail(png_structp, png_const_charp msg) { throw IoError(std::string("png: ") + msg); }
inline void png_warn(png_structp, png_const_charp) {}

} // namespace detail

inline void write_png8(const std::filesystem::path& path, const Png8& png)
{
    detail::FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot write " + path.string());
    }
    png_structp ps = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_fail, detail::png_warn);
    png_infop info = png_create_info_struct(ps);
    struct Guard {
        png_structp* ps;
        png_infop* info;
        ~Guard() { png_destroy_write_struct(ps, info); }
    } guard{&ps, &info};
    png_init_io(ps, fp.get());
    png_set_compression_level(ps, 6);
    png_set_IHDR(ps, info, static_cast<png_uint_32>(png.width), static_cast<png_uint_32>(png.height), 8,
                 png.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ps, info);
    const size_t stride = static_cast<size_t>(png.width) * png.channels;
    for (int r = 0; r < png.height; ++r) {
        png_write_row(ps, png.bytes.data() + stride * r);
    }
    png_write_end(ps, nullptr);
}

/// Reads 8-bit grey, grey+alpha, RGB or RGBA PNGs; alpha is dropped and
/// palette/16-bit inputs are expanded to 8-bit.
inline Png8 read_png8(const std::filesystem::path& path)
{
    detail::FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw IoError("cannot open " + path.string());
    }
    png_structp ps = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_fail, detail::png_warn);
    png_infop info = png_create_info_struct(ps);
    struct Guard {
        png_structp* ps;
        png_infop* info;
        ~Guard() { png_destroy_read_struct(ps, info, nullptr); }
    } guard{&ps, &info};
    png_init_io(ps, fp.get());
    png_read_info(ps, info);
    const auto color = png_get_color_type(ps, info);
    if (png_get_bit_depth(ps, info) == 16) {
        png_set_strip_16(ps);
    }
    if (color == PNG_COLOR_TYPE_PALETTE) {
        png_set_palette_to_rgb(ps);
    }
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(ps, info) < 8) {
        png_set_expand_gray_1_2_4_to_8(ps);
    }
    if ((color & PNG_COLOR_MASK_ALPHA) != 0) {
        png_set_strip_alpha(ps);
    }
    png_read_update_info(ps, info);
    Png8 out;
    out.width = static_cast<int>(png_get_image_width(ps, info));
    out.height = static_cast<int>(png_get_image_height(ps, info));
    out.channels = png_get_channels(ps, info);
    const size_t stride = png_get_rowbytes(ps, info);
    out.bytes.resize(stride * out.height);
    for (int r = 0; r < out.height; ++r) {
        png_read_row(ps, out.bytes.data() + stride * r, nullptr);
    }
    png_read_end(ps, nullptr);
    return out;
}

/// 8-bit sRGB-encoded PNG of a linear image.
inline void write_png(const std::filesystem::path& path, const Image& img)
{
    Png8 png{img.width, img.height, 3, std::vector<std::uint8_t>(img.pixels.size())};
    for (size_t i = 0; i < img.pixels.size(); ++i) {
        png.bytes[i] = static_cast<std::uint8_t>(std::lround(linear_to_srgb(img.pixels[i]) * 255.0));
    }
    write_png8(path, png);
}

/// Grey PNG with values {0, 255}.
inline void write_png(const std::filesystem::path& path, const BinaryMask& mask)
{
    Png8 png{mask.width, mask.height, 1, std::vector<std::uint8_t>(mask.size())};
    for (size_t i = 0; i < mask.size(); ++i) {
        png.bytes[i] = mask.data[i] != 0 ? 255 : 0;
    }
    write_png8(path, png);
}

/// Mask PNGs are read as grey (the first channel); any value >= 128 is set.
inline BinaryMask read_mask_png(const std::filesystem::path& path)
{
    const Png8 png = read_png8(path);
    BinaryMask mask(png.width, png.height);
    for (size_t i = 0; i < mask.size(); ++i) {
        mask.data[i] = png.bytes[i * png.channels] >= 128 ? 1 : 0;
    }
    return mask;
}

/// Grey PNG read as a continuous map in [0,1].
inline ScalarMap read_scalar_png(const std::filesystem::path& path)
{
    const Png8 png = read_png8(path);
    ScalarMap m(png.width, png.height);
    for (size_t i = 0; i < m.size(); ++i) {
        m.data[i] = png.bytes[i * png.channels] / 255.0;
    }
    return m;
}

/// sRGB PNG decoded back to linear radiance.
inline Image read_png_image(const std::filesystem::path& path)
{
    const Png8 png = read_png8(path);
    Image img(png.width, png.height);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            const int src = png.channels == 1 ? 0 : c;
            img.pixels[3 * i + c] =
                static_cast<float>(srgb_to_linear(png.bytes[i * png.channels + src] / 255.0));
        }
    }
    return img;
}

namespace detail {

inline void write_pfm_raw(const std::filesystem::path& path, int width, int height, int channels,
                          const std::vector<float>& top_down)
{
    static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << (channels == 3 ? "PF" : "Pf") << "\n" << width << " " << height << "\n-1.0\n";
    const size_t stride = static_cast<size_t>(width) * channels;
    // PFM stores the bottom row first.
    for (int r = height - 1; r >= 0; --r) {
        out.write(reinterpret_cast<const char*>(top_down.data() + stride * r),
                  static_cast<std::streamsize>(stride * sizeof(float)));
    }
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

inline std::vector<float> read_pfm_raw(const std::filesystem::path& path, int& width, int& height, int& channels)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::string magic;
    double scale = 0.0;
    in >> magic >> width >> height >> scale;
    in.get();
    if (!in || (magic != "PF" && magic != "Pf") || width <= 0 || height <= 0) {
        throw IoError(path.string() + ": not a PFM file");
    }
    if (scale >= 0.0) {
        throw IoError(path.string() + ": big-endian PFM is not supported");
    }
    channels = magic == "PF" ? 3 : 1;
    const size_t stride = static_cast<size_t>(width) * channels;
    std::vector<float> data(stride * height);
    for (int r = height - 1; r >= 0; --r) {
        in.read(reinterpret_cast<char*>(data.data() + stride * r), static_cast<std::streamsize>(stride * sizeof(float)));
    }
    if (!in) {
        throw IoError(path.string() + ": truncated PFM data");
    }
    return data;
}

} // namespace detail

inline void write_pfm(const std::filesystem::path& path, const Image& img)
{
    detail::write_pfm_raw(path, img.width, img.height, 3, img.pixels);
}

inline void write_pfm(const std::filesystem::path& path, const ScalarMap& map)
{
    std::vector<float> data(map.data.begin(), map.data.end());
    detail::write_pfm_raw(path, map.width, map.height, 1, data);
}

inline Image read_pfm_image(const std::filesystem::path& path)
{
    int w = 0;
    int h = 0;
    int ch = 0;
    std::vector<float> data = detail::read_pfm_raw(path, w, h, ch);
    Image img(w, h);
    for (size_t i = 0; i < img.pixel_count(); ++i) {
        for (int c = 0; c < 3; ++c) {
            img.pixels[3 * i + c] = data[i * ch + (ch == 1 ? 0 : c)];
        }
    }
    return img;
}

inline ScalarMap read_pfm_scalar(const std::filesystem::path& path)
{
    int w = 0;
    int h = 0;
    int ch = 0;
    std::vector<float> data = detail::read_pfm_raw(path, w, h, ch);
    ScalarMap m(w, h);
    for (size_t i = 0; i < m.size(); ++i) {
        m.data[i] = data[i * ch];
    }
    return m;
}

/// Loads a linear image from .pfm, or an sRGB .png.
inline Image read_image(const std::filesystem::path& path)
{
    if (path.extension() == ".pfm") {
        return read_pfm_image(path);
    }
    if (path.extension() == ".png") {
        return read_png_image(path);
    }
    throw IoError(path.string() + ": unsupported image format (expected .png or .pfm)");
}

/// Loads a continuous mask from a grey .pfm or .png.
inline ScalarMap read_scalar(const std::filesystem::path& path)
{
    if (path.extension() == ".pfm") {
        return read_pfm_scalar(path);
    }
    if (path.extension() == ".png") {
        return read_scalar_png(path);
    }
    throw IoError(path.string() + ": unsupported mask format (expected .png or .pfm)");
}

} // namespace rendet
