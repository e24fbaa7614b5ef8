#pragma once

// PNG images and masks on disk. Requires linking against libpng.
//
// Images are 8-bit RGB; row 0 of the tensor is the top scanline.
// Masks are 8-bit grayscale PNGs of height 3*I1 and width I2: the three
// channel planes of an I1 x I2 x 3 mask stacked top to bottom, 0 = missing,
// 255 = observed.

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "ictac/error.hpp"
#include "ictac/tensor.hpp"

namespace ictac {

namespace detail {

struct PngRead {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;
};

inline PngRead read_png(const std::string& path, png_uint_32 expected_format, const char* what) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) {
        throw IoError("cannot read " + path + ": " + image.message);
    }
    if (image.format != expected_format) {
        png_image_free(&image);
        throw IoError(path + " is not an 8-bit " + what + " PNG");
    }
    PngRead out;
    out.width = image.width;
    out.height = image.height;
    out.pixels.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
        throw IoError("cannot decode " + path + ": " + image.message);
    }
    return out;
}

inline void write_png(const std::string& path, std::size_t width, std::size_t height,
                      png_uint_32 format, const std::vector<std::uint8_t>& pixels) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(width);
    image.height = static_cast<png_uint_32>(height);
    image.format = format;
    if (!png_image_write_to_file(&image, path.c_str(), 0, pixels.data(), 0, nullptr)) {
        throw IoError("cannot write " + path + ": " + image.message);
    }
}

}  // namespace detail

/// Clamp to [0, 255], then round half up.
inline std::uint8_t quantize(double v) {
    const double c = std::clamp(v, 0.0, 255.0);
    return static_cast<std::uint8_t>(std::floor(c + 0.5));
}

inline DenseTensor load_image(const std::string& path) {
    const auto png = detail::read_png(path, PNG_FORMAT_RGB, "RGB");
    const std::size_t h = png.height, w = png.width;
    DenseTensor t(Shape{h, w, 3});
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                t(r, c, ch) = png.pixels[(r * w + c) * 3 + ch];
            }
        }
    }
    return t;
}

inline void save_image(const DenseTensor& t, const std::string& path) {
    if (t.order() != 3 || t.extent(2) != 3) {
        throw ShapeError("save_image expects rows x cols x 3, got " + shape_string(t.shape()));
    }
    const std::size_t h = t.extent(0), w = t.extent(1);
    std::vector<std::uint8_t> px(h * w * 3);
    for (std::size_t r = 0; r < h; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                px[(r * w + c) * 3 + ch] = quantize(t(r, c, ch));
            }
        }
    }
    detail::write_png(path, w, h, PNG_FORMAT_RGB, px);
}

inline ObservationMask load_mask(const std::string& path, std::size_t channels = 3) {
    const auto png = detail::read_png(path, PNG_FORMAT_GRAY, "grayscale");
    if (channels == 0 || png.height % channels != 0) {
        throw IoError(path + ": mask height " + std::to_string(png.height) +
                      " is not a multiple of " + std::to_string(channels) + " channel planes");
    }
    const std::size_t h = png.height / channels, w = png.width;
    ObservationMask m(Shape{h, w, channels});
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                const auto v = png.pixels[(ch * h + r) * w + c];
                if (v != 0 && v != 255) {
                    throw IoError(path + ": mask pixels must be 0 or 255");
                }
                m(r, c, ch) = v ? 1 : 0;
            }
        }
    }
    return m;
}

inline void save_mask(const ObservationMask& m, const std::string& path) {
    if (m.order() != 3) {
        throw ShapeError("save_mask expects rows x cols x channels, got " + shape_string(m.shape()));
    }
    const std::size_t h = m.extent(0), w = m.extent(1), channels = m.extent(2);
    std::vector<std::uint8_t> px(h * w * channels);
    for (std::size_t ch = 0; ch < channels; ++ch) {
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t c = 0; c < w; ++c) {
                px[(ch * h + r) * w + c] = m(r, c, ch) ? 255 : 0;
            }
        }
    }
    detail::write_png(path, w, h * channels, PNG_FORMAT_GRAY, px);
}

}  // namespace ictac
