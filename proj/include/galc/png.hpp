#pragma once

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "galc/error.hpp"
#include "galc/tensor.hpp"

namespace galc {

/// Reads an 8-bit PNG as a C×H×W tensor in [0, 1]. Colour images load as 3
/// channels, grey ones as 1; alpha is dropped.
inline Tensor read_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        fail(Errc::unreadable_file, "cannot read PNG '" + path.string() + "': " + image.message);
    const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const std::size_t c = colour ? 3 : 1, h = image.height, w = image.width;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        const std::string why = image.message;
        png_image_free(&image);
        fail(Errc::unreadable_file, "cannot decode PNG '" + path.string() + "': " + why);
    }
    if (h == 0 || w == 0) fail(Errc::unreadable_file, "empty PNG '" + path.string() + "'");

    Tensor out(Shape{c, h, w});
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t k = 0; k < c; ++k)
                out[(k * h + y) * w + x] = static_cast<float>(buffer[(y * w + x) * c + k]) / 255.0f;
    return out;
}

/// Writes a C×H×W tensor (C = 1 or 3, values clamped to [0, 1]) as 8-bit PNG.
inline void write_png(const Tensor& img, const std::filesystem::path& path) {
    if (img.rank() != 3 || (img.dim(0) != 1 && img.dim(0) != 3))
        fail(Errc::shape_mismatch, "write_png needs a 1- or 3-channel image, got " + shape_string(img.shape()));
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    std::vector<png_byte> buffer(c * h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t k = 0; k < c; ++k) {
                const double v = std::clamp(static_cast<double>(img[(k * h + y) * w + x]), 0.0, 1.0);
                buffer[(y * w + x) * c + k] = static_cast<png_byte>(std::lround(v * 255.0));
            }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr))
        fail(Errc::io_error, "cannot write PNG '" + path.string() + "': " + image.message);
}

}  // namespace galc
