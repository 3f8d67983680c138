#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace aspire {

/// Dense 8-bit image, row-major with interleaved channels
/// (index = (y * width + x) * channels + c).
struct Image {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> data;

    Image() = default;
    Image(int h, int w, int c, std::uint8_t fill = 0)
        : height(h), width(w), channels(c),
          data(static_cast<std::size_t>(h) * w * c, fill) {}

    std::uint8_t& at(int y, int x, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    std::uint8_t at(int y, int x, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const Image& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }

    bool operator==(const Image& o) const {
        return same_shape(o) && data == o.data;
    }
};

/// Lossless PNG with pinned encoder settings, so identical pixels produce
/// identical files.
void write_png(const std::filesystem::path& path, const Image& img);
Image read_png(const std::filesystem::path& path);

}  // namespace aspire
