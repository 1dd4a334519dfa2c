#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace feast {

/// 8-bit RGB raster, row-major.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 * width * height

    static RasterImage filled(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

    std::uint8_t* at(int x, int y) { return pixels.data() + 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)); }
    const std::uint8_t* at(int x, int y) const { return pixels.data() + 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)); }
};

/// PNG or JPEG, decided by magic bytes.
RasterImage load_image(const std::filesystem::path& path);

void save_png(const RasterImage& image, const std::filesystem::path& path);

}  // namespace feast
