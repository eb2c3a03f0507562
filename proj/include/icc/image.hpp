#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace icc {

/// 8-bit RGBA raster, row 0 at the top.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;

  Image() = default;
  Image(int w, int h, std::array<std::uint8_t, 4> fill = {0, 0, 0, 0});

  std::uint8_t* pixel(int x, int y) { return rgba.data() + 4 * (static_cast<std::size_t>(y) * width + x); }
  const std::uint8_t* pixel(int x, int y) const {
    return rgba.data() + 4 * (static_cast<std::size_t>(y) * width + x);
  }
  /// Bilinear sample at continuous pixel coordinates (pixel centres at integer + 0.5), clamped.
  std::array<double, 4> sample(double x, double y) const;
};

Image checkerboard(int width, int height, int squares, std::array<std::uint8_t, 4> a = {30, 30, 30, 255},
                   std::array<std::uint8_t, 4> b = {235, 235, 235, 255});

Image read_png(const std::string& path);
void write_png(const Image& image, const std::string& path);
std::vector<std::uint8_t> encode_png(const Image& image);

}  // namespace icc
