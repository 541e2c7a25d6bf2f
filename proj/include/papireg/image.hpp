#pragma once

#include <cstdint>
#include <vector>

namespace papireg {

// Interleaved 8-bit RGB, row-major.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t* at(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
  const std::uint8_t* at(int x, int y) const { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
};

// Single-channel float image, values nominally in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;

  GrayImage() = default;
  GrayImage(int w, int h, float fill = 0.0f) : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  float& operator()(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  float operator()(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// ITU-R 601 luma, scaled to [0, 1].
GrayImage to_gray(const RgbImage& image);

// Bilinear resampling with pixel centres at integer coordinates.
RgbImage resize_bilinear(const RgbImage& image, int width, int height);

}  // namespace papireg
