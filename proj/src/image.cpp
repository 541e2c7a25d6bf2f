#include "papireg/image.hpp"

#include <algorithm>
#include <cmath>

#include "papireg/error.hpp"

namespace papireg {

GrayImage to_gray(const RgbImage& image) {
  GrayImage out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* p = image.at(x, y);
      out(x, y) = static_cast<float>((0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]) / 255.0);
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& image, int width, int height) {
  if (width < 1 || height < 1 || image.width < 1 || image.height < 1) {
    fail(ErrorCode::BadDims, "resize needs non-empty source and target");
  }
  if (width == image.width && height == image.height) return image;
  RgbImage out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - wx) * image.at(x0, y0)[c] + wx * image.at(x1, y0)[c];
        const double bottom = (1 - wx) * image.at(x0, y1)[c] + wx * image.at(x1, y1)[c];
        out.at(x, y)[c] = static_cast<std::uint8_t>(std::lround((1 - wy) * top + wy * bottom));
      }
    }
  }
  return out;
}

}  // namespace papireg
