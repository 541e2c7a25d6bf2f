#include "papireg/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "papireg/dataio/tensor_io.hpp"
#include "papireg/error.hpp"

namespace papireg::features {
namespace {

double location_norm(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

void scale_location(std::span<float> v, double factor) {
  for (float& x : v) x = static_cast<float>(x * factor);
}

void check_divisible(int height, int width) {
  if (height < kPatchSize || width < kPatchSize || height % kPatchSize || width % kPatchSize) {
    fail(ErrorCode::BadShape, "image dimensions must be positive multiples of 4, got " + std::to_string(width) +
                                  "x" + std::to_string(height));
  }
}

// Copies the first min(C, d) channels, zero-pads the rest, renormalises.
DenseFeatures fit_channels(const DenseFeatures& in, int d) {
  DenseFeatures out(in.height, in.width, d);
  const int keep = std::min(in.channels, d);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      auto src = in.at(r, c);
      auto dst = out.at(r, c);
      std::copy_n(src.begin(), keep, dst.begin());
    }
  }
  normalize_locations(out);
  return out;
}

struct BuiltinParts {
  DenseFeatures pixel;  // unit (or zero where masked), handcrafted width
  DenseFeatures patch;
};

BuiltinParts builtin_parts(const GrayImage& image, std::span<const std::uint8_t> mask) {
  check_divisible(image.height, image.width);
  if (!mask.empty() && mask.size() != static_cast<std::size_t>(image.width) * image.height) {
    fail(ErrorCode::ShapeMismatch, "mask size differs from image size");
  }
  BuiltinParts parts;
  parts.pixel = handcrafted_descriptors(image);
  normalize_locations(parts.pixel);
  if (!mask.empty()) {
    for (int r = 0; r < image.height; ++r) {
      for (int c = 0; c < image.width; ++c) {
        if (!mask[static_cast<std::size_t>(r) * image.width + c]) std::ranges::fill(parts.pixel.at(r, c), 0.0f);
      }
    }
  }
  parts.patch = pool_patches(parts.pixel);
  return parts;
}

DenseFeatures concat_channels(const DenseFeatures& a, const DenseFeatures& b) {
  DenseFeatures out(a.height, a.width, a.channels + b.channels);
  for (int r = 0; r < a.height; ++r) {
    for (int c = 0; c < a.width; ++c) {
      auto dst = out.at(r, c);
      std::ranges::copy(a.at(r, c), dst.begin());
      std::ranges::copy(b.at(r, c), dst.begin() + a.channels);
    }
  }
  normalize_locations(out);
  return out;
}

}  // namespace

Eigen::MatrixXd DenseFeatures::flattened() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(locations()), channels);
  for (std::size_t i = 0; i < locations(); ++i) {
    for (int k = 0; k < channels; ++k) m(static_cast<Eigen::Index>(i), k) = data[i * channels + k];
  }
  return m;
}

void FeatureMaps::validate() const {
  if (patch.height * kPatchSize != pixel.height || patch.width * kPatchSize != pixel.width) {
    fail(ErrorCode::BadShape, "patch grid must be the pixel grid divided by 4");
  }
  for (const DenseFeatures* f : {&patch, &pixel}) {
    if (f->data.size() != f->locations() * f->channels) fail(ErrorCode::BadShape, "feature payload size mismatch");
    for (int r = 0; r < f->height; ++r) {
      for (int c = 0; c < f->width; ++c) {
        const double n = location_norm(f->at(r, c));
        if (n != 0.0 && std::abs(n - 1.0) > kUnitNormTolerance) fail(ErrorCode::NormError, "feature vector not unit norm");
      }
    }
  }
}

Eigen::MatrixXd LinearHead::apply(const Eigen::MatrixXd& rows) const {
  if (is_identity()) return rows;
  if (weight.rows() != rows.cols()) fail(ErrorCode::ShapeMismatch, "linear head width differs from feature width");
  return rows * weight;
}

std::size_t normalize_locations(DenseFeatures& f, double report_tolerance) {
  std::size_t reported = 0;
  for (int r = 0; r < f.height; ++r) {
    for (int c = 0; c < f.width; ++c) {
      auto v = f.at(r, c);
      const double n = location_norm(v);
      if (n == 0.0 || std::abs(n - 1.0) <= kUnitNormTolerance) continue;
      if (std::abs(n - 1.0) > report_tolerance) ++reported;
      scale_location(v, 1.0 / n);
    }
  }
  return reported;
}

DenseFeatures handcrafted_descriptors(const GrayImage& image) {
  const int h = image.height;
  const int w = image.width;
  DenseFeatures out(h, w, kHandcraftedChannels);
  auto clamped = [&](int x, int y) {
    return image(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      auto v = out.at(y, x);
      v[kIntensityChannel] = image(x, y);
      v[kInverseIntensityChannel] = 1.0f - image(x, y);
    }
  }

  const double bin_width = 2.0 * std::numbers::pi / kOrientationBins;
  std::vector<double> magnitude(static_cast<std::size_t>(w) * h);
  std::vector<int> bin(magnitude.size());
  for (int si = 0; si < 3; ++si) {
    const int s = kScales[si];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double gx = (clamped(x + s, y) - clamped(x - s, y)) / (2.0 * s);
        const double gy = (clamped(x, y + s) - clamped(x, y - s)) / (2.0 * s);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        magnitude[i] = std::hypot(gx, gy);
        double angle = std::atan2(gy, gx);
        if (angle < 0.0) angle += 2.0 * std::numbers::pi;
        bin[i] = std::min(static_cast<int>(angle / bin_width), kOrientationBins - 1);
        out.at(y, x)[kMagnitudeChannel + si] = static_cast<float>(magnitude[i]);
      }
    }
    const double inv_area = 1.0 / ((2 * s + 1) * (2 * s + 1));
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double hist[kOrientationBins] = {};
        for (int dy = -s; dy <= s; ++dy) {
          const int yy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -s; dx <= s; ++dx) {
            const std::size_t i = static_cast<std::size_t>(yy) * w + std::clamp(x + dx, 0, w - 1);
            hist[bin[i]] += magnitude[i];
          }
        }
        auto v = out.at(y, x);
        for (int b = 0; b < kOrientationBins; ++b) {
          v[kHistogramChannel + si * kOrientationBins + b] = static_cast<float>(hist[b] * inv_area);
        }
      }
    }
  }
  return out;
}

DenseFeatures pool_patches(const DenseFeatures& pixel) {
  check_divisible(pixel.height, pixel.width);
  DenseFeatures patch(pixel.height / kPatchSize, pixel.width / kPatchSize, pixel.channels);
  std::vector<double> acc(static_cast<std::size_t>(pixel.channels));
  for (int pr = 0; pr < patch.height; ++pr) {
    for (int pc = 0; pc < patch.width; ++pc) {
      std::ranges::fill(acc, 0.0);
      for (int dy = 0; dy < kPatchSize; ++dy) {
        for (int dx = 0; dx < kPatchSize; ++dx) {
          auto v = pixel.at(pr * kPatchSize + dy, pc * kPatchSize + dx);
          for (int k = 0; k < pixel.channels; ++k) acc[k] += v[k];
        }
      }
      auto dst = patch.at(pr, pc);
      for (int k = 0; k < pixel.channels; ++k) dst[k] = static_cast<float>(acc[k] / 16.0);
    }
  }
  normalize_locations(patch);
  return patch;
}

FeatureMaps extract_builtin(const GrayImage& image, int d_patch, int d_pixel) {
  if (d_patch < 1 || d_pixel < 1) fail(ErrorCode::InvalidArgument, "feature widths must be positive");
  const BuiltinParts parts = builtin_parts(image, {});
  return {fit_channels(parts.patch, d_patch), fit_channels(parts.pixel, d_pixel), FeatureSource::Builtin};
}

FeatureMaps extract_builtin(const RgbImage& image, int d_patch, int d_pixel) {
  return extract_builtin(to_gray(image), d_patch, d_pixel);
}

FeatureMaps extract_dual_branch(const GrayImage& range_map, const GrayImage& reflectance_map, int d_patch,
                                int d_pixel, std::span<const std::uint8_t> mask) {
  if (range_map.width != reflectance_map.width || range_map.height != reflectance_map.height) {
    fail(ErrorCode::ShapeMismatch, "range and reflectance maps differ in size");
  }
  if (d_patch < 2 || d_pixel < 2) fail(ErrorCode::InvalidArgument, "dual-branch widths must be >= 2");
  const BuiltinParts range = builtin_parts(range_map, mask);
  const BuiltinParts refl = builtin_parts(reflectance_map, mask);
  const int patch_half = d_patch / 2;
  const int pixel_half = d_pixel / 2;
  FeatureMaps out;
  out.patch = concat_channels(fit_channels(range.patch, patch_half), fit_channels(refl.patch, d_patch - patch_half));
  out.pixel = concat_channels(fit_channels(range.pixel, pixel_half), fit_channels(refl.pixel, d_pixel - pixel_half));
  out.source = FeatureSource::Builtin;
  return out;
}

FeatureMaps extract_lidar_features(const projection::ProjectionMaps& maps, double range_max, int d_patch,
                                   int d_pixel) {
  GrayImage range(maps.width, maps.height);
  GrayImage refl(maps.width, maps.height);
  for (std::size_t i = 0; i < maps.range.size(); ++i) {
    if (!maps.occupancy[i]) continue;
    range.data[i] = static_cast<float>(std::clamp(maps.range[i] / range_max, 0.0, 1.0));
    refl.data[i] = std::clamp(maps.reflectance[i], 0.0f, 1.0f);
  }
  return extract_dual_branch(range, refl, d_patch, d_pixel, maps.occupancy);
}

void save_features(const std::string& path, const FeatureMaps& features) {
  features.validate();
  auto to_tensor = [](const DenseFeatures& f) {
    return dataio::Tensor{{static_cast<std::uint32_t>(f.height), static_cast<std::uint32_t>(f.width),
                           static_cast<std::uint32_t>(f.channels)},
                          f.data};
  };
  const dataio::Tensor tensors[2] = {to_tensor(features.patch), to_tensor(features.pixel)};
  dataio::write_tensors(path, tensors);
}

FeatureMaps load_features(const std::string& path, std::span<const std::uint8_t> pixel_mask, LoadReport* report) {
  auto tensors = dataio::read_tensors(path);
  if (tensors.size() != 2) fail(ErrorCode::FormatError, "feature file must hold a patch and a pixel tensor");
  auto to_dense = [](dataio::Tensor& t) {
    if (t.dims.size() != 3) fail(ErrorCode::FormatError, "feature tensors must be rank 3");
    DenseFeatures f;
    f.height = static_cast<int>(t.dims[0]);
    f.width = static_cast<int>(t.dims[1]);
    f.channels = static_cast<int>(t.dims[2]);
    f.data = std::move(t.data);
    return f;
  };
  FeatureMaps out;
  out.patch = to_dense(tensors[0]);
  out.pixel = to_dense(tensors[1]);
  out.source = FeatureSource::External;
  if (out.patch.height * kPatchSize != out.pixel.height || out.patch.width * kPatchSize != out.pixel.width) {
    fail(ErrorCode::FormatError, "patch grid is not the pixel grid divided by 4");
  }
  for (float x : out.patch.data) if (!std::isfinite(x)) fail(ErrorCode::FormatError, "non-finite feature value");
  for (float x : out.pixel.data) if (!std::isfinite(x)) fail(ErrorCode::FormatError, "non-finite feature value");

  if (!pixel_mask.empty()) {
    if (pixel_mask.size() != out.pixel.locations()) fail(ErrorCode::ShapeMismatch, "mask size differs from pixel grid");
    for (int r = 0; r < out.pixel.height; ++r) {
      for (int c = 0; c < out.pixel.width; ++c) {
        const bool valid = pixel_mask[static_cast<std::size_t>(r) * out.pixel.width + c] != 0;
        if (valid && location_norm(out.pixel.at(r, c)) == 0.0) fail(ErrorCode::NormError, "zero pixel feature at an occupied location");
      }
    }
    for (int pr = 0; pr < out.patch.height; ++pr) {
      for (int pc = 0; pc < out.patch.width; ++pc) {
        bool any = false;
        for (int dy = 0; dy < kPatchSize && !any; ++dy) {
          for (int dx = 0; dx < kPatchSize && !any; ++dx) {
            any = pixel_mask[static_cast<std::size_t>(pr * kPatchSize + dy) * out.pixel.width + pc * kPatchSize + dx] != 0;
          }
        }
        if (any && location_norm(out.patch.at(pr, pc)) == 0.0) fail(ErrorCode::NormError, "zero patch feature over occupied pixels");
      }
    }
  }

  const std::size_t fixed = normalize_locations(out.patch) + normalize_locations(out.pixel);
  if (report) report->renormalized = fixed;
  return out;
}

}  // namespace papireg::features
