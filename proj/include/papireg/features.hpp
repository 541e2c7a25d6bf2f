#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "papireg/image.hpp"
#include "papireg/projection.hpp"
#include "papireg/types.hpp"

namespace papireg::features {

inline constexpr int kPatchSize = 4;  // one patch covers a 4x4 pixel block
inline constexpr int kDefaultPatchDim = 64;
inline constexpr int kDefaultPixelDim = 32;
inline constexpr double kUnitNormTolerance = 1e-6;

// Dense H x W x C descriptor grid, row-major with channels innermost.
struct DenseFeatures {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  DenseFeatures() = default;
  DenseFeatures(int h, int w, int c) : height(h), width(w), channels(c), data(static_cast<std::size_t>(h) * w * c, 0.0f) {}

  GridShape grid() const { return {height, width}; }
  std::size_t locations() const { return static_cast<std::size_t>(height) * width; }
  std::span<float> at(int row, int col) {
    return {data.data() + (static_cast<std::size_t>(row) * width + col) * channels, static_cast<std::size_t>(channels)};
  }
  std::span<const float> at(int row, int col) const {
    return {data.data() + (static_cast<std::size_t>(row) * width + col) * channels, static_cast<std::size_t>(channels)};
  }
  // Flattened N x C matrix, location order row-major.
  Eigen::MatrixXd flattened() const;
};

enum class FeatureSource { Builtin, External, Synthetic };

struct FeatureMaps {
  DenseFeatures patch;  // (H/4) x (W/4) x D_patch
  DenseFeatures pixel;  // H x W x D_pixel
  FeatureSource source = FeatureSource::Builtin;

  // Patch grid must be the pixel grid divided by four; every vector unit or zero.
  void validate() const;
};

// Learned linear projection applied before the similarity product. An empty
// weight acts as the identity of whatever width it meets.
struct LinearHead {
  Eigen::MatrixXd weight;

  static LinearHead identity() { return {}; }
  bool is_identity() const { return weight.size() == 0; }
  Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
};

// Normalises every non-zero vector in place; returns how many changed by more
// than `report_tolerance` in norm.
std::size_t normalize_locations(DenseFeatures& f, double report_tolerance = 1e-3);

// --- builtin handcrafted extractor ---------------------------------------

// Channel layout of the unnormalised handcrafted descriptor.
inline constexpr int kIntensityChannel = 0;         // I
inline constexpr int kInverseIntensityChannel = 1;  // 1 - I
inline constexpr int kMagnitudeChannel = 2;         // |grad| at scales 1, 2, 4
inline constexpr int kHistogramChannel = 5;         // 8 orientation bins per scale
inline constexpr int kOrientationBins = 8;
inline constexpr int kHandcraftedChannels = 5 + 3 * kOrientationBins;
inline constexpr int kScales[3] = {1, 2, 4};

// Raw per-pixel descriptor before normalisation: intensity, gradient
// magnitudes, and magnitude-weighted orientation histograms averaged over a
// (2s+1)^2 window at each scale s. Borders clamp.
DenseFeatures handcrafted_descriptors(const GrayImage& image);

// Throws BadShape unless H and W are multiples of four.
FeatureMaps extract_builtin(const GrayImage& image, int d_patch = kDefaultPatchDim, int d_pixel = kDefaultPixelDim);
FeatureMaps extract_builtin(const RgbImage& image, int d_patch = kDefaultPatchDim, int d_pixel = kDefaultPixelDim);

// Runs the builtin extractor on both maps with half the channels each and
// concatenates [range | reflectance]. Locations where `mask` is zero get the
// zero vector. Throws ShapeMismatch when the maps differ in size.
FeatureMaps extract_dual_branch(const GrayImage& range_map, const GrayImage& reflectance_map,
                                int d_patch = kDefaultPatchDim, int d_pixel = kDefaultPixelDim,
                                std::span<const std::uint8_t> mask = {});

// Scales projection maps into [0,1] images and runs the dual branch with the
// occupancy mask.
FeatureMaps extract_lidar_features(const projection::ProjectionMaps& maps, double range_max,
                                   int d_patch = kDefaultPatchDim, int d_pixel = kDefaultPixelDim);

// Patch descriptors as the re-normalised 4x4 average of pixel descriptors.
DenseFeatures pool_patches(const DenseFeatures& pixel);

// --- persistence ------------------------------------------------------------

struct LoadReport {
  std::size_t renormalized = 0;  // vectors whose norm was off by more than 1e-3
};

// Two consecutive PPRT tensors, patch then pixel, each rank 3 (H, W, D).
void save_features(const std::string& path, const FeatureMaps& features);

// Every non-zero vector ends unit-norm. With `pixel_mask`, a zero vector at a
// valid pixel (or in a patch holding any valid pixel) raises NormError.
FeatureMaps load_features(const std::string& path, std::span<const std::uint8_t> pixel_mask = {},
                          LoadReport* report = nullptr);

}  // namespace papireg::features
