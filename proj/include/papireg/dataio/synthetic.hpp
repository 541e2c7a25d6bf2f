#pragma once

#include <cstdint>
#include <numbers>
#include <vector>

#include "papireg/features.hpp"
#include "papireg/geom.hpp"
#include "papireg/image.hpp"
#include "papireg/projection.hpp"
#include "papireg/supervision.hpp"

namespace papireg::dataio {

struct SyntheticOptions {
  std::uint64_t seed = 0;
  int n_lasers = 32;
  int w_r = 512;
  // Camera patches whose features are swapped for those of an unrelated
  // LiDAR patch; every pixel match inside them is wrong.
  int n_outlier_features = 0;

  int image_width = 512;
  int image_height = 160;
  double focal = 300.0;
  int d_patch = features::kDefaultPatchDim;
  int d_pixel = features::kDefaultPixelDim;

  double elevation_top_deg = 15.0;
  double elevation_bottom_deg = -25.0;
  double elevation_jitter_deg = 0.0;  // uniform per-point noise; 0 keeps rings exact

  bool perturb = true;
  double max_xy_translation = 10.0;
  double yaw_range = 360.0;
};

struct SyntheticScene {
  projection::PointCloud cloud;  // rotated then translated, with laser ids
  projection::ProjectionConfig projection;
  projection::ProjectionMaps maps;  // generated before the translation
  geom::Intrinsics intrinsics;
  geom::Pose calibration;           // LiDAR -> camera before the perturbation
  geom::Pose applied_perturbation;  // yaw then x/y shift
  geom::Pose gt_extrinsics;         // calibration o perturbation^-1
  features::FeatureMaps camera_features;
  features::FeatureMaps lidar_features;
  RgbImage image;
  // Image/map pixel pairs that share a code, excluding corrupted patches.
  std::vector<supervision::PixelPair> correspondences;
  std::vector<Pixel> corrupted_patches;  // camera patch coordinates
};

// Ring scan of a procedural street-like scene seen by a camera whose pixels
// coincide exactly with the projections of the points it sees. Ideal
// features give partners identical random unit codes. Deterministic in the
// options. Throws InvalidArgument for non-positive sizes and BadDims when a
// grid is not divisible by four.
SyntheticScene generate_synthetic(const SyntheticOptions& options);
SyntheticScene generate_synthetic(std::uint64_t seed, int n_lasers = 32, int w_r = 512, int n_outlier_features = 0);

// Bin-centred ring scan with exactly one point per map cell (no camera).
projection::PointCloud bin_centered_scan(int n_lasers, int w_r, std::uint64_t seed,
                                         double azimuth_origin = -std::numbers::pi,
                                         double elevation_jitter_deg = 0.0);

}  // namespace papireg::dataio
