#pragma once

#include <string>

#include "papireg/geom.hpp"
#include "papireg/image.hpp"
#include "papireg/projection.hpp"

namespace papireg::dataio {

struct KittiCalibration {
  geom::Intrinsics intrinsics;  // left colour camera (P2), full resolution
  geom::Pose velo_to_camera;    // Tr followed by the P2 baseline offset
};

// Parses "KEY: v0 v1 ..." lines; needs P2 and Tr (or Tr_velo_to_cam).
// Image size is not part of calib.txt and is taken from the arguments.
KittiCalibration parse_kitti_calibration(const std::string& text, int image_width, int image_height);

// Image, cloud and calibration of one frame before any perturbation.
struct RawPair {
  RgbImage image;
  projection::PointCloud cloud;
  geom::Intrinsics intrinsics;
  geom::Pose calibration;  // LiDAR -> camera
};

// <root>/image_2/NNNNNN.png, <root>/velodyne/NNNNNN.bin, <root>/calib.txt.
RawPair load_kitti_frame(const std::string& root, int index);

struct FramePair {
  RgbImage image;                    // resampled to the target size
  projection::PointCloud cloud;      // rotated, then translated
  projection::ProjectionMaps maps;   // built from the rotated cloud
  geom::Intrinsics intrinsics;       // matching the resampled image
  geom::Pose gt_extrinsics;          // calibration o perturbation^-1
  geom::Pose applied_perturbation;
};

inline constexpr int kTargetWidth = 512;
inline constexpr int kTargetHeight = 160;

// Applies the yaw, projects, then applies the x/y translation. Throws BadDims
// unless the target size is divisible by four.
FramePair prepare_pair(const RawPair& raw, const geom::PerturbationSpec& perturbation,
                       int target_width = kTargetWidth, int target_height = kTargetHeight,
                       const projection::ProjectionConfig& projection = {});

// Same, with an explicit perturbation pose (pure yaw plus x/y shift).
FramePair prepare_pair(const RawPair& raw, const geom::Pose& perturbation, int target_width, int target_height,
                       const projection::ProjectionConfig& projection);

}  // namespace papireg::dataio
