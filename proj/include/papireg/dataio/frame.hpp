#pragma once

#include <optional>
#include <string>
#include <vector>

#include "papireg/dataio/config.hpp"
#include "papireg/dataio/synthetic.hpp"
#include "papireg/features.hpp"
#include "papireg/geom.hpp"
#include "papireg/image.hpp"
#include "papireg/projection.hpp"

namespace papireg::dataio {

// Everything registration needs for one image/scan pair.
struct Frame {
  std::string name;
  RgbImage image;  // may be empty when camera features are supplied
  projection::PointCloud cloud;
  projection::ProjectionMaps maps;
  geom::Intrinsics intrinsics;
  std::optional<geom::Pose> gt_extrinsics;
  std::optional<features::FeatureMaps> camera_features;
  std::optional<features::FeatureMaps> lidar_features;
};

// A frame directory holds frame.txt ("key = value", paths relative to the
// directory) with the keys image, cloud, laser_ids, maps, camera_features,
// lidar_features, intrinsics ("fx fy cx cy width height") and gt_extrinsics
// (12 numbers). Only cloud and intrinsics are required.
void save_frame(const std::string& dir, const Frame& frame);
// Missing maps are projected with `cfg.projection`.
Frame load_frame_dir(const std::string& dir, const RunConfig& cfg);

Frame frame_from_synthetic(const SyntheticScene& scene, const std::string& name);

// Manifest lines: "frame <dir>" or "kitti <root> <index>"; '#' comments.
// Relative paths resolve against the manifest's directory.
struct ManifestEntry {
  enum class Kind { Directory, Kitti };
  Kind kind = Kind::Directory;
  std::string path;
  int index = 0;
};

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& base_dir);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// KITTI entries are perturbed with cfg.perturbation(position).
Frame load_frame(const ManifestEntry& entry, const RunConfig& cfg, std::size_t position);

}  // namespace papireg::dataio
