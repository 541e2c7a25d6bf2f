#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "papireg/geom.hpp"
#include "papireg/matching.hpp"
#include "papireg/projection.hpp"
#include "papireg/types.hpp"

namespace papireg::supervision {

struct PixelPair {
  Pixel image;
  Pixel map;

  friend auto operator<=>(const PixelPair&, const PixelPair&) = default;
};

// Ground-truth 3D-2D correspondences and their patch / within-patch split.
// patch_corrs[i] = floor(pixel_corrs[i] / 4), within_patch_offsets[i] =
// pixel_corrs[i] mod 4, componentwise.
struct GroundTruthCorrs {
  std::vector<PixelPair> pixel_corrs;
  std::vector<PixelPair> patch_corrs;
  std::vector<PixelPair> within_patch_offsets;
  std::vector<Eigen::Vector3d> points;

  std::size_t size() const { return pixel_corrs.size(); }
  bool empty() const { return pixel_corrs.empty(); }
};

inline constexpr double kLogClamp = 1e-12;

// Projects every occupied map pixel's point through the ground-truth
// extrinsics; keeps those whose rounded pixel lands inside the image.
GroundTruthCorrs ground_truth_corrs(const projection::PointCloud& cloud, const projection::ProjectionMaps& maps,
                                    const geom::Intrinsics& k, const geom::Pose& t_gt);

// Distinct (camera patch, LiDAR patch) pairs, first-occurrence order, as flat
// indices into a patch assignment matrix.
std::vector<std::pair<int, int>> patch_pair_indices(const GroundTruthCorrs& gt, GridShape camera_patches,
                                                    GridShape lidar_patches);

// Flat index of a within-patch offset pair inside a 16x16 pixel assignment.
std::pair<int, int> offset_index(const PixelPair& offset);

// Mean -log P over the distinct ground-truth patch pairs. Throws EmptyGroundTruth.
double patch_loss(const matching::AssignmentMatrix& p, const GroundTruthCorrs& gt, GridShape camera_patches,
                  GridShape lidar_patches);

// Mean -log p^i at the i-th offset. Throws LengthMismatch when the counts
// differ or are zero.
double pixel_loss(std::span<const matching::AssignmentMatrix> per_patch, std::span<const PixelPair> offsets);

double total_loss(double patch_term, double pixel_term);

// Ground-truth patch pairs in training order, for the matcher's top-k bypass.
std::vector<matching::PatchMatch> training_patch_matches(const GroundTruthCorrs& gt);

// Correspondence CSV columns plus pu_img,pv_img,pu_map,pv_map,ou_img,ov_img,ou_map,ov_map.
void write_ground_truth_csv(std::ostream& out, const GroundTruthCorrs& gt);

}  // namespace papireg::supervision
