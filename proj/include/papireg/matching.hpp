#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "papireg/features.hpp"
#include "papireg/projection.hpp"
#include "papireg/types.hpp"

namespace papireg::matching {

// Rows index camera locations, columns LiDAR locations, both flattened
// row-major over their grids.
struct ScoreMatrix {
  Eigen::MatrixXd values;
  GridShape camera_grid;
  GridShape lidar_grid;
};

struct AssignmentMatrix {
  Eigen::MatrixXd values;
  GridShape camera_grid;
  GridShape lidar_grid;
};

struct MatchingHeads {
  features::LinearHead camera;
  features::LinearHead lidar;
};

struct PatchMatch {
  Pixel camera_patch;  // (col, row) in the camera patch grid
  Pixel lidar_patch;
  double score = 0.0;
};

struct PixelMatch {
  Pixel image_pixel;
  Pixel lidar_pixel;
  double confidence = 0.0;
};

struct Correspondence {
  Eigen::Vector2d image;  // camera pixel coordinates
  Pixel map;              // projection-map pixel
  Eigen::Vector3d point;  // LiDAR-frame point behind `map`
  double confidence = 0.0;
};

struct CorrespondenceSet {
  std::vector<Correspondence> items;
  std::size_t dropped = 0;  // matches that fell on empty map pixels

  std::size_t size() const { return items.size(); }
  bool empty() const { return items.empty(); }
};

// S = (F_C W_C)(F_L W_L)^T. Throws ShapeMismatch when widths disagree.
ScoreMatrix score_matrix(const features::DenseFeatures& camera, const features::DenseFeatures& lidar,
                         const MatchingHeads& heads = {});

// Dual softmax: column softmax times row softmax, each max-subtracted. No
// dustbin row or column.
AssignmentMatrix soft_assignment(const ScoreMatrix& s);
AssignmentMatrix soft_assignment(const Eigen::MatrixXd& s);

// The k largest entries over the whole matrix, descending, ties to the
// lexicographically smaller (camera, lidar) index.
std::vector<PatchMatch> topk_patch_matches(const AssignmentMatrix& p, int k);

// 16x16 assignment between the pixel blocks under a patch pair; rows and
// columns follow row-major order inside each 4x4 block.
AssignmentMatrix pixel_assignment(const PatchMatch& match, const features::DenseFeatures& camera_pixels,
                                  const features::DenseFeatures& lidar_pixels, const MatchingHeads& heads = {});

// Top-1 pixel pair inside a patch pair.
PixelMatch pixel_match_within_patch(const PatchMatch& match, const features::DenseFeatures& camera_pixels,
                                    const features::DenseFeatures& lidar_pixels, const MatchingHeads& heads = {});

// Pixel refinement over a list of patch pairs, in input order. With
// ground-truth patch pairs this is the training-mode path that skips top-k.
std::vector<PixelMatch> match_pixels(std::span<const PatchMatch> patches, const features::DenseFeatures& camera_pixels,
                                     const features::DenseFeatures& lidar_pixels, const MatchingHeads& heads = {});

CorrespondenceSet build_correspondences(std::span<const PixelMatch> matches, const projection::ProjectionMaps& maps,
                                        const projection::PointCloud& cloud);

struct MatchOptions {
  int top_k = 300;
  MatchingHeads patch_heads;
  MatchingHeads pixel_heads;
};

struct MatchTimings {
  double dense_seconds = 0.0;   // score matrix + dual softmax
  double refine_seconds = 0.0;  // top-k + pixel refinement + assembly
  double total() const { return dense_seconds + refine_seconds; }
};

// Patch-level dense stage, shared by every top-k setting.
AssignmentMatrix patch_assignment(const features::FeatureMaps& camera, const features::FeatureMaps& lidar,
                                  const MatchingHeads& heads = {});

// Top-k selection, pixel refinement and correspondence assembly on a
// precomputed patch assignment.
CorrespondenceSet refine_matches(const AssignmentMatrix& patch_p, const features::FeatureMaps& camera,
                                 const features::FeatureMaps& lidar, const projection::ProjectionMaps& maps,
                                 const projection::PointCloud& cloud, const MatchOptions& options);

// Full patch-to-pixel matcher.
CorrespondenceSet match_patch_to_pixel(const features::FeatureMaps& camera, const features::FeatureMaps& lidar,
                                       const projection::ProjectionMaps& maps, const projection::PointCloud& cloud,
                                       const MatchOptions& options, MatchTimings* timings = nullptr);

// CSV: u_img,v_img,u_map,v_map,x,y,z,confidence
void write_correspondences_csv(std::ostream& out, const CorrespondenceSet& corrs);
void write_correspondences_csv(const std::string& path, const CorrespondenceSet& corrs);
CorrespondenceSet read_correspondences_csv(const std::string& path);

}  // namespace papireg::matching
