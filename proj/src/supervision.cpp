#include "papireg/supervision.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <set>

#include "papireg/error.hpp"
#include "papireg/features.hpp"

namespace papireg::supervision {
namespace {

using features::kPatchSize;

Pixel floor_div(Pixel p) { return {p.u / kPatchSize, p.v / kPatchSize}; }
Pixel floor_mod(Pixel p) { return {p.u % kPatchSize, p.v % kPatchSize}; }

double neg_log(double p) { return -std::log(std::max(p, kLogClamp)); }

}  // namespace

GroundTruthCorrs ground_truth_corrs(const projection::PointCloud& cloud, const projection::ProjectionMaps& maps,
                                    const geom::Intrinsics& k, const geom::Pose& t_gt) {
  k.validate();
  GroundTruthCorrs gt;
  for (int v = 0; v < maps.height; ++v) {
    for (int u = 0; u < maps.width; ++u) {
      const Pixel map_px{u, v};
      if (!maps.occupied(map_px)) continue;
      const auto up = projection::unproject_pixel(maps, cloud, map_px);
      const auto img = geom::project_pinhole(k, t_gt, up.point);
      if (!img) continue;
      const Pixel image_px{static_cast<int>(std::lround(img->x())), static_cast<int>(std::lround(img->y()))};
      if (image_px.u >= k.width || image_px.v >= k.height) continue;
      // Both coordinates are non-negative here, so / and % are floor and remainder.
      gt.pixel_corrs.push_back({image_px, map_px});
      gt.patch_corrs.push_back({floor_div(image_px), floor_div(map_px)});
      gt.within_patch_offsets.push_back({floor_mod(image_px), floor_mod(map_px)});
      gt.points.push_back(up.point);
    }
  }
  return gt;
}

std::vector<std::pair<int, int>> patch_pair_indices(const GroundTruthCorrs& gt, GridShape camera_patches,
                                                    GridShape lidar_patches) {
  std::vector<std::pair<int, int>> out;
  std::set<std::pair<int, int>> seen;
  for (const auto& pc : gt.patch_corrs) {
    if (!camera_patches.contains(pc.image) || !lidar_patches.contains(pc.map)) {
      fail(ErrorCode::InvalidArgument, "ground-truth patch outside the patch grid");
    }
    const std::pair<int, int> ij{camera_patches.flat(pc.image), lidar_patches.flat(pc.map)};
    if (seen.insert(ij).second) out.push_back(ij);
  }
  return out;
}

std::pair<int, int> offset_index(const PixelPair& offset) {
  return {offset.image.v * kPatchSize + offset.image.u, offset.map.v * kPatchSize + offset.map.u};
}

double patch_loss(const matching::AssignmentMatrix& p, const GroundTruthCorrs& gt, GridShape camera_patches,
                  GridShape lidar_patches) {
  if (gt.empty()) fail(ErrorCode::EmptyGroundTruth, "no ground-truth correspondences");
  if (p.values.rows() != camera_patches.size() || p.values.cols() != lidar_patches.size()) {
    fail(ErrorCode::ShapeMismatch, "assignment matrix does not match the patch grids");
  }
  const auto pairs = patch_pair_indices(gt, camera_patches, lidar_patches);
  double sum = 0.0;
  for (const auto& [i, j] : pairs) sum += neg_log(p.values(i, j));
  return sum / static_cast<double>(pairs.size());
}

double pixel_loss(std::span<const matching::AssignmentMatrix> per_patch, std::span<const PixelPair> offsets) {
  if (per_patch.size() != offsets.size() || offsets.empty()) {
    fail(ErrorCode::LengthMismatch, "need one assignment matrix per ground-truth correspondence");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const auto& m = per_patch[i].values;
    if (m.rows() != kPatchSize * kPatchSize || m.cols() != kPatchSize * kPatchSize) {
      fail(ErrorCode::ShapeMismatch, "pixel assignment must be 16x16");
    }
    const auto [r, c] = offset_index(offsets[i]);
    sum += neg_log(m(r, c));
  }
  return sum / static_cast<double>(offsets.size());
}

double total_loss(double patch_term, double pixel_term) { return patch_term + pixel_term; }

std::vector<matching::PatchMatch> training_patch_matches(const GroundTruthCorrs& gt) {
  std::vector<matching::PatchMatch> out;
  out.reserve(gt.patch_corrs.size());
  for (const auto& pc : gt.patch_corrs) out.push_back({pc.image, pc.map, 1.0});
  return out;
}

void write_ground_truth_csv(std::ostream& out, const GroundTruthCorrs& gt) {
  out << "u_img,v_img,u_map,v_map,x,y,z,confidence,pu_img,pv_img,pu_map,pv_map,ou_img,ov_img,ou_map,ov_map\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const auto& px = gt.pixel_corrs[i];
    const auto& pa = gt.patch_corrs[i];
    const auto& of = gt.within_patch_offsets[i];
    const auto& p = gt.points[i];
    out << px.image.u << ',' << px.image.v << ',' << px.map.u << ',' << px.map.v << ',' << p.x() << ',' << p.y()
        << ',' << p.z() << ",1," << pa.image.u << ',' << pa.image.v << ',' << pa.map.u << ',' << pa.map.v << ','
        << of.image.u << ',' << of.image.v << ',' << of.map.u << ',' << of.map.v << '\n';
  }
}

}  // namespace papireg::supervision
