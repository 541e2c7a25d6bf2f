#include "papireg/matching.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <queue>
#include <sstream>

#include "papireg/error.hpp"

namespace papireg::matching {
namespace {

using features::DenseFeatures;
using features::kPatchSize;

struct Entry {
  double value;
  std::int64_t flat;
};

// Strict "ranks ahead of" order used by top-k.
bool ranks_ahead(const Entry& a, const Entry& b) {
  if (a.value != b.value) return a.value > b.value;
  return a.flat < b.flat;
}

DenseFeatures gather_block(const DenseFeatures& pixels, Pixel patch) {
  const GridShape patch_grid{pixels.height / kPatchSize, pixels.width / kPatchSize};
  if (!patch_grid.contains(patch)) fail(ErrorCode::InvalidArgument, "patch outside the feature grid");
  DenseFeatures block(kPatchSize, kPatchSize, pixels.channels);
  for (int dy = 0; dy < kPatchSize; ++dy) {
    for (int dx = 0; dx < kPatchSize; ++dx) {
      std::ranges::copy(pixels.at(patch.v * kPatchSize + dy, patch.u * kPatchSize + dx), block.at(dy, dx).begin());
    }
  }
  return block;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

ScoreMatrix score_matrix(const DenseFeatures& camera, const DenseFeatures& lidar, const MatchingHeads& heads) {
  const Eigen::MatrixXd fc = heads.camera.apply(camera.flattened());
  const Eigen::MatrixXd fl = heads.lidar.apply(lidar.flattened());
  if (fc.cols() != fl.cols()) fail(ErrorCode::ShapeMismatch, "camera and LiDAR feature widths differ");
  ScoreMatrix s;
  s.values = fc * fl.transpose();
  s.camera_grid = camera.grid();
  s.lidar_grid = lidar.grid();
  return s;
}

// exp(-600) is still a normal double, so a shared shift keeps every term exact.
constexpr double kSharedExpRange = 600.0;

AssignmentMatrix soft_assignment(const Eigen::MatrixXd& s) {
  AssignmentMatrix p;
  if (s.size() == 0) {
    p.values = s;
    return p;
  }
  const double hi = s.maxCoeff();
  if (hi - s.minCoeff() < kSharedExpRange) {
    // One exponential serves both directions when nothing can underflow.
    p.values = (s.array() - hi).exp().matrix();
    const Eigen::VectorXd row_sum = p.values.rowwise().sum();
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      auto c = p.values.col(j).array();
      const double inv_col = 1.0 / c.sum();
      c = c.square() * inv_col / row_sum.array();
    }
  } else {
    Eigen::ArrayXXd col = (s.rowwise() - s.colwise().maxCoeff()).array().exp();
    col.rowwise() /= col.colwise().sum();
    Eigen::ArrayXXd row = (s.colwise() - s.rowwise().maxCoeff()).array().exp();
    row.colwise() /= row.rowwise().sum();
    p.values = (col * row).matrix();
  }
  p.camera_grid = {1, static_cast<int>(s.rows())};
  p.lidar_grid = {1, static_cast<int>(s.cols())};
  return p;
}

AssignmentMatrix soft_assignment(const ScoreMatrix& s) {
  AssignmentMatrix p = soft_assignment(s.values);
  if (s.camera_grid.size() == s.values.rows()) p.camera_grid = s.camera_grid;
  if (s.lidar_grid.size() == s.values.cols()) p.lidar_grid = s.lidar_grid;
  return p;
}

std::vector<PatchMatch> topk_patch_matches(const AssignmentMatrix& p, int k) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  const Eigen::Index rows = p.values.rows();
  const Eigen::Index cols = p.values.cols();
  const auto limit = static_cast<std::size_t>(std::min<std::int64_t>(k, static_cast<std::int64_t>(rows) * cols));

  // Heap top is the weakest kept entry.
  std::priority_queue<Entry, std::vector<Entry>, decltype(&ranks_ahead)> heap(&ranks_ahead);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const Entry e{p.values(i, j), static_cast<std::int64_t>(i) * cols + j};
      if (heap.size() < limit) {
        heap.push(e);
      } else if (ranks_ahead(e, heap.top())) {
        heap.pop();
        heap.push(e);
      }
    }
  }
  std::vector<Entry> kept;
  kept.reserve(heap.size());
  while (!heap.empty()) {
    kept.push_back(heap.top());
    heap.pop();
  }
  std::ranges::sort(kept, ranks_ahead);

  const GridShape cam = p.camera_grid.size() == rows ? p.camera_grid : GridShape{1, static_cast<int>(rows)};
  const GridShape lid = p.lidar_grid.size() == cols ? p.lidar_grid : GridShape{1, static_cast<int>(cols)};
  std::vector<PatchMatch> out;
  out.reserve(kept.size());
  for (const Entry& e : kept) {
    out.push_back({cam.unflat(static_cast<int>(e.flat / cols)), lid.unflat(static_cast<int>(e.flat % cols)), e.value});
  }
  return out;
}

AssignmentMatrix pixel_assignment(const PatchMatch& match, const DenseFeatures& camera_pixels,
                                  const DenseFeatures& lidar_pixels, const MatchingHeads& heads) {
  return soft_assignment(score_matrix(gather_block(camera_pixels, match.camera_patch),
                                      gather_block(lidar_pixels, match.lidar_patch), heads));
}

PixelMatch pixel_match_within_patch(const PatchMatch& match, const DenseFeatures& camera_pixels,
                                    const DenseFeatures& lidar_pixels, const MatchingHeads& heads) {
  const AssignmentMatrix p = pixel_assignment(match, camera_pixels, lidar_pixels, heads);
  int best_i = 0;
  int best_j = 0;
  for (int i = 0; i < p.values.rows(); ++i) {
    for (int j = 0; j < p.values.cols(); ++j) {
      if (p.values(i, j) > p.values(best_i, best_j)) {
        best_i = i;
        best_j = j;
      }
    }
  }
  PixelMatch m;
  m.image_pixel = {match.camera_patch.u * kPatchSize + best_i % kPatchSize,
                   match.camera_patch.v * kPatchSize + best_i / kPatchSize};
  m.lidar_pixel = {match.lidar_patch.u * kPatchSize + best_j % kPatchSize,
                   match.lidar_patch.v * kPatchSize + best_j / kPatchSize};
  m.confidence = p.values(best_i, best_j);
  return m;
}

std::vector<PixelMatch> match_pixels(std::span<const PatchMatch> patches, const DenseFeatures& camera_pixels,
                                     const DenseFeatures& lidar_pixels, const MatchingHeads& heads) {
  std::vector<PixelMatch> out;
  out.reserve(patches.size());
  for (const auto& m : patches) out.push_back(pixel_match_within_patch(m, camera_pixels, lidar_pixels, heads));
  return out;
}

CorrespondenceSet build_correspondences(std::span<const PixelMatch> matches, const projection::ProjectionMaps& maps,
                                        const projection::PointCloud& cloud) {
  CorrespondenceSet out;
  out.items.reserve(matches.size());
  for (const auto& m : matches) {
    if (!maps.grid().contains(m.lidar_pixel)) fail(ErrorCode::InvalidArgument, "match outside the projection map");
    if (!maps.occupied(m.lidar_pixel)) {
      ++out.dropped;
      continue;
    }
    const auto up = projection::unproject_pixel(maps, cloud, m.lidar_pixel);
    out.items.push_back({Eigen::Vector2d(m.image_pixel.u, m.image_pixel.v), m.lidar_pixel, up.point, m.confidence});
  }
  return out;
}

AssignmentMatrix patch_assignment(const features::FeatureMaps& camera, const features::FeatureMaps& lidar,
                                  const MatchingHeads& heads) {
  return soft_assignment(score_matrix(camera.patch, lidar.patch, heads));
}

CorrespondenceSet refine_matches(const AssignmentMatrix& patch_p, const features::FeatureMaps& camera,
                                 const features::FeatureMaps& lidar, const projection::ProjectionMaps& maps,
                                 const projection::PointCloud& cloud, const MatchOptions& options) {
  if (lidar.pixel.height != maps.height || lidar.pixel.width != maps.width) {
    fail(ErrorCode::ShapeMismatch, "LiDAR pixel features do not cover the projection map");
  }
  const auto patches = topk_patch_matches(patch_p, options.top_k);
  const auto pixels = match_pixels(patches, camera.pixel, lidar.pixel, options.pixel_heads);
  return build_correspondences(pixels, maps, cloud);
}

CorrespondenceSet match_patch_to_pixel(const features::FeatureMaps& camera, const features::FeatureMaps& lidar,
                                       const projection::ProjectionMaps& maps, const projection::PointCloud& cloud,
                                       const MatchOptions& options, MatchTimings* timings) {
  auto t0 = std::chrono::steady_clock::now();
  const AssignmentMatrix p = patch_assignment(camera, lidar, options.patch_heads);
  const double dense = seconds_since(t0);
  t0 = std::chrono::steady_clock::now();
  CorrespondenceSet out = refine_matches(p, camera, lidar, maps, cloud, options);
  if (timings) *timings = {dense, seconds_since(t0)};
  return out;
}

void write_correspondences_csv(std::ostream& out, const CorrespondenceSet& corrs) {
  out << "u_img,v_img,u_map,v_map,x,y,z,confidence\n";
  out << std::setprecision(17);
  for (const auto& c : corrs.items) {
    out << c.image.x() << ',' << c.image.y() << ',' << c.map.u << ',' << c.map.v << ',' << c.point.x() << ','
        << c.point.y() << ',' << c.point.z() << ',' << c.confidence << '\n';
  }
}

void write_correspondences_csv(const std::string& path, const CorrespondenceSet& corrs) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  write_correspondences_csv(out, corrs);
}

CorrespondenceSet read_correspondences_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("u_img,v_img,u_map,v_map,x,y,z,confidence", 0) != 0) {
    fail(ErrorCode::FormatError, "missing correspondence CSV header");
  }
  CorrespondenceSet out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream is(line);
    Correspondence c;
    if (!(is >> c.image.x() >> c.image.y() >> c.map.u >> c.map.v >> c.point.x() >> c.point.y() >> c.point.z() >>
          c.confidence)) {
      fail(ErrorCode::FormatError, "bad correspondence row: " + line);
    }
    out.items.push_back(c);
  }
  return out;
}

}  // namespace papireg::matching
