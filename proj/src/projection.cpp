#include "papireg/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "papireg/error.hpp"

namespace papireg::projection {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kZeroRange = 1e-12;

int elevation_row(double theta, double theta_min, double theta_max, int rows) {
  const double span = theta_max - theta_min;
  if (span <= 0.0) return 0;
  const int v = static_cast<int>(std::floor(rows * (theta_max - theta) / span));
  return std::clamp(v, 0, rows - 1);
}

std::pair<double, double> elevation_extent(const PointCloud& cloud) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& p : cloud.points) {
    const Eigen::Vector3d xyz = p.xyz();
    if (xyz.norm() < kZeroRange) continue;
    const double theta = spherical_coords(xyz).theta;
    lo = std::min(lo, theta);
    hi = std::max(hi, theta);
  }
  return {lo, hi};
}

// Nearest-wins rasterisation shared by both row rules.
template <typename RowFn>
ProjectionMaps rasterize(const PointCloud& cloud, const ProjectionConfig& cfg, RowFn row_of) {
  ProjectionMaps maps = ProjectionMaps::empty(cfg.height, cfg.width);
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const LidarPoint& pt = cloud.points[i];
    const Eigen::Vector3d xyz = pt.xyz();
    const double r = xyz.norm();
    if (r < kZeroRange) continue;
    const SphericalCoords sc = spherical_coords(xyz);
    const Pixel px{azimuth_column(sc.phi, cfg), row_of(i, sc)};
    const std::size_t cell = maps.offset(px);
    if (maps.occupancy[cell] && !(static_cast<float>(r) < maps.range[cell])) continue;
    maps.occupancy[cell] = 1;
    maps.range[cell] = static_cast<float>(r);
    maps.reflectance[cell] = static_cast<float>(pt.reflectance);
    maps.index[cell] = static_cast<std::int32_t>(i);
  }
  return maps;
}

}  // namespace

void PointCloud::validate(int n_lasers) const {
  if (points.empty()) fail(ErrorCode::InvalidArgument, "point cloud is empty");
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z) || !std::isfinite(p.reflectance)) {
      fail(ErrorCode::InvalidArgument, "point cloud contains non-finite values");
    }
  }
  if (laser_id) {
    if (laser_id->size() != points.size()) fail(ErrorCode::InvalidArgument, "laser id count differs from point count");
    for (int id : *laser_id) {
      if (id < 0 || id >= n_lasers) {
        fail(ErrorCode::InvalidArgument, "laser id " + std::to_string(id) + " outside [0, " + std::to_string(n_lasers) + ")");
      }
    }
  }
}

void ProjectionConfig::validate() const {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "projection map must be at least 1x1");
  if (!(range_max > 0.0)) fail(ErrorCode::InvalidArgument, "range_max must be positive");
}

ProjectionMaps ProjectionMaps::empty(int height, int width) {
  ProjectionMaps m;
  m.height = height;
  m.width = width;
  const std::size_t n = static_cast<std::size_t>(height) * width;
  m.range.assign(n, -1.0f);
  m.reflectance.assign(n, -1.0f);
  m.occupancy.assign(n, 0);
  m.index.assign(n, -1);
  return m;
}

std::size_t ProjectionMaps::occupied_count() const {
  return static_cast<std::size_t>(std::count(occupancy.begin(), occupancy.end(), std::uint8_t{1}));
}

double ProjectionMaps::occupancy_ratio() const {
  return occupancy.empty() ? 0.0 : static_cast<double>(occupied_count()) / occupancy.size();
}

SphericalCoords spherical_coords(const Eigen::Vector3d& point) {
  const double r = point.norm();
  if (r < kZeroRange) fail(ErrorCode::ZeroPoint, "spherical coordinates undefined at the origin");
  SphericalCoords sc;
  sc.range = r;
  sc.theta = std::asin(std::clamp(point.z() / r, -1.0, 1.0));
  sc.phi = std::atan2(point.y(), point.x());
  if (sc.phi <= -std::numbers::pi) sc.phi = std::numbers::pi;
  return sc;
}

std::vector<int> assign_laser_ids(const PointCloud& cloud, int n_lasers) {
  if (n_lasers < 1) fail(ErrorCode::InvalidArgument, "n_lasers must be >= 1");
  if (cloud.laser_id) return *cloud.laser_id;

  std::vector<int> ids(cloud.points.size(), 0);
  if (n_lasers == 1) return ids;
  const auto [lo, hi] = elevation_extent(cloud);
  if (!(hi > lo)) fail(ErrorCode::InsufficientSpread, "all points share one elevation");
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Eigen::Vector3d xyz = cloud.points[i].xyz();
    if (xyz.norm() < kZeroRange) continue;
    ids[i] = elevation_row(spherical_coords(xyz).theta, lo, hi, n_lasers);
  }
  return ids;
}

int azimuth_column(double phi, const ProjectionConfig& cfg) {
  double rel = std::fmod(phi - cfg.azimuth_origin, kTwoPi);
  if (rel < 0.0) rel += kTwoPi;
  if (rel >= kTwoPi) rel = 0.0;
  const int u = static_cast<int>(std::floor(cfg.width * rel / kTwoPi));
  return std::clamp(u, 0, cfg.width - 1);
}

std::optional<Pixel> pixel_of_point(const LidarPoint& point, int laser_id, const ProjectionConfig& cfg) {
  const Eigen::Vector3d xyz = point.xyz();
  if (xyz.norm() < kZeroRange) return std::nullopt;
  return Pixel{azimuth_column(spherical_coords(xyz).phi, cfg), laser_id};
}

ProjectionMaps project_to_maps(const PointCloud& cloud, const ProjectionConfig& cfg) {
  cfg.validate();
  cloud.validate(cfg.height);
  const std::vector<int> ids = assign_laser_ids(cloud, cfg.height);
  return rasterize(cloud, cfg, [&](std::size_t i, const SphericalCoords&) { return ids[i]; });
}

ProjectionMaps project_spherical(const PointCloud& cloud, const ProjectionConfig& cfg) {
  cfg.validate();
  const auto [lo, hi] = elevation_extent(cloud);
  return rasterize(cloud, cfg, [&, lo = lo, hi = hi](std::size_t, const SphericalCoords& sc) {
    return elevation_row(sc.theta, lo, hi, cfg.height);
  });
}

UnprojectedPoint unproject_pixel(const ProjectionMaps& maps, const PointCloud& cloud, Pixel pixel) {
  if (!maps.grid().contains(pixel)) fail(ErrorCode::InvalidArgument, "pixel outside the projection map");
  if (!maps.occupied(pixel)) fail(ErrorCode::EmptyPixel, "no point projects to this pixel");
  const std::int32_t idx = maps.index[maps.offset(pixel)];
  if (idx < 0 || static_cast<std::size_t>(idx) >= cloud.size()) {
    fail(ErrorCode::InvalidArgument, "projection index does not belong to this cloud");
  }
  const LidarPoint& p = cloud.points[static_cast<std::size_t>(idx)];
  return {p.xyz(), p.reflectance, idx};
}

PointCloud transformed(const PointCloud& cloud, const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation) {
  PointCloud out = cloud;
  for (auto& p : out.points) {
    const Eigen::Vector3d q = rotation * p.xyz() + translation;
    p.x = q.x();
    p.y = q.y();
    p.z = q.z();
  }
  return out;
}

std::vector<std::uint8_t> range_preview(const ProjectionMaps& maps, double range_max) {
  std::vector<std::uint8_t> out(maps.range.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!maps.occupancy[i]) continue;
    const double v = std::clamp(maps.range[i] / range_max, 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return out;
}

std::vector<std::uint8_t> reflectance_preview(const ProjectionMaps& maps) {
  std::vector<std::uint8_t> out(maps.reflectance.size(), 0);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!maps.occupancy[i]) continue;
    const double v = std::clamp(static_cast<double>(maps.reflectance[i]), 0.0, 1.0);
    out[i] = static_cast<std::uint8_t>(std::lround(255.0 * v));
  }
  return out;
}

}  // namespace papireg::projection
