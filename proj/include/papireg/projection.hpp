#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "papireg/types.hpp"

namespace papireg::projection {

struct LidarPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double reflectance = 0.0;

  Eigen::Vector3d xyz() const { return {x, y, z}; }
};

struct PointCloud {
  std::vector<LidarPoint> points;
  // Physical laser ring per point, when the sensor reports it.
  std::optional<std::vector<int>> laser_id;

  std::size_t size() const { return points.size(); }
  // Throws InvalidArgument on an empty cloud, non-finite values, or a laser id
  // table of the wrong length / outside [0, n_lasers).
  void validate(int n_lasers) const;
};

struct ProjectionConfig {
  int width = 1024;   // azimuth bins
  int height = 64;    // one row per laser
  double azimuth_origin = -std::numbers::pi;
  double range_max = 80.0;  // only used for 8-bit export and builtin features

  GridShape grid() const { return {height, width}; }
  void validate() const;
};

// Row-major H x W grids. Empty cells hold -1 in range, reflectance and index.
struct ProjectionMaps {
  int height = 0;
  int width = 0;
  std::vector<float> range;
  std::vector<float> reflectance;
  std::vector<std::uint8_t> occupancy;
  std::vector<std::int32_t> index;

  static ProjectionMaps empty(int height, int width);

  GridShape grid() const { return {height, width}; }
  std::size_t offset(Pixel p) const { return static_cast<std::size_t>(p.v) * width + p.u; }
  bool occupied(Pixel p) const { return occupancy[offset(p)] != 0; }
  std::size_t occupied_count() const;
  double occupancy_ratio() const;
};

struct SphericalCoords {
  double range = 0.0;
  double theta = 0.0;  // elevation, asin(z / r)
  double phi = 0.0;    // azimuth in (-pi, pi]
};

SphericalCoords spherical_coords(const Eigen::Vector3d& point);

// Passes through sensor-provided ids; otherwise bins elevation uniformly into
// n_lasers rings with ring 0 at the highest elevation.
std::vector<int> assign_laser_ids(const PointCloud& cloud, int n_lasers);

// Azimuth column of a point, u increasing with phi from azimuth_origin.
int azimuth_column(double phi, const ProjectionConfig& cfg);

// Map pixel a cloud point lands in, or nullopt for points at the origin.
std::optional<Pixel> pixel_of_point(const LidarPoint& point, int laser_id, const ProjectionConfig& cfg);

// LaserID projection: column from azimuth, row from laser ring. The nearest
// point wins each cell (ties to the lower index).
ProjectionMaps project_to_maps(const PointCloud& cloud, const ProjectionConfig& cfg);

// Elevation-binned spherical projection; kept as the baseline the LaserID
// rows are compared against.
ProjectionMaps project_spherical(const PointCloud& cloud, const ProjectionConfig& cfg);

struct UnprojectedPoint {
  Eigen::Vector3d point;
  double reflectance = 0.0;
  std::int32_t index = -1;
};

UnprojectedPoint unproject_pixel(const ProjectionMaps& maps, const PointCloud& cloud, Pixel pixel);

// Rigidly transforms every point, keeping laser ids.
PointCloud transformed(const PointCloud& cloud, const Eigen::Matrix3d& rotation,
                       const Eigen::Vector3d& translation);

// 8-bit previews: range / range_max and reflectance clamped to [0,1]; empty -> 0.
std::vector<std::uint8_t> range_preview(const ProjectionMaps& maps, double range_max);
std::vector<std::uint8_t> reflectance_preview(const ProjectionMaps& maps);

}  // namespace papireg::projection
