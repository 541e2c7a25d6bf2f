#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace papireg::geom {

// Rigid transform x -> rotation * x + translation. Extrinsics map LiDAR
// coordinates into the camera frame.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_rt(const Eigen::Matrix3d& r, const Eigen::Vector3d& t) { return {r, t}; }

  // Row-major 3x4 [R|t].
  Eigen::Matrix<double, 3, 4> matrix() const;
};

// Pinhole camera with no distortion.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  Eigen::Matrix3d matrix() const;
  // Throws InvalidArgument unless fx, fy > 0 and the principal point lies in the image.
  void validate() const;
  // Intrinsics for the same camera resampled to new_width x new_height.
  Intrinsics scaled(int new_width, int new_height) const;
};

struct PerturbationSpec {
  double max_xy_translation = 10.0;  // meters
  double yaw_range = 360.0;          // degrees, centred on zero
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kOrthonormalTolerance = 1e-9;
inline constexpr double kNearPlane = 1e-3;

bool is_rotation(const Eigen::Matrix3d& r, double tolerance = kOrthonormalTolerance);
// Nearest rotation in the Frobenius sense.
Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r);

Eigen::Matrix3d rot_x(double radians);
Eigen::Matrix3d rot_y(double radians);
Eigen::Matrix3d rot_z(double radians);

double deg2rad(double degrees);
double rad2deg(double radians);

// Applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
Eigen::Vector3d apply(const Pose& p, const Eigen::Vector3d& point);

// Pixel of `point` seen through extrinsics `p`, or nullopt when the point is
// behind the near plane or falls outside [0,width) x [0,height).
std::optional<Eigen::Vector2d> project_pinhole(const Intrinsics& k, const Pose& p,
                                               const Eigen::Vector3d& point);

// Pure yaw followed by an x/y translation; deterministic in spec.seed.
Pose sample_perturbation(const PerturbationSpec& spec);

// KITTI pose convention: 12 whitespace separated numbers per line.
std::string format_pose(const Pose& p);
Pose parse_pose(const std::string& line);
std::vector<Pose> read_poses(const std::string& path);
void write_poses(const std::string& path, const std::vector<Pose>& poses);

}  // namespace papireg::geom
