#include "papireg/geom.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "papireg/error.hpp"

namespace papireg::geom {

Eigen::Matrix<double, 3, 4> Pose::matrix() const {
  Eigen::Matrix<double, 3, 4> m;
  m.leftCols<3>() = rotation;
  m.col(3) = translation;
  return m;
}

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    fail(ErrorCode::InvalidArgument, "principal point outside the image");
  }
}

Intrinsics Intrinsics::scaled(int new_width, int new_height) const {
  // Pixel centres sit at integer coordinates, so the mapping is affine about -0.5.
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  Intrinsics out = *this;
  out.fx = fx * sx;
  out.fy = fy * sy;
  out.cx = (cx + 0.5) * sx - 0.5;
  out.cy = (cy + 0.5) * sy - 0.5;
  out.width = new_width;
  out.height = new_height;
  return out;
}

void PerturbationSpec::validate() const {
  if (!(max_xy_translation >= 0.0)) fail(ErrorCode::InvalidArgument, "max_xy_translation must be >= 0");
  if (!(yaw_range >= 0.0 && yaw_range <= 360.0)) fail(ErrorCode::InvalidArgument, "yaw_range must be in [0, 360]");
}

bool is_rotation(const Eigen::Matrix3d& r, double tolerance) {
  if (!r.allFinite()) return false;
  const double drift = (r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return drift <= tolerance && std::abs(r.determinant() - 1.0) <= tolerance;
}

Eigen::Matrix3d orthonormalize(const Eigen::Matrix3d& r) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Eigen::Matrix3d rot_x(double a) {
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}

Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}

Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

double deg2rad(double degrees) { return degrees * std::numbers::pi / 180.0; }
double rad2deg(double radians) { return radians * 180.0 / std::numbers::pi; }

Pose compose(const Pose& a, const Pose& b) {
  Pose out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (!is_rotation(out.rotation)) out.rotation = orthonormalize(out.rotation);
  return out;
}

Pose inverse(const Pose& p) {
  Pose out;
  out.rotation = p.rotation.transpose();
  out.translation = -(out.rotation * p.translation);
  return out;
}

Eigen::Vector3d apply(const Pose& p, const Eigen::Vector3d& point) {
  return p.rotation * point + p.translation;
}

std::optional<Eigen::Vector2d> project_pinhole(const Intrinsics& k, const Pose& p,
                                               const Eigen::Vector3d& point) {
  const Eigen::Vector3d q = apply(p, point);
  if (!(q.z() > kNearPlane)) return std::nullopt;
  const Eigen::Vector2d px(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
  if (!(px.x() >= 0.0 && px.x() < k.width && px.y() >= 0.0 && px.y() < k.height)) {
    return std::nullopt;
  }
  return px;
}

Pose sample_perturbation(const PerturbationSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const double yaw = deg2rad(0.5 * spec.yaw_range) * unit(rng);
  const double tx = spec.max_xy_translation * unit(rng);
  const double ty = spec.max_xy_translation * unit(rng);
  return Pose::from_rt(rot_z(yaw), Eigen::Vector3d(tx, ty, 0.0));
}

std::string format_pose(const Pose& p) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto m = p.matrix();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (r || c) os << ' ';
      os << m(r, c);
    }
  }
  return os.str();
}

Pose parse_pose(const std::string& line) {
  std::istringstream is(line);
  double v[12];
  for (double& x : v) {
    if (!(is >> x)) fail(ErrorCode::FormatError, "pose line needs 12 numbers");
  }
  std::string extra;
  if (is >> extra) fail(ErrorCode::FormatError, "trailing tokens on pose line");
  Pose p;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) p.rotation(r, c) = v[4 * r + c];
    p.translation(r) = v[4 * r + 3];
  }
  if (!is_rotation(p.rotation, 1e-6)) fail(ErrorCode::NotARotation, "pose rotation is not orthonormal");
  return p;
}

std::vector<Pose> read_poses(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::vector<Pose> poses;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    poses.push_back(parse_pose(line));
  }
  return poses;
}

void write_poses(const std::string& path, const std::vector<Pose>& poses) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  for (const auto& p : poses) out << format_pose(p) << '\n';
}

}  // namespace papireg::geom
