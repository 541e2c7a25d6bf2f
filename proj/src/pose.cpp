#include "papireg/pose.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include <Eigen/Dense>

#include "papireg/error.hpp"

namespace papireg::pose {
namespace {

constexpr int kGaussNewtonIterations = 10;
constexpr double kPlanarRatio = 1e-6;
constexpr double kCollinearRatio = 1e-10;
constexpr double kBehindCameraPenalty = 1e6;  // pixels

// Control-point pairs whose world distances constrain the null-space mix.
std::vector<std::pair<int, int>> control_pairs(int nc) {
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < nc; ++a) {
    for (int b = a + 1; b < nc; ++b) pairs.emplace_back(a, b);
  }
  return pairs;
}

class EpnpSolver {
 public:
  EpnpSolver(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector2d> pixels,
             const geom::Intrinsics& k)
      : points_(points), pixels_(pixels), k_(k) {}

  geom::Pose solve() {
    choose_control_points();
    compute_barycentric();
    compute_null_space();
    compute_distance_terms();

    std::vector<Eigen::VectorXd> candidates;
    candidates.push_back(approx_first_column());
    candidates.push_back(approx_two_vectors());
    if (nc_ == 4) candidates.push_back(approx_three_vectors());
    // Single-vector starts along the other null directions help minimal samples,
    // whose null space is larger than the three vectors used above.
    if (points_.size() < 6) {
      for (int x = 1; x < nc_; ++x) candidates.push_back(approx_single_vector(x));
    }

    geom::Pose best;
    double best_err = std::numeric_limits<double>::infinity();
    for (Eigen::VectorXd& beta : candidates) {
      gauss_newton(beta);
      geom::Pose pose;
      if (!pose_from_betas(beta, pose)) continue;
      const double err = mean_error(pose);
      if (err < best_err) {
        best_err = err;
        best = pose;
      }
    }
    if (!std::isfinite(best_err)) fail(ErrorCode::Degenerate, "EPnP produced no finite candidate");
    return best;
  }

 private:
  void choose_control_points() {
    const auto n = static_cast<double>(points_.size());
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : points_) centroid += p;
    centroid /= n;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points_) cov += (p - centroid) * (p - centroid).transpose();

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    const Eigen::Vector3d lambda = eig.eigenvalues();  // ascending
    const double scale = std::max(1.0, centroid.squaredNorm());
    if (!(lambda(2) > 1e-20 * scale)) fail(ErrorCode::Degenerate, "coincident 3D points");
    if (lambda(1) < kCollinearRatio * lambda(2)) fail(ErrorCode::Degenerate, "collinear 3D points");
    nc_ = lambda(0) < kPlanarRatio * lambda(2) ? 3 : 4;

    control_.assign(static_cast<std::size_t>(nc_), centroid);
    axes_.resize(3, nc_ - 1);
    axis_scale_.resize(nc_ - 1);
    for (int i = 0; i < nc_ - 1; ++i) {
      const int e = 2 - i;  // largest spread first
      axis_scale_(i) = std::sqrt(lambda(e) / n);
      axes_.col(i) = eig.eigenvectors().col(e);
      control_[static_cast<std::size_t>(i) + 1] = centroid + axis_scale_(i) * axes_.col(i);
    }
  }

  void compute_barycentric() {
    alphas_.resize(static_cast<Eigen::Index>(points_.size()), nc_);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const Eigen::VectorXd local = (axes_.transpose() * (points_[i] - control_[0])).cwiseQuotient(axis_scale_);
      const auto row = static_cast<Eigen::Index>(i);
      alphas_(row, 0) = 1.0 - local.sum();
      alphas_.row(row).tail(nc_ - 1) = local.transpose();
    }
  }

  void compute_null_space() {
    const auto n = static_cast<Eigen::Index>(points_.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 3 * nc_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Vector2d& uv = pixels_[static_cast<std::size_t>(i)];
      for (int j = 0; j < nc_; ++j) {
        const double a = alphas_(i, j);
        m(2 * i, 3 * j) = a * k_.fx;
        m(2 * i, 3 * j + 2) = a * (k_.cx - uv.x());
        m(2 * i + 1, 3 * j + 1) = a * k_.fy;
        m(2 * i + 1, 3 * j + 2) = a * (k_.cy - uv.y());
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
    const Eigen::MatrixXd& v = svd.matrixV();
    null_.resize(3 * nc_, nc_);
    for (int a = 0; a < nc_; ++a) null_.col(a) = v.col(3 * nc_ - 1 - a);  // a = 0 is the smallest
  }

  void compute_distance_terms() {
    const auto pairs = control_pairs(nc_);
    rho_.resize(static_cast<Eigen::Index>(pairs.size()));
    gram_.assign(pairs.size(), Eigen::MatrixXd(nc_, nc_));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto [a, b] = pairs[p];
      rho_(static_cast<Eigen::Index>(p)) = (control_[a] - control_[b]).squaredNorm();
      Eigen::MatrixXd d(3, nc_);
      for (int x = 0; x < nc_; ++x) d.col(x) = null_.col(x).segment<3>(3 * a) - null_.col(x).segment<3>(3 * b);
      gram_[p] = d.transpose() * d;
    }
  }

  // Linearised solve over the monomials beta_x * beta_y listed in `terms`.
  Eigen::VectorXd solve_monomials(const std::vector<std::pair<int, int>>& terms) const {
    Eigen::MatrixXd l(rho_.size(), static_cast<Eigen::Index>(terms.size()));
    for (Eigen::Index p = 0; p < rho_.size(); ++p) {
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto [x, y] = terms[t];
        l(p, static_cast<Eigen::Index>(t)) = (x == y ? 1.0 : 2.0) * gram_[static_cast<std::size_t>(p)](x, y);
      }
    }
    return l.colPivHouseholderQr().solve(rho_);
  }

  Eigen::VectorXd approx_first_column() const {
    std::vector<std::pair<int, int>> terms;
    for (int x = 0; x < nc_; ++x) terms.emplace_back(0, x);
    const Eigen::VectorXd b = solve_monomials(terms);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nc_);
    if (b(0) < 0.0) {
      beta(0) = std::sqrt(-b(0));
      for (int x = 1; x < nc_; ++x) beta(x) = beta(0) > 0.0 ? -b(x) / beta(0) : 0.0;
    } else {
      beta(0) = std::sqrt(b(0));
      for (int x = 1; x < nc_; ++x) beta(x) = beta(0) > 0.0 ? b(x) / beta(0) : 0.0;
    }
    return beta;
  }

  Eigen::VectorXd approx_single_vector(int x) const {
    const double b = solve_monomials({{x, x}})(0);
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nc_);
    beta(x) = std::sqrt(std::abs(b));
    return beta;
  }

  // Recovers (beta0, beta1) from the estimates of beta0^2, beta0*beta1, beta1^2.
  static void first_two(const Eigen::VectorXd& b, Eigen::VectorXd& beta) {
    if (b(0) < 0.0) {
      beta(0) = std::sqrt(-b(0));
      beta(1) = b(2) < 0.0 ? std::sqrt(-b(2)) : 0.0;
    } else {
      beta(0) = std::sqrt(b(0));
      beta(1) = b(2) > 0.0 ? std::sqrt(b(2)) : 0.0;
    }
    if (b(1) < 0.0) beta(0) = -beta(0);
  }

  Eigen::VectorXd approx_two_vectors() const {
    const Eigen::VectorXd b = solve_monomials({{0, 0}, {0, 1}, {1, 1}});
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nc_);
    first_two(b, beta);
    return beta;
  }

  Eigen::VectorXd approx_three_vectors() const {
    const Eigen::VectorXd b = solve_monomials({{0, 0}, {0, 1}, {1, 1}, {0, 2}, {1, 2}});
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(nc_);
    first_two(b, beta);
    beta(2) = beta(0) != 0.0 ? b(3) / beta(0) : 0.0;
    return beta;
  }

  void gauss_newton(Eigen::VectorXd& beta) const {
    Eigen::MatrixXd jac(rho_.size(), nc_);
    Eigen::VectorXd res(rho_.size());
    for (int it = 0; it < kGaussNewtonIterations; ++it) {
      for (Eigen::Index p = 0; p < rho_.size(); ++p) {
        const Eigen::MatrixXd& g = gram_[static_cast<std::size_t>(p)];
        const Eigen::VectorXd gb = g * beta;
        jac.row(p) = 2.0 * gb.transpose();
        res(p) = rho_(p) - beta.dot(gb);
      }
      const Eigen::VectorXd step = jac.colPivHouseholderQr().solve(res);
      if (!step.allFinite()) return;
      beta += step;
    }
  }

  bool pose_from_betas(const Eigen::VectorXd& beta, geom::Pose& pose) const {
    if (!beta.allFinite()) return false;
    const Eigen::VectorXd ccs = null_ * beta;
    const auto n = points_.size();
    std::vector<Eigen::Vector3d> cam(n, Eigen::Vector3d::Zero());
    double z_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < nc_; ++j) cam[i] += alphas_(static_cast<Eigen::Index>(i), j) * ccs.segment<3>(3 * j);
      z_sum += cam[i].z();
    }
    if (z_sum < 0.0) {
      for (auto& c : cam) c = -c;
    }

    Eigen::Vector3d pc = Eigen::Vector3d::Zero();
    Eigen::Vector3d pw = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
      pc += cam[i];
      pw += points_[i];
    }
    pc /= static_cast<double>(n);
    pw /= static_cast<double>(n);
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < n; ++i) h += (cam[i] - pc) * (points_[i] - pw).transpose();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    d(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    pose.rotation = svd.matrixU() * d * svd.matrixV().transpose();
    pose.translation = pc - pose.rotation * pw;
    return pose.rotation.allFinite() && pose.translation.allFinite();
  }

  // Points behind the camera cost a large finite penalty so candidates stay
  // comparable; RANSAC scoring rejects such poses anyway.
  double mean_error(const geom::Pose& pose) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      sum += std::min(reprojection_error(pose, k_, points_[i], pixels_[i]), kBehindCameraPenalty);
    }
    return sum / static_cast<double>(points_.size());
  }

  std::span<const Eigen::Vector3d> points_;
  std::span<const Eigen::Vector2d> pixels_;
  geom::Intrinsics k_;

  int nc_ = 4;
  std::vector<Eigen::Vector3d> control_;
  Eigen::MatrixXd axes_;
  Eigen::VectorXd axis_scale_;
  Eigen::MatrixXd alphas_;
  Eigen::MatrixXd null_;
  Eigen::VectorXd rho_;
  std::vector<Eigen::MatrixXd> gram_;
};

struct Score {
  std::vector<bool> mask;
  std::size_t count = 0;
  double mean = std::numeric_limits<double>::infinity();
};

Score score_pose(const geom::Pose& pose, std::span<const Eigen::Vector3d> points,
                 std::span<const Eigen::Vector2d> pixels, const geom::Intrinsics& k, double threshold) {
  Score s;
  s.mask.assign(points.size(), false);
  double sum = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double e = reprojection_error(pose, k, points[i], pixels[i]);
    if (e < threshold) {
      s.mask[i] = true;
      ++s.count;
      sum += e;
    }
  }
  if (s.count) s.mean = sum / static_cast<double>(s.count);
  return s;
}

double mean_over(const geom::Pose& pose, std::span<const Eigen::Vector3d> points,
                 std::span<const Eigen::Vector2d> pixels, const geom::Intrinsics& k, const std::vector<bool>& mask) {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!mask[i]) continue;
    sum += reprojection_error(pose, k, points[i], pixels[i]);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::infinity();
}

int required_iterations(double inlier_ratio, int sample_size, double confidence, int cap) {
  const double all_inliers = std::pow(inlier_ratio, sample_size);
  if (all_inliers <= 0.0) return cap;
  if (all_inliers >= 1.0) return 1;
  const double needed = std::log(1.0 - confidence) / std::log(1.0 - all_inliers);
  if (!std::isfinite(needed) || needed >= cap) return cap;
  return std::max(1, static_cast<int>(std::ceil(needed)));
}

}  // namespace

void RansacParams::validate() const {
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) fail(ErrorCode::InvalidArgument, "inlier_threshold must be positive");
  if (sample_size < 4) fail(ErrorCode::InvalidArgument, "sample_size must be >= 4");
  if (min_inliers < 0) fail(ErrorCode::InvalidArgument, "min_inliers must be >= 0");
  if (!(confidence > 0.0 && confidence < 1.0)) fail(ErrorCode::InvalidArgument, "confidence must lie in (0, 1)");
}

double reprojection_error(const geom::Pose& pose, const geom::Intrinsics& k, const Eigen::Vector3d& point,
                          const Eigen::Vector2d& pixel) {
  const Eigen::Vector3d q = geom::apply(pose, point);
  if (!(q.z() > geom::kNearPlane)) return std::numeric_limits<double>::infinity();
  const Eigen::Vector2d proj(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
  return (proj - pixel).norm();
}

geom::Pose epnp(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector2d> pixels,
                const geom::Intrinsics& k) {
  if (points.size() != pixels.size()) fail(ErrorCode::LengthMismatch, "points and pixels differ in count");
  if (points.size() < 4) fail(ErrorCode::TooFew, "EPnP needs at least 4 correspondences");
  return EpnpSolver(points, pixels, k).solve();
}

geom::Pose epnp(const matching::CorrespondenceSet& corrs, const geom::Intrinsics& k) {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pixels;
  for (const auto& c : corrs.items) {
    points.push_back(c.point);
    pixels.push_back(c.image);
  }
  return epnp(points, pixels, k);
}

std::vector<std::size_t> ransac_sample(std::uint64_t seed, int iteration, std::size_t population, int sample_size) {
  if (population < static_cast<std::size_t>(sample_size)) fail(ErrorCode::TooFew, "population smaller than sample");
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> pick(0, population - 1);
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(sample_size));
  while (out.size() < static_cast<std::size_t>(sample_size)) {
    const std::size_t i = pick(rng);
    if (std::ranges::find(out, i) == out.end()) out.push_back(i);
  }
  return out;
}

PoseEstimate ransac_pnp(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector2d> pixels,
                        const geom::Intrinsics& k, const RansacParams& params) {
  params.validate();
  if (points.size() != pixels.size()) fail(ErrorCode::LengthMismatch, "points and pixels differ in count");
  const std::size_t n = points.size();
  if (n < static_cast<std::size_t>(params.sample_size) || n < static_cast<std::size_t>(params.min_inliers)) {
    fail(ErrorCode::NoConsensus, "only " + std::to_string(n) + " correspondences");
  }

  geom::Pose best_pose;
  Score best;
  best.count = 0;
  int needed = params.max_iterations;
  int it = 0;
  std::vector<Eigen::Vector3d> sp(static_cast<std::size_t>(params.sample_size));
  std::vector<Eigen::Vector2d> sx(static_cast<std::size_t>(params.sample_size));
  for (; it < needed; ++it) {
    const auto idx = ransac_sample(params.seed, it, n, params.sample_size);
    for (std::size_t s = 0; s < idx.size(); ++s) {
      sp[s] = points[idx[s]];
      sx[s] = pixels[idx[s]];
    }
    geom::Pose hypothesis;
    try {
      hypothesis = epnp(sp, sx, k);
    } catch (const Error&) {
      continue;
    }
    Score s = score_pose(hypothesis, points, pixels, k, params.inlier_threshold);
    if (s.count > best.count || (s.count == best.count && s.count > 0 && s.mean < best.mean)) {
      best = std::move(s);
      best_pose = hypothesis;
      needed = required_iterations(static_cast<double>(best.count) / n, params.sample_size, params.confidence,
                                   params.max_iterations);
    }
  }

  if (best.count == 0 || best.count < static_cast<std::size_t>(params.min_inliers)) {
    fail(ErrorCode::NoConsensus, "best hypothesis has " + std::to_string(best.count) + " inliers, need " +
                                     std::to_string(params.min_inliers));
  }

  PoseEstimate est;
  est.iterations = std::min(it, params.max_iterations);
  est.hypothesis_pose = best_pose;
  est.hypothesis_inlier_mask = best.mask;
  est.hypothesis_mean_error = best.mean;
  est.pose = best_pose;
  est.inlier_mask = best.mask;
  est.inlier_count = best.count;
  est.mean_reprojection_error = best.mean;

  if (best.count >= 4) {
    std::vector<Eigen::Vector3d> ip;
    std::vector<Eigen::Vector2d> ix;
    for (std::size_t i = 0; i < n; ++i) {
      if (!best.mask[i]) continue;
      ip.push_back(points[i]);
      ix.push_back(pixels[i]);
    }
    try {
      const geom::Pose refit = epnp(ip, ix, k);
      // The refit must not do worse on the hypothesis' own inliers, nor lose any.
      const double on_hypothesis_set = mean_over(refit, points, pixels, k, best.mask);
      Score s = score_pose(refit, points, pixels, k, params.inlier_threshold);
      if (on_hypothesis_set <= best.mean + 1e-9 && s.count >= best.count) {
        est.pose = refit;
        est.inlier_mask = std::move(s.mask);
        est.inlier_count = s.count;
        est.mean_reprojection_error = s.mean;
        est.refit_accepted = true;
      }
    } catch (const Error&) {
    }
  }
  return est;
}

PoseEstimate ransac_pnp(const matching::CorrespondenceSet& corrs, const geom::Intrinsics& k,
                        const RansacParams& params) {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector2d> pixels;
  points.reserve(corrs.size());
  pixels.reserve(corrs.size());
  for (const auto& c : corrs.items) {
    points.push_back(c.point);
    pixels.push_back(c.image);
  }
  return ransac_pnp(points, pixels, k, params);
}

void write_pose_estimate(std::ostream& out, const PoseEstimate& estimate) {
  out << geom::format_pose(estimate.pose) << '\n';
  out << std::setprecision(17) << "# inliers " << estimate.inlier_count << " mean_reprojection_error "
      << estimate.mean_reprojection_error << '\n';
}

void write_pose_estimate(const std::string& path, const PoseEstimate& estimate) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  write_pose_estimate(out, estimate);
}

}  // namespace papireg::pose
