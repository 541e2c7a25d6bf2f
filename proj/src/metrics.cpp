#include "papireg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "papireg/error.hpp"

namespace papireg::metrics {
namespace {

constexpr double kRotationCheck = 1e-6;
constexpr double kGimbalTolerance = 1e-12;

}  // namespace

EulerConvention parse_euler_convention(const std::string& name) {
  if (name == "zyx" || name == "ZYX") return EulerConvention::ZYX;
  if (name == "xyz" || name == "XYZ") return EulerConvention::XYZ;
  fail(ErrorCode::InvalidArgument, "unknown Euler convention '" + name + "'");
}

std::string to_string(EulerConvention convention) {
  return convention == EulerConvention::ZYX ? "zyx" : "xyz";
}

Eigen::Vector3d euler_angles(const Eigen::Matrix3d& r, EulerConvention convention) {
  if (convention == EulerConvention::ZYX) {
    // r20 = -sin(pitch)
    const double s = std::clamp(-r(2, 0), -1.0, 1.0);
    const double pitch = std::asin(s);
    if (std::abs(std::abs(s) - 1.0) < kGimbalTolerance) {
      return {std::atan2(-r(0, 1), r(1, 1)), pitch, 0.0};
    }
    return {std::atan2(r(1, 0), r(0, 0)), pitch, std::atan2(r(2, 1), r(2, 2))};
  }
  // Rx(a) Ry(b) Rz(c): r02 = sin(b)
  const double s = std::clamp(r(0, 2), -1.0, 1.0);
  const double pitch = std::asin(s);
  if (std::abs(std::abs(s) - 1.0) < kGimbalTolerance) {
    return {std::atan2(r(2, 1), r(1, 1)), pitch, 0.0};
  }
  return {std::atan2(-r(1, 2), r(2, 2)), pitch, std::atan2(-r(0, 1), r(0, 0))};
}

double rte(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_e) { return (t_gt - t_e).norm(); }

double rre(const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_e, EulerConvention convention) {
  if (!geom::is_rotation(r_gt, kRotationCheck) || !geom::is_rotation(r_e, kRotationCheck)) {
    fail(ErrorCode::NotARotation, "rre needs orthonormal rotation matrices");
  }
  const Eigen::Vector3d angles = euler_angles(r_gt.transpose() * r_e, convention);
  return geom::rad2deg(angles.cwiseAbs().sum());
}

bool success(double rte_m, double rre_deg, double rte_threshold, double rre_threshold) {
  return rte_m < rte_threshold && rre_deg < rre_threshold;
}

bool success(const RegistrationErrors& errs, double rte_threshold, double rre_threshold) {
  return success(errs.rte, errs.rre, rte_threshold, rre_threshold);
}

RegistrationErrors evaluate(const geom::Pose& gt, const geom::Pose& estimate, EulerConvention convention,
                            double rte_threshold, double rre_threshold) {
  RegistrationErrors e;
  e.rte = rte(gt.translation, estimate.translation);
  e.rre = rre(gt.rotation, estimate.rotation, convention);
  e.success = success(e.rte, e.rre, rte_threshold, rre_threshold);
  return e;
}

AggregateStats aggregate(std::span<const RegistrationErrors> samples) {
  if (samples.empty()) fail(ErrorCode::EmptyList, "no samples to aggregate");
  const auto n = static_cast<double>(samples.size());
  AggregateStats s;
  s.count = samples.size();
  std::size_t ok = 0;
  for (const auto& e : samples) {
    s.mean_rte += e.rte;
    s.mean_rre += e.rre;
    ok += e.success ? 1 : 0;
  }
  s.mean_rte /= n;
  s.mean_rre /= n;
  for (const auto& e : samples) {
    s.std_rte += (e.rte - s.mean_rte) * (e.rte - s.mean_rte);
    s.std_rre += (e.rre - s.mean_rre) * (e.rre - s.mean_rre);
  }
  s.std_rte = std::sqrt(s.std_rte / n);
  s.std_rre = std::sqrt(s.std_rre / n);
  s.accuracy = 100.0 * static_cast<double>(ok) / n;
  return s;
}

std::string table_header() { return "RTE(m) | RRE(deg) | Acc.(%)"; }

std::string format_table_row(const AggregateStats& stats, int precision) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << stats.mean_rte << " ± " << stats.std_rte << " | "
     << stats.mean_rre << " ± " << stats.std_rre << " | " << stats.accuracy;
  return os.str();
}

Histogram histogram(std::span<const double> values, double bin_width, int bins) {
  if (!(bin_width > 0.0) || bins < 1) fail(ErrorCode::InvalidArgument, "histogram needs positive bin width and count");
  Histogram h;
  h.bin_width = bin_width;
  h.counts.assign(static_cast<std::size_t>(bins) + 1, 0);
  for (double v : values) {
    const double b = std::floor(v / bin_width);
    const auto idx = b >= bins || !std::isfinite(b) ? static_cast<std::size_t>(bins)
                                                    : static_cast<std::size_t>(std::max(0.0, b));
    ++h.counts[idx];
  }
  return h;
}

void write_histograms_csv(std::ostream& out, std::span<const RegistrationErrors> samples, double rte_bin,
                          double rre_bin, int bins) {
  std::vector<double> rtes;
  std::vector<double> rres;
  for (const auto& e : samples) {
    rtes.push_back(e.rte);
    rres.push_back(e.rre);
  }
  out << "metric,bin_lo,bin_hi,count,percent\n";
  const double n = std::max<double>(1.0, static_cast<double>(samples.size()));
  auto emit = [&](const char* name, const Histogram& h) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      const double lo = h.bin_width * static_cast<double>(i);
      out << name << ',' << lo << ',';
      if (i + 1 == h.counts.size()) {
        out << "inf";
      } else {
        out << lo + h.bin_width;
      }
      out << ',' << h.counts[i] << ',' << 100.0 * static_cast<double>(h.counts[i]) / n << '\n';
    }
  };
  emit("rte", histogram(rtes, rte_bin, bins));
  emit("rre", histogram(rres, rre_bin, bins));
}

}  // namespace papireg::metrics
