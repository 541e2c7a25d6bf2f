#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "papireg/geom.hpp"

namespace papireg::metrics {

enum class EulerConvention {
  ZYX,  // intrinsic yaw-pitch-roll: R = Rz(a) Ry(b) Rx(c)
  XYZ,  // intrinsic roll-pitch-yaw: R = Rx(a) Ry(b) Rz(c)
};

EulerConvention parse_euler_convention(const std::string& name);
std::string to_string(EulerConvention convention);

inline constexpr double kDefaultRteThreshold = 2.0;  // meters
inline constexpr double kDefaultRreThreshold = 5.0;  // degrees

struct RegistrationErrors {
  double rte = 0.0;  // meters
  double rre = 0.0;  // degrees
  bool success = false;
};

struct AggregateStats {
  double mean_rte = 0.0;
  double std_rte = 0.0;
  double mean_rre = 0.0;
  double std_rre = 0.0;
  double accuracy = 0.0;  // percent
  std::size_t count = 0;
};

// Euler angles (radians) in the order the convention composes them. At
// gimbal lock the in-plane rotation goes entirely to the first angle.
Eigen::Vector3d euler_angles(const Eigen::Matrix3d& r, EulerConvention convention = EulerConvention::ZYX);

double rte(const Eigen::Vector3d& t_gt, const Eigen::Vector3d& t_e);

// Sum of absolute Euler angles of R_gt^-1 R_e, in degrees. Throws NotARotation.
double rre(const Eigen::Matrix3d& r_gt, const Eigen::Matrix3d& r_e, EulerConvention convention = EulerConvention::ZYX);

bool success(const RegistrationErrors& errs, double rte_threshold = kDefaultRteThreshold,
             double rre_threshold = kDefaultRreThreshold);
bool success(double rte_m, double rre_deg, double rte_threshold = kDefaultRteThreshold,
             double rre_threshold = kDefaultRreThreshold);

RegistrationErrors evaluate(const geom::Pose& gt, const geom::Pose& estimate,
                            EulerConvention convention = EulerConvention::ZYX,
                            double rte_threshold = kDefaultRteThreshold, double rre_threshold = kDefaultRreThreshold);

// Population mean / std over every sample. Throws EmptyList.
AggregateStats aggregate(std::span<const RegistrationErrors> samples);

// "RTE mean ± std | RRE mean ± std | Acc"
std::string format_table_row(const AggregateStats& stats, int precision = 2);
std::string table_header();

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;  // last bin collects everything beyond range
};

Histogram histogram(std::span<const double> values, double bin_width, int bins);

// CSV: metric,bin_lo,bin_hi,count,percent
void write_histograms_csv(std::ostream& out, std::span<const RegistrationErrors> samples, double rte_bin = 0.25,
                          double rre_bin = 0.5, int bins = 20);

}  // namespace papireg::metrics
