#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "papireg/geom.hpp"
#include "papireg/matching.hpp"

namespace papireg::pose {

struct RansacParams {
  int max_iterations = 1000;
  double inlier_threshold = 2.0;  // pixels
  int min_inliers = 10;
  int sample_size = 4;
  std::uint64_t seed = 0;
  double confidence = 0.999;

  void validate() const;
};

struct PoseEstimate {
  geom::Pose pose;
  std::vector<bool> inlier_mask;
  double mean_reprojection_error = 0.0;  // over inliers only
  std::size_t inlier_count = 0;
  int iterations = 0;

  // Best minimal-sample hypothesis before the refit.
  geom::Pose hypothesis_pose;
  std::vector<bool> hypothesis_inlier_mask;
  double hypothesis_mean_error = 0.0;
  bool refit_accepted = false;
};

// EPnP with Gauss-Newton refinement of the null-space coefficients. Returns
// extrinsics mapping `points` into the camera frame. Near-coplanar inputs use
// three control points. Throws TooFew below four points, Degenerate for
// coincident or collinear points.
geom::Pose epnp(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector2d> pixels,
                const geom::Intrinsics& k);
geom::Pose epnp(const matching::CorrespondenceSet& corrs, const geom::Intrinsics& k);

// Pixel distance between the observed pixel and the reprojected point;
// infinity for points at or behind the near plane.
double reprojection_error(const geom::Pose& pose, const geom::Intrinsics& k, const Eigen::Vector3d& point,
                          const Eigen::Vector2d& pixel);

// Index set drawn for one RANSAC iteration. Depends only on (seed, iteration),
// so hypotheses can be generated in any order.
std::vector<std::size_t> ransac_sample(std::uint64_t seed, int iteration, std::size_t population, int sample_size);

// Hypothesise-and-verify around epnp with adaptive termination and a final
// refit on the inliers. Throws NoConsensus when fewer than min_inliers agree.
PoseEstimate ransac_pnp(std::span<const Eigen::Vector3d> points, std::span<const Eigen::Vector2d> pixels,
                        const geom::Intrinsics& k, const RansacParams& params);
PoseEstimate ransac_pnp(const matching::CorrespondenceSet& corrs, const geom::Intrinsics& k,
                        const RansacParams& params);

// Pose row followed by "# inliers <n> mean_reprojection_error <e>".
void write_pose_estimate(std::ostream& out, const PoseEstimate& estimate);
void write_pose_estimate(const std::string& path, const PoseEstimate& estimate);

}  // namespace papireg::pose
