#pragma once

#include <optional>
#include <string>

#include "papireg/dataio/config.hpp"
#include "papireg/dataio/frame.hpp"
#include "papireg/features.hpp"
#include "papireg/matching.hpp"
#include "papireg/metrics.hpp"
#include "papireg/pose.hpp"

namespace papireg::pipeline {

struct FrameFeatures {
  features::FeatureMaps camera;
  features::FeatureMaps lidar;
};

// Supplied features when the frame has them, builtin extraction otherwise.
FrameFeatures frame_features(const dataio::Frame& frame, const dataio::RunConfig& cfg);

matching::MatchOptions match_options(const dataio::RunConfig& cfg);
// RANSAC parameters with the per-frame seed filled in.
pose::RansacParams ransac_params(const dataio::RunConfig& cfg, std::size_t position);

struct Registration {
  matching::CorrespondenceSet correspondences;
  std::optional<pose::PoseEstimate> estimate;  // empty on NoConsensus
  matching::MatchTimings timings;
  std::string failure;
};

// Extract, match, RANSAC. Only NoConsensus is absorbed into the result.
Registration register_frame(const dataio::Frame& frame, const dataio::RunConfig& cfg, std::size_t position);
Registration register_features(const dataio::Frame& frame, const FrameFeatures& feats, const dataio::RunConfig& cfg,
                               std::size_t position);

struct FrameResult {
  std::string name;
  bool registered = false;
  geom::Pose estimate;  // identity when registration failed
  metrics::RegistrationErrors errors;
  std::size_t correspondences = 0;
  std::size_t inliers = 0;
  double match_seconds = 0.0;
};

// Registration scored against the frame's ground truth; a failed frame is
// scored with the identity estimate. Throws FormatError without ground truth.
FrameResult evaluate_frame(const dataio::Frame& frame, const dataio::RunConfig& cfg, std::size_t position);
FrameResult score(const dataio::Frame& frame, const Registration& reg, const dataio::RunConfig& cfg);

}  // namespace papireg::pipeline
