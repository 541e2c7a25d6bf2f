#include "papireg/pipeline.hpp"

#include "papireg/error.hpp"

namespace papireg::pipeline {

FrameFeatures frame_features(const dataio::Frame& frame, const dataio::RunConfig& cfg) {
  FrameFeatures out;
  out.camera = frame.camera_features ? *frame.camera_features
                                     : features::extract_builtin(frame.image, cfg.d_patch, cfg.d_pixel);
  out.lidar = frame.lidar_features
                  ? *frame.lidar_features
                  : features::extract_lidar_features(frame.maps, cfg.projection.range_max, cfg.d_patch, cfg.d_pixel);
  return out;
}

matching::MatchOptions match_options(const dataio::RunConfig& cfg) {
  matching::MatchOptions o;
  o.top_k = cfg.top_k;
  return o;
}

pose::RansacParams ransac_params(const dataio::RunConfig& cfg, std::size_t position) {
  pose::RansacParams p = cfg.ransac;
  p.seed = cfg.frame_seed(position);
  return p;
}

Registration register_features(const dataio::Frame& frame, const FrameFeatures& feats, const dataio::RunConfig& cfg,
                               std::size_t position) {
  Registration reg;
  reg.correspondences = matching::match_patch_to_pixel(feats.camera, feats.lidar, frame.maps, frame.cloud,
                                                       match_options(cfg), &reg.timings);
  try {
    reg.estimate = pose::ransac_pnp(reg.correspondences, frame.intrinsics, ransac_params(cfg, position));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoConsensus) throw;
    reg.failure = e.what();
  }
  return reg;
}

Registration register_frame(const dataio::Frame& frame, const dataio::RunConfig& cfg, std::size_t position) {
  return register_features(frame, frame_features(frame, cfg), cfg, position);
}

FrameResult score(const dataio::Frame& frame, const Registration& reg, const dataio::RunConfig& cfg) {
  if (!frame.gt_extrinsics) fail(ErrorCode::FormatError, "frame " + frame.name + " has no ground truth");
  FrameResult r;
  r.name = frame.name;
  r.registered = reg.estimate.has_value();
  r.estimate = r.registered ? reg.estimate->pose : geom::Pose::identity();
  r.errors = metrics::evaluate(*frame.gt_extrinsics, r.estimate, cfg.euler, cfg.rte_threshold, cfg.rre_threshold);
  r.correspondences = reg.correspondences.size();
  r.inliers = r.registered ? reg.estimate->inlier_count : 0;
  r.match_seconds = reg.timings.total();
  return r;
}

FrameResult evaluate_frame(const dataio::Frame& frame, const dataio::RunConfig& cfg, std::size_t position) {
  if (!frame.gt_extrinsics) fail(ErrorCode::FormatError, "frame " + frame.name + " has no ground truth");
  return score(frame, register_frame(frame, cfg, position), cfg);
}

}  // namespace papireg::pipeline
