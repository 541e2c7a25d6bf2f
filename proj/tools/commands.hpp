#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "papireg/dataio/config.hpp"
#include "papireg/dataio/frame.hpp"
#include "papireg/dataio/synthetic.hpp"
#include "papireg/image.hpp"
#include "papireg/metrics.hpp"
#include "papireg/pipeline.hpp"

namespace papireg::cli {

enum ExitCode : int { kExitOk = 0, kExitNoConsensus = 2, kExitInputError = 3 };

// run_manifest.txt: command, inputs, config hash and every resolved value.
void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& inputs, const dataio::RunConfig& cfg);

struct ProjectResult {
  projection::ProjectionMaps maps;
  double occupancy = 0.0;  // fraction of occupied cells
};

// maps/ tensors plus range.pgm and reflectance.pgm previews.
ProjectResult cmd_project(const std::string& cloud_path, const std::string& laser_ids_path,
                          const dataio::RunConfig& cfg, const std::string& out_dir, std::ostream& log);

struct ExtractArgs {
  std::string image;      // camera side
  std::string cloud;      // LiDAR side, projected with the config
  std::string laser_ids;  // optional companion of `cloud`
  std::string maps;       // LiDAR side from saved maps
  std::string output;
};

features::FeatureMaps cmd_extract(const ExtractArgs& args, const dataio::RunConfig& cfg, std::ostream& log);

matching::CorrespondenceSet cmd_match(const dataio::Frame& frame, const dataio::RunConfig& cfg,
                                      const std::string& out_dir, std::ostream& log);

// pose.txt (when registered), correspondences.csv and matches.ppm.
pipeline::Registration cmd_register(const dataio::Frame& frame, const dataio::RunConfig& cfg,
                                    const std::string& out_dir, std::ostream& log);

// Camera image above the reflectance map, inlier matches in green and
// outliers in red.
RgbImage match_visualization(const RgbImage& camera, const projection::ProjectionMaps& maps,
                             const matching::CorrespondenceSet& corrs, const std::vector<bool>& inliers);

struct EvaluateReport {
  std::vector<pipeline::FrameResult> frames;
  metrics::AggregateStats stats;
};

// report.txt, per_frame.csv, histogram.csv and timing.csv. Throws EmptyList
// for a manifest without frames.
EvaluateReport cmd_evaluate(const std::string& manifest_path, const dataio::RunConfig& cfg,
                            const std::string& out_dir, std::ostream& log);

struct AblationRow {
  int k = 0;
  metrics::AggregateStats stats;
  double median_seconds = 0.0;  // per-frame matching time
};

// The dense patch stage runs once per frame; each k adds its own refinement,
// timed as the fastest of `repeats` runs. Writes ablation.csv and
// ablation_timing.csv.
std::vector<AblationRow> cmd_ablate_topk(const std::string& manifest_path, const std::vector<int>& ks,
                                         const dataio::RunConfig& cfg, const std::string& out_dir, std::ostream& log,
                                         int repeats = 3);

// Writes `count` synthetic frame directories, manifest.txt and config.txt.
// Scene i uses seed cfg.frame_seed(i).
std::vector<std::string> cmd_synth(const std::string& out_dir, int count, const dataio::SyntheticOptions& base,
                                   const dataio::RunConfig& cfg, std::ostream& log);

// Command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace papireg::cli
