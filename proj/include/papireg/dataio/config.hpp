#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "papireg/geom.hpp"
#include "papireg/metrics.hpp"
#include "papireg/pose.hpp"
#include "papireg/projection.hpp"

namespace papireg::dataio {

// Flat "key = value" text; '#' starts a comment. Throws FormatError on a
// line without '='.
std::map<std::string, std::string> parse_key_values(const std::string& text);
std::map<std::string, std::string> read_key_values(const std::string& path);

struct RunConfig {
  projection::ProjectionConfig projection;
  int image_width = 512;
  int image_height = 160;
  int d_patch = 64;
  int d_pixel = 32;
  int top_k = 300;
  pose::RansacParams ransac;
  double rte_threshold = metrics::kDefaultRteThreshold;
  double rre_threshold = metrics::kDefaultRreThreshold;
  metrics::EulerConvention euler = metrics::EulerConvention::ZYX;
  double perturb_max_xy = 10.0;
  double perturb_yaw_range = 360.0;
  std::uint64_t seed = 0;

  // Every recognised key, in canonical order.
  static const std::vector<std::string>& keys();

  // Throws InvalidArgument for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void apply(const std::map<std::string, std::string>& values);
  std::string get(const std::string& key) const;

  std::vector<std::pair<std::string, std::string>> to_key_values() const;
  std::string canonical_text() const;
  // FNV-1a 64 of canonical_text().
  std::uint64_t hash() const;

  // RANSAC seed for one frame of a run.
  std::uint64_t frame_seed(std::size_t frame_index) const;
  geom::PerturbationSpec perturbation(std::size_t frame_index) const;

  static RunConfig from_file(const std::string& path);
};

std::uint64_t fnv1a64(const std::string& text);

}  // namespace papireg::dataio
