#include "papireg/dataio/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "papireg/error.hpp"

namespace papireg::dataio {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = value.data() + value.size();
  const auto r = std::from_chars(first, last, out);
  if (r.ec != std::errc() || r.ptr != last) {
    fail(ErrorCode::InvalidArgument, "bad value '" + value + "' for " + key);
  }
  return out;
}

std::string show(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

// Splitmix64 finaliser; decorrelates per-frame seeds.
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::FormatError, "line " + std::to_string(lineno) + ": expected key = value");
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "map_width",        "map_height",         "azimuth_origin",        "range_max",
      "image_width",      "image_height",       "d_patch",               "d_pixel",
      "top_k",            "ransac_max_iterations", "ransac_threshold",   "ransac_min_inliers",
      "ransac_sample_size", "ransac_confidence", "rte_threshold",        "rre_threshold",
      "euler",            "perturb_max_xy",     "perturb_yaw_range",     "seed",
  };
  return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "map_width") projection.width = parse_number<int>(key, value);
  else if (key == "map_height") projection.height = parse_number<int>(key, value);
  else if (key == "azimuth_origin") projection.azimuth_origin = parse_number<double>(key, value);
  else if (key == "range_max") projection.range_max = parse_number<double>(key, value);
  else if (key == "image_width") image_width = parse_number<int>(key, value);
  else if (key == "image_height") image_height = parse_number<int>(key, value);
  else if (key == "d_patch") d_patch = parse_number<int>(key, value);
  else if (key == "d_pixel") d_pixel = parse_number<int>(key, value);
  else if (key == "top_k") top_k = parse_number<int>(key, value);
  else if (key == "ransac_max_iterations") ransac.max_iterations = parse_number<int>(key, value);
  else if (key == "ransac_threshold") ransac.inlier_threshold = parse_number<double>(key, value);
  else if (key == "ransac_min_inliers") ransac.min_inliers = parse_number<int>(key, value);
  else if (key == "ransac_sample_size") ransac.sample_size = parse_number<int>(key, value);
  else if (key == "ransac_confidence") ransac.confidence = parse_number<double>(key, value);
  else if (key == "rte_threshold") rte_threshold = parse_number<double>(key, value);
  else if (key == "rre_threshold") rre_threshold = parse_number<double>(key, value);
  else if (key == "euler") euler = metrics::parse_euler_convention(value);
  else if (key == "perturb_max_xy") perturb_max_xy = parse_number<double>(key, value);
  else if (key == "perturb_yaw_range") perturb_yaw_range = parse_number<double>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

void RunConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) set(k, v);
}

std::string RunConfig::get(const std::string& key) const {
  for (const auto& [k, v] : to_key_values()) {
    if (k == key) return v;
  }
  fail(ErrorCode::InvalidArgument, "unknown config key '" + key + "'");
}

std::vector<std::pair<std::string, std::string>> RunConfig::to_key_values() const {
  return {
      {"map_width", std::to_string(projection.width)},
      {"map_height", std::to_string(projection.height)},
      {"azimuth_origin", show(projection.azimuth_origin)},
      {"range_max", show(projection.range_max)},
      {"image_width", std::to_string(image_width)},
      {"image_height", std::to_string(image_height)},
      {"d_patch", std::to_string(d_patch)},
      {"d_pixel", std::to_string(d_pixel)},
      {"top_k", std::to_string(top_k)},
      {"ransac_max_iterations", std::to_string(ransac.max_iterations)},
      {"ransac_threshold", show(ransac.inlier_threshold)},
      {"ransac_min_inliers", std::to_string(ransac.min_inliers)},
      {"ransac_sample_size", std::to_string(ransac.sample_size)},
      {"ransac_confidence", show(ransac.confidence)},
      {"rte_threshold", show(rte_threshold)},
      {"rre_threshold", show(rre_threshold)},
      {"euler", metrics::to_string(euler)},
      {"perturb_max_xy", show(perturb_max_xy)},
      {"perturb_yaw_range", show(perturb_yaw_range)},
      {"seed", std::to_string(seed)},
  };
}

std::string RunConfig::canonical_text() const {
  std::string out;
  for (const auto& [k, v] : to_key_values()) out += k + " = " + v + "\n";
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(canonical_text()); }

std::uint64_t RunConfig::frame_seed(std::size_t frame_index) const { return mix(seed ^ mix(frame_index)); }

geom::PerturbationSpec RunConfig::perturbation(std::size_t frame_index) const {
  return {perturb_max_xy, perturb_yaw_range, mix(frame_seed(frame_index))};
}

RunConfig RunConfig::from_file(const std::string& path) {
  RunConfig cfg;
  cfg.apply(read_key_values(path));
  return cfg;
}

}  // namespace papireg::dataio
