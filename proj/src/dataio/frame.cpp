#include "papireg/dataio/frame.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "papireg/dataio/io.hpp"
#include "papireg/dataio/kitti.hpp"
#include "papireg/error.hpp"

namespace papireg::dataio {
namespace fs = std::filesystem;

namespace {

std::string intrinsics_text(const geom::Intrinsics& k) {
  std::ostringstream os;
  os << std::setprecision(17) << k.fx << ' ' << k.fy << ' ' << k.cx << ' ' << k.cy << ' ' << k.width << ' ' << k.height;
  return os.str();
}

geom::Intrinsics parse_intrinsics(const std::string& text) {
  std::istringstream is(text);
  geom::Intrinsics k;
  if (!(is >> k.fx >> k.fy >> k.cx >> k.cy >> k.width >> k.height)) {
    fail(ErrorCode::FormatError, "intrinsics need 'fx fy cx cy width height'");
  }
  k.validate();
  return k;
}

std::string resolve(const std::string& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? p : (fs::path(base) / path).string();
}

}  // namespace

void save_frame(const std::string& dir, const Frame& frame) {
  fs::create_directories(dir);
  std::ostringstream meta;
  if (frame.image.width > 0) {
    write_ppm((fs::path(dir) / "image.ppm").string(), frame.image);
    meta << "image = image.ppm\n";
  }
  write_point_cloud((fs::path(dir) / "cloud.bin").string(), frame.cloud);
  meta << "cloud = cloud.bin\n";
  if (frame.cloud.laser_id) {
    write_laser_ids((fs::path(dir) / "laser_ids.pprt").string(), *frame.cloud.laser_id);
    meta << "laser_ids = laser_ids.pprt\n";
  }
  if (frame.maps.height > 0) {
    save_maps((fs::path(dir) / "maps").string(), frame.maps);
    meta << "maps = maps\n";
  }
  if (frame.camera_features) {
    features::save_features((fs::path(dir) / "camera.feat").string(), *frame.camera_features);
    meta << "camera_features = camera.feat\n";
  }
  if (frame.lidar_features) {
    features::save_features((fs::path(dir) / "lidar.feat").string(), *frame.lidar_features);
    meta << "lidar_features = lidar.feat\n";
  }
  meta << "intrinsics = " << intrinsics_text(frame.intrinsics) << "\n";
  if (frame.gt_extrinsics) meta << "gt_extrinsics = " << geom::format_pose(*frame.gt_extrinsics) << "\n";
  std::ofstream out(fs::path(dir) / "frame.txt");
  if (!out) fail(ErrorCode::IoError, "cannot write " + dir + "/frame.txt");
  out << meta.str();
}

Frame load_frame_dir(const std::string& dir, const RunConfig& cfg) {
  const auto kv = read_key_values((fs::path(dir) / "frame.txt").string());
  auto get = [&](const char* key) -> std::optional<std::string> {
    if (auto it = kv.find(key); it != kv.end()) return it->second;
    return std::nullopt;
  };
  Frame f;
  f.name = fs::path(dir).filename().string();
  if (f.name.empty()) f.name = fs::path(dir).parent_path().filename().string();

  const auto cloud = get("cloud");
  const auto intr = get("intrinsics");
  if (!cloud || !intr) fail(ErrorCode::FormatError, dir + "/frame.txt needs cloud and intrinsics");
  f.cloud = read_point_cloud(resolve(dir, *cloud));
  if (const auto ids = get("laser_ids")) f.cloud.laser_id = read_laser_ids(resolve(dir, *ids));
  f.intrinsics = parse_intrinsics(*intr);
  if (const auto img = get("image")) f.image = read_image(resolve(dir, *img));
  if (const auto gt = get("gt_extrinsics")) f.gt_extrinsics = geom::parse_pose(*gt);

  if (const auto maps = get("maps")) {
    f.maps = load_maps(resolve(dir, *maps));
  } else {
    f.maps = projection::project_to_maps(f.cloud, cfg.projection);
  }
  if (const auto cam = get("camera_features")) {
    f.camera_features = features::load_features(resolve(dir, *cam));
  }
  if (const auto lid = get("lidar_features")) {
    f.lidar_features = features::load_features(resolve(dir, *lid), f.maps.occupancy);
  }
  if (!f.camera_features && f.image.width == 0) fail(ErrorCode::FormatError, dir + ": no image and no camera features");
  return f;
}

Frame frame_from_synthetic(const SyntheticScene& scene, const std::string& name) {
  Frame f;
  f.name = name;
  f.image = scene.image;
  f.cloud = scene.cloud;
  f.maps = scene.maps;
  f.intrinsics = scene.intrinsics;
  f.gt_extrinsics = scene.gt_extrinsics;
  f.camera_features = scene.camera_features;
  f.lidar_features = scene.lidar_features;
  return f;
}

std::vector<ManifestEntry> parse_manifest(const std::string& text, const std::string& base_dir) {
  std::vector<ManifestEntry> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;
    ManifestEntry e;
    std::string extra;
    if (kind == "frame") {
      if (!(ls >> e.path) || (ls >> extra)) fail(ErrorCode::FormatError, "manifest line " + std::to_string(lineno) + ": frame <dir>");
    } else if (kind == "kitti") {
      e.kind = ManifestEntry::Kind::Kitti;
      if (!(ls >> e.path >> e.index) || (ls >> extra)) {
        fail(ErrorCode::FormatError, "manifest line " + std::to_string(lineno) + ": kitti <root> <index>");
      }
    } else {
      fail(ErrorCode::FormatError, "manifest line " + std::to_string(lineno) + ": unknown entry '" + kind + "'");
    }
    e.path = resolve(base_dir, e.path);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), fs::path(path).parent_path().string());
}

Frame load_frame(const ManifestEntry& entry, const RunConfig& cfg, std::size_t position) {
  if (entry.kind == ManifestEntry::Kind::Directory) return load_frame_dir(entry.path, cfg);
  const RawPair raw = load_kitti_frame(entry.path, entry.index);
  const FramePair pair = prepare_pair(raw, cfg.perturbation(position), cfg.image_width, cfg.image_height, cfg.projection);
  Frame f;
  std::ostringstream name;
  name << "kitti_" << std::setw(6) << std::setfill('0') << entry.index;
  f.name = name.str();
  f.image = pair.image;
  f.cloud = pair.cloud;
  f.maps = pair.maps;
  f.intrinsics = pair.intrinsics;
  f.gt_extrinsics = pair.gt_extrinsics;
  return f;
}

}  // namespace papireg::dataio
