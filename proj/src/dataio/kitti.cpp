#include "papireg/dataio/kitti.hpp"

#include <Eigen/LU>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "papireg/dataio/io.hpp"
#include "papireg/error.hpp"
#include "papireg/features.hpp"

namespace papireg::dataio {
namespace {

std::map<std::string, std::vector<double>> calibration_entries(const std::string& text) {
  std::map<std::string, std::vector<double>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::istringstream values(line.substr(colon + 1));
    std::vector<double> v;
    double x;
    while (values >> x) v.push_back(x);
    out[line.substr(0, colon)] = std::move(v);
  }
  return out;
}

const std::vector<double>& entry(const std::map<std::string, std::vector<double>>& e,
                                 std::initializer_list<const char*> names, std::size_t count) {
  for (const char* n : names) {
    if (auto it = e.find(n); it != e.end()) {
      if (it->second.size() != count) fail(ErrorCode::FormatError, std::string("calibration entry ") + n + " has wrong length");
      return it->second;
    }
  }
  fail(ErrorCode::FormatError, std::string("calibration entry ") + *names.begin() + " missing");
}

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

}  // namespace

KittiCalibration parse_kitti_calibration(const std::string& text, int image_width, int image_height) {
  const auto e = calibration_entries(text);
  const auto& p2 = entry(e, {"P2"}, 12);
  const auto& tr = entry(e, {"Tr", "Tr_velo_to_cam"}, 12);

  KittiCalibration calib;
  calib.intrinsics = {p2[0], p2[5], p2[2], p2[6], image_width, image_height};
  calib.intrinsics.validate();

  // P2 = K [I | b]; fold the rectified-camera baseline b into the extrinsics.
  const Eigen::Vector3d p2_col(p2[3], p2[7], p2[11]);
  const Eigen::Vector3d baseline = calib.intrinsics.matrix().inverse() * p2_col;
  Eigen::Matrix3d r;
  r << tr[0], tr[1], tr[2], tr[4], tr[5], tr[6], tr[8], tr[9], tr[10];
  const Eigen::Vector3d t(tr[3], tr[7], tr[11]);
  calib.velo_to_camera = geom::Pose::from_rt(geom::orthonormalize(r), t + baseline);
  return calib;
}

RawPair load_kitti_frame(const std::string& root, int index) {
  if (index < 0) fail(ErrorCode::InvalidArgument, "frame index must be non-negative");
  RawPair raw;
  const std::string name = frame_name(index);
  raw.image = read_image(root + "/image_2/" + name + ".png");
  raw.cloud = read_point_cloud(root + "/velodyne/" + name + ".bin");
  std::ifstream in(root + "/calib.txt");
  if (!in) fail(ErrorCode::IoError, "cannot open " + root + "/calib.txt");
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto calib = parse_kitti_calibration(ss.str(), raw.image.width, raw.image.height);
  raw.intrinsics = calib.intrinsics;
  raw.calibration = calib.velo_to_camera;
  return raw;
}

FramePair prepare_pair(const RawPair& raw, const geom::PerturbationSpec& perturbation, int target_width,
                       int target_height, const projection::ProjectionConfig& projection) {
  return prepare_pair(raw, geom::sample_perturbation(perturbation), target_width, target_height, projection);
}

FramePair prepare_pair(const RawPair& raw, const geom::Pose& perturbation, int target_width, int target_height,
                       const projection::ProjectionConfig& projection) {
  if (target_width <= 0 || target_height <= 0 || target_width % features::kPatchSize ||
      target_height % features::kPatchSize) {
    fail(ErrorCode::BadDims, "target image size must be divisible by 4");
  }
  projection.validate();
  FramePair out;
  out.image = resize_bilinear(raw.image, target_width, target_height);
  out.intrinsics = raw.intrinsics.scaled(target_width, target_height);
  const auto rotated = projection::transformed(raw.cloud, perturbation.rotation, Eigen::Vector3d::Zero());
  out.maps = projection::project_to_maps(rotated, projection);
  out.cloud = projection::transformed(rotated, Eigen::Matrix3d::Identity(), perturbation.translation);
  out.applied_perturbation = perturbation;
  out.gt_extrinsics = geom::compose(raw.calibration, geom::inverse(perturbation));
  return out;
}

}  // namespace papireg::dataio
