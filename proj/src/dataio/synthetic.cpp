#include "papireg/dataio/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "papireg/error.hpp"

namespace papireg::dataio {
namespace {

using Eigen::Vector3d;
using features::DenseFeatures;
using features::kPatchSize;

constexpr double kSensorHeight = 1.73;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

struct Cylinder {
  double cx, cy, radius, top;
};

// Procedural surroundings: ground plane, a wavy wall ring and a few posts.
struct Environment {
  double wall_base = 0.0;
  double wave[4] = {};
  std::vector<Cylinder> posts;

  explicit Environment(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    wall_base = 11.0 + 3.0 * u(rng);
    wave[0] = 2.0 * std::numbers::pi * u(rng);
    wave[1] = 2.0 * std::numbers::pi * u(rng);
    wave[2] = 2.5 + 1.5 * u(rng);
    wave[3] = 0.5 + 1.0 * u(rng);
    const int n = 6 + static_cast<int>(u(rng) * 4);
    for (int i = 0; i < n; ++i) {
      const double ang = 2.0 * std::numbers::pi * u(rng);
      const double dist = 4.0 + 5.0 * u(rng);
      posts.push_back({dist * std::cos(ang), dist * std::sin(ang), 0.4 + 1.1 * u(rng), -kSensorHeight + 1.0 + 2.5 * u(rng)});
    }
  }

  double wall_radius(double phi) const {
    return wall_base + wave[2] * std::sin(3.0 * phi + wave[0]) + wave[3] * std::sin(7.0 * phi + wave[1]);
  }

  // Distance along the unit ray (elevation theta, azimuth phi).
  double cast(double theta, double phi) const {
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    double best = wall_radius(phi) / ct;
    if (st < 0.0) best = std::min(best, kSensorHeight / -st);
    const double ex = std::cos(phi);
    const double ey = std::sin(phi);
    for (const auto& c : posts) {
      const double b = ex * c.cx + ey * c.cy;
      const double disc = b * b - (c.cx * c.cx + c.cy * c.cy) + c.radius * c.radius;
      if (disc < 0.0) continue;
      const double s = b - std::sqrt(disc);
      if (s <= 0.0) continue;
      const double t = s / ct;
      const double z = t * st;
      if (z >= -kSensorHeight && z <= c.top) best = std::min(best, t);
    }
    return best;
  }

  static double reflectance(const Vector3d& p) {
    double r;
    if (p.z() < -kSensorHeight + 1e-6) {
      const bool lane = std::fmod(std::abs(p.y()) + 0.4, 3.5) < 0.3;
      r = lane ? 0.9 : 0.15 + 0.05 * std::sin(4.0 * p.x());
    } else {
      r = 0.5 + 0.25 * std::sin(2.1 * p.x() + 1.3 * p.y()) + 0.2 * std::cos(3.7 * p.z() + 0.9 * p.x());
    }
    return std::clamp(r, 0.02, 1.0);
  }
};

std::vector<double> ring_elevations(int n_lasers, double top_deg, double bottom_deg) {
  std::vector<double> out(n_lasers);
  for (int v = 0; v < n_lasers; ++v) {
    const double f = n_lasers == 1 ? 0.0 : static_cast<double>(v) / (n_lasers - 1);
    out[v] = geom::deg2rad(top_deg + f * (bottom_deg - top_deg));
  }
  return out;
}

double bin_center(int u, int w_r, double origin) {
  return origin + (u + 0.5) * 2.0 * std::numbers::pi / w_r;
}

void random_unit(std::mt19937_64& rng, std::span<float> out) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(out.size());
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& x : v) {
      x = g(rng);
      n2 += x * x;
    }
  } while (n2 == 0.0);
  const double inv = 1.0 / std::sqrt(n2);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
}

void copy_code(std::span<const float> from, std::span<float> to) { std::copy(from.begin(), from.end(), to.begin()); }

// Camera placed slightly ahead of the LiDAR, looking along +x.
geom::Pose camera_mount(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Matrix3d axes;
  axes << 0, -1, 0, 0, 0, -1, 1, 0, 0;
  const Eigen::Matrix3d wobble =
      geom::rot_z(geom::deg2rad(2.0 * u(rng))) * geom::rot_y(geom::deg2rad(2.0 * u(rng))) * geom::rot_x(geom::deg2rad(1.0 * u(rng)));
  const Eigen::Matrix3d r = axes * wobble;
  const Vector3d centre(0.27 + 0.05 * u(rng), 0.05 * u(rng), -0.08 + 0.03 * u(rng));
  return geom::Pose::from_rt(r, -r * centre);
}

}  // namespace

projection::PointCloud bin_centered_scan(int n_lasers, int w_r, std::uint64_t seed, double azimuth_origin,
                                         double elevation_jitter_deg) {
  if (n_lasers <= 0 || w_r <= 0) fail(ErrorCode::InvalidArgument, "scan dimensions must be positive");
  auto rng = stream(seed, 1);
  Environment env(rng);
  auto jitter_rng = stream(seed, 2);
  std::uniform_real_distribution<double> jitter(-elevation_jitter_deg, elevation_jitter_deg);
  const auto elev = ring_elevations(n_lasers, 15.0, -25.0);
  projection::PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n_lasers) * w_r);
  std::vector<int> ids;
  ids.reserve(cloud.points.capacity());
  for (int v = 0; v < n_lasers; ++v) {
    for (int u = 0; u < w_r; ++u) {
      const double theta = elev[v] + (elevation_jitter_deg > 0.0 ? geom::deg2rad(jitter(jitter_rng)) : 0.0);
      const double phi = bin_center(u, w_r, azimuth_origin);
      const double t = env.cast(theta, phi);
      const Vector3d p = t * Vector3d(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), std::sin(theta));
      cloud.points.push_back({p.x(), p.y(), p.z(), Environment::reflectance(p)});
      ids.push_back(v);
    }
  }
  cloud.laser_id = std::move(ids);
  return cloud;
}

SyntheticScene generate_synthetic(std::uint64_t seed, int n_lasers, int w_r, int n_outlier_features) {
  SyntheticOptions o;
  o.seed = seed;
  o.n_lasers = n_lasers;
  o.w_r = w_r;
  o.n_outlier_features = n_outlier_features;
  return generate_synthetic(o);
}

SyntheticScene generate_synthetic(const SyntheticOptions& o) {
  if (o.n_lasers <= 0 || o.w_r <= 0 || o.image_width <= 0 || o.image_height <= 0 || o.focal <= 0.0 ||
      o.d_patch <= 0 || o.d_pixel <= 0 || o.n_outlier_features < 0) {
    fail(ErrorCode::InvalidArgument, "synthetic scene parameters must be positive");
  }
  if (o.n_lasers % kPatchSize || o.w_r % kPatchSize || o.image_width % kPatchSize || o.image_height % kPatchSize) {
    fail(ErrorCode::BadDims, "synthetic grids must be divisible by 4");
  }

  SyntheticScene scene;
  scene.projection.width = o.w_r;
  scene.projection.height = o.n_lasers;
  scene.intrinsics = {o.focal, o.focal, 0.5 * (o.image_width - 1), 0.5 * (o.image_height - 1), o.image_width,
                      o.image_height};
  const auto& k = scene.intrinsics;

  auto geo_rng = stream(o.seed, 1);
  Environment env(geo_rng);
  auto mount_rng = stream(o.seed, 3);
  scene.calibration = camera_mount(mount_rng);
  const geom::Pose& cam = scene.calibration;
  const geom::Pose cam_inv = geom::inverse(cam);

  // Ring scan in the unperturbed LiDAR frame. Points the camera sees are
  // moved along their camera ray onto the exact centre of the pixel they hit,
  // points that would land on the image border are dropped.
  auto jitter_rng = stream(o.seed, 2);
  std::uniform_real_distribution<double> jitter(-o.elevation_jitter_deg, o.elevation_jitter_deg);
  const auto elev = ring_elevations(o.n_lasers, o.elevation_top_deg, o.elevation_bottom_deg);

  projection::PointCloud base;
  std::vector<int> ids;
  std::vector<Pixel> seen_at;     // camera pixel, or {-1,-1}
  std::vector<double> seen_depth;
  for (int v = 0; v < o.n_lasers; ++v) {
    for (int u = 0; u < o.w_r; ++u) {
      const double theta = elev[v] + (o.elevation_jitter_deg > 0.0 ? geom::deg2rad(jitter(jitter_rng)) : 0.0);
      const double phi = bin_center(u, o.w_r, scene.projection.azimuth_origin);
      const double t = env.cast(theta, phi);
      Vector3d p = t * Vector3d(std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), std::sin(theta));
      const double refl = Environment::reflectance(p);
      Pixel px{-1, -1};
      double depth = 0.0;
      const Vector3d q = geom::apply(cam, p);
      if (q.z() > geom::kNearPlane) {
        const double x = k.fx * q.x() / q.z() + k.cx;
        const double y = k.fy * q.y() / q.z() + k.cy;
        if (x >= -1.0 && x < k.width + 1.0 && y >= -1.0 && y < k.height + 1.0) {
          const int ui = static_cast<int>(std::lround(x));
          const int vi = static_cast<int>(std::lround(y));
          if (ui < 1 || ui > k.width - 2 || vi < 1 || vi > k.height - 2) continue;
          const Vector3d ray((ui - k.cx) / k.fx, (vi - k.cy) / k.fy, 1.0);
          p = geom::apply(cam_inv, q.z() * ray);
          px = {ui, vi};
          depth = q.z();
        }
      }
      base.points.push_back({p.x(), p.y(), p.z(), refl});
      ids.push_back(v);
      seen_at.push_back(px);
      seen_depth.push_back(depth);
    }
  }
  base.laser_id = ids;

  // Yaw first, maps from the rotated cloud, translation afterwards.
  geom::Pose perturbation;
  if (o.perturb) {
    auto pert_rng = stream(o.seed, 4);
    perturbation = geom::sample_perturbation({o.max_xy_translation, o.yaw_range, pert_rng()});
  }
  scene.applied_perturbation = perturbation;
  const auto rotated = projection::transformed(base, perturbation.rotation, Vector3d::Zero());
  scene.maps = projection::project_to_maps(rotated, scene.projection);
  scene.cloud = projection::transformed(rotated, Eigen::Matrix3d::Identity(), perturbation.translation);
  scene.gt_extrinsics = geom::compose(cam, geom::inverse(perturbation));

  // Camera pixel ownership: the nearest occupied map pixel seen there.
  const GridShape img_grid{o.image_height, o.image_width};
  const GridShape map_grid = scene.maps.grid();
  std::vector<int> owner(img_grid.size(), -1);  // flat map pixel
  for (int m = 0; m < map_grid.size(); ++m) {
    const int idx = scene.maps.index[m];
    if (idx < 0 || seen_at[idx].u < 0) continue;
    const int c = img_grid.flat(seen_at[idx]);
    if (owner[c] < 0 || seen_depth[idx] < seen_depth[scene.maps.index[owner[c]]]) owner[c] = m;
  }

  auto code_rng = stream(o.seed, 5);
  const int pr = o.image_height / kPatchSize, pc = o.image_width / kPatchSize;
  const int lr = o.n_lasers / kPatchSize, lc = o.w_r / kPatchSize;

  DenseFeatures lidar_pix(o.n_lasers, o.w_r, o.d_pixel);
  for (int m = 0; m < map_grid.size(); ++m) {
    if (scene.maps.occupancy[m]) {
      const Pixel p = map_grid.unflat(m);
      random_unit(code_rng, lidar_pix.at(p.v, p.u));
    }
  }
  DenseFeatures lidar_patch(lr, lc, o.d_patch);
  std::vector<std::uint8_t> lidar_patch_live(static_cast<std::size_t>(lr) * lc, 0);
  for (int m = 0; m < map_grid.size(); ++m) {
    if (scene.maps.occupancy[m]) {
      const Pixel p = map_grid.unflat(m);
      lidar_patch_live[(p.v / kPatchSize) * lc + p.u / kPatchSize] = 1;
    }
  }
  for (int r = 0; r < lr; ++r) {
    for (int c = 0; c < lc; ++c) {
      if (lidar_patch_live[r * lc + c]) random_unit(code_rng, lidar_patch.at(r, c));
    }
  }

  DenseFeatures cam_pix(o.image_height, o.image_width, o.d_pixel);
  for (int i = 0; i < img_grid.size(); ++i) {
    const Pixel p = img_grid.unflat(i);
    if (owner[i] >= 0) {
      const Pixel m = map_grid.unflat(owner[i]);
      copy_code(lidar_pix.at(m.v, m.u), cam_pix.at(p.v, p.u));
    } else {
      random_unit(code_rng, cam_pix.at(p.v, p.u));
    }
  }

  // Camera patch = normalised sum of the LiDAR patch codes of its pixels' partners.
  DenseFeatures cam_patch(pr, pc, o.d_patch);
  std::vector<std::vector<int>> partners(static_cast<std::size_t>(pr) * pc);
  for (int i = 0; i < img_grid.size(); ++i) {
    if (owner[i] < 0) continue;
    const Pixel p = img_grid.unflat(i);
    const Pixel m = map_grid.unflat(owner[i]);
    partners[(p.v / kPatchSize) * pc + p.u / kPatchSize].push_back((m.v / kPatchSize) * lc + m.u / kPatchSize);
  }
  for (int r = 0; r < pr; ++r) {
    for (int c = 0; c < pc; ++c) {
      auto dst = cam_patch.at(r, c);
      std::vector<double> acc(o.d_patch, 0.0);
      for (int l : partners[r * pc + c]) {
        const auto src = lidar_patch.at(l / lc, l % lc);
        for (int d = 0; d < o.d_patch; ++d) acc[d] += src[d];
      }
      double n2 = 0.0;
      for (double a : acc) n2 += a * a;
      if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (int d = 0; d < o.d_patch; ++d) dst[d] = static_cast<float>(acc[d] * inv);
      } else {
        random_unit(code_rng, dst);
      }
    }
  }

  // Corruption: a partnered camera patch takes over the codes of an
  // unrelated live LiDAR patch.
  std::vector<std::uint8_t> corrupted(partners.size(), 0);
  if (o.n_outlier_features > 0) {
    std::vector<int> candidates;
    for (int i = 0; i < static_cast<int>(partners.size()); ++i) {
      if (!partners[i].empty()) candidates.push_back(i);
    }
    std::vector<int> live;
    for (int i = 0; i < static_cast<int>(lidar_patch_live.size()); ++i) {
      if (lidar_patch_live[i]) live.push_back(i);
    }
    std::shuffle(candidates.begin(), candidates.end(), code_rng);
    const int n = std::min<int>(o.n_outlier_features, static_cast<int>(candidates.size()));
    std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
    for (int i = 0; i < n; ++i) {
      const int cpatch = candidates[i];
      const auto& mine = partners[cpatch];
      int wrong = -1;
      for (int tries = 0; tries < 1000 && wrong < 0; ++tries) {
        const int cand = live[pick(code_rng)];
        if (std::find(mine.begin(), mine.end(), cand) == mine.end()) wrong = cand;
      }
      if (wrong < 0) continue;
      corrupted[cpatch] = 1;
      const int cr = cpatch / pc, cc = cpatch % pc, wr = wrong / lc, wc = wrong % lc;
      copy_code(lidar_patch.at(wr, wc), cam_patch.at(cr, cc));
      for (int dy = 0; dy < kPatchSize; ++dy) {
        for (int dx = 0; dx < kPatchSize; ++dx) {
          const Pixel mp{wc * kPatchSize + dx, wr * kPatchSize + dy};
          auto dst = cam_pix.at(cr * kPatchSize + dy, cc * kPatchSize + dx);
          if (scene.maps.occupied(mp)) copy_code(lidar_pix.at(mp.v, mp.u), dst);
          else random_unit(code_rng, dst);
        }
      }
      scene.corrupted_patches.push_back({cc, cr});
    }
  }

  for (int i = 0; i < img_grid.size(); ++i) {
    if (owner[i] < 0) continue;
    const Pixel p = img_grid.unflat(i);
    if (corrupted[(p.v / kPatchSize) * pc + p.u / kPatchSize]) continue;
    scene.correspondences.push_back({p, map_grid.unflat(owner[i])});
  }

  scene.camera_features = {std::move(cam_patch), std::move(cam_pix), features::FeatureSource::Synthetic};
  scene.lidar_features = {std::move(lidar_patch), std::move(lidar_pix), features::FeatureSource::Synthetic};

  // Grey picture: soft vertical gradient with the seen reflectances stamped in.
  scene.image = RgbImage(o.image_width, o.image_height);
  for (int i = 0; i < img_grid.size(); ++i) {
    const Pixel p = img_grid.unflat(i);
    double g = 0.25 + 0.35 * static_cast<double>(p.v) / o.image_height;
    if (owner[i] >= 0) g = scene.maps.reflectance[owner[i]];
    const auto b = static_cast<std::uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
    auto* px = scene.image.at(p.u, p.v);
    px[0] = px[1] = px[2] = b;
  }
  return scene;
}

}  // namespace papireg::dataio
