#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "papireg/dataio/io.hpp"
#include "papireg/error.hpp"

namespace papireg::cli {
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path);
  return out;
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, const std::uint8_t rgb[3]) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  for (;;) {
    if (x0 >= 0 && x0 < img.width && y0 >= 0 && y0 < img.height) std::copy(rgb, rgb + 3, img.at(x0, y0));
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

std::vector<pipeline::FrameResult> collect_frames(const std::vector<dataio::ManifestEntry>& entries,
                                                  const dataio::RunConfig& cfg, std::ostream& log,
                                                  std::vector<matching::MatchTimings>* timings) {
  std::vector<pipeline::FrameResult> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto frame = dataio::load_frame(entries[i], cfg, i);
    const auto reg = pipeline::register_frame(frame, cfg, i);
    out.push_back(pipeline::score(frame, reg, cfg));
    if (timings) timings->push_back(reg.timings);
    const auto& r = out.back();
    log << "frame " << r.name << (r.registered ? "" : " (no consensus)") << " rte " << num(r.errors.rte) << " m rre "
        << num(r.errors.rre) << " deg\n";
  }
  return out;
}

void write_per_frame_csv(const std::string& path, const std::vector<pipeline::FrameResult>& frames) {
  auto out = open_out(path);
  out << "frame,registered,rte_m,rre_deg,success,correspondences,inliers\n";
  for (const auto& f : frames) {
    out << f.name << ',' << int(f.registered) << ',' << num(f.errors.rte) << ',' << num(f.errors.rre) << ','
        << int(f.errors.success) << ',' << f.correspondences << ',' << f.inliers << '\n';
  }
}

std::vector<metrics::RegistrationErrors> errors_of(const std::vector<pipeline::FrameResult>& frames) {
  std::vector<metrics::RegistrationErrors> e;
  for (const auto& f : frames) e.push_back(f.errors);
  return e;
}

}  // namespace

void write_run_manifest(const std::string& out_dir, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& inputs, const dataio::RunConfig& cfg) {
  fs::create_directories(out_dir);
  auto out = open_out(join(out_dir, "run_manifest.txt"));
  out << "command = " << command << '\n';
  for (const auto& [k, v] : inputs) out << "input." << k << " = " << v << '\n';
  out << "config_hash = " << std::hex << std::setw(16) << std::setfill('0') << cfg.hash() << std::dec << '\n';
  out << cfg.canonical_text();
}

ProjectResult cmd_project(const std::string& cloud_path, const std::string& laser_ids_path,
                          const dataio::RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  auto cloud = dataio::read_point_cloud(cloud_path);
  if (!laser_ids_path.empty()) cloud.laser_id = dataio::read_laser_ids(laser_ids_path);
  ProjectResult r;
  r.maps = projection::project_to_maps(cloud, cfg.projection);
  r.occupancy = r.maps.occupancy_ratio();
  fs::create_directories(out_dir);
  dataio::save_maps(join(out_dir, "maps"), r.maps);
  dataio::write_pgm(join(out_dir, "range.pgm"), r.maps.width, r.maps.height,
                    projection::range_preview(r.maps, cfg.projection.range_max));
  dataio::write_pgm(join(out_dir, "reflectance.pgm"), r.maps.width, r.maps.height,
                    projection::reflectance_preview(r.maps));
  write_run_manifest(out_dir, "project", {{"cloud", cloud_path}, {"laser_ids", laser_ids_path}}, cfg);
  log << "maps " << r.maps.width << "x" << r.maps.height << '\n';
  log << "occupancy " << std::fixed << std::setprecision(1) << 100.0 * r.occupancy << "%\n" << std::defaultfloat;
  return r;
}

features::FeatureMaps cmd_extract(const ExtractArgs& args, const dataio::RunConfig& cfg, std::ostream& log) {
  const int sources = !args.image.empty() + !args.cloud.empty() + !args.maps.empty();
  if (sources != 1) fail(ErrorCode::InvalidArgument, "extract needs exactly one of --image, --cloud, --maps");
  if (args.output.empty()) fail(ErrorCode::InvalidArgument, "extract needs --output");
  features::FeatureMaps f;
  if (!args.image.empty()) {
    f = features::extract_builtin(dataio::read_image(args.image), cfg.d_patch, cfg.d_pixel);
  } else {
    projection::ProjectionMaps maps;
    if (!args.maps.empty()) {
      maps = dataio::load_maps(args.maps);
    } else {
      auto cloud = dataio::read_point_cloud(args.cloud);
      if (!args.laser_ids.empty()) cloud.laser_id = dataio::read_laser_ids(args.laser_ids);
      maps = projection::project_to_maps(cloud, cfg.projection);
    }
    f = features::extract_lidar_features(maps, cfg.projection.range_max, cfg.d_patch, cfg.d_pixel);
  }
  features::save_features(args.output, f);
  log << "features patch " << f.patch.height << "x" << f.patch.width << "x" << f.patch.channels << " pixel "
      << f.pixel.height << "x" << f.pixel.width << "x" << f.pixel.channels << '\n';
  return f;
}

matching::CorrespondenceSet cmd_match(const dataio::Frame& frame, const dataio::RunConfig& cfg,
                                      const std::string& out_dir, std::ostream& log) {
  const auto feats = pipeline::frame_features(frame, cfg);
  auto corrs = matching::match_patch_to_pixel(feats.camera, feats.lidar, frame.maps, frame.cloud,
                                              pipeline::match_options(cfg));
  fs::create_directories(out_dir);
  matching::write_correspondences_csv(join(out_dir, "correspondences.csv"), corrs);
  write_run_manifest(out_dir, "match", {{"frame", frame.name}}, cfg);
  log << "correspondences " << corrs.size() << " dropped " << corrs.dropped << '\n';
  return corrs;
}

RgbImage match_visualization(const RgbImage& camera, const projection::ProjectionMaps& maps,
                             const matching::CorrespondenceSet& corrs, const std::vector<bool>& inliers) {
  const int top = camera.height;
  RgbImage canvas(std::max(camera.width, maps.width), camera.height + maps.height);
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) std::copy(camera.at(x, y), camera.at(x, y) + 3, canvas.at(x, y));
  }
  const auto refl = projection::reflectance_preview(maps);
  for (int y = 0; y < maps.height; ++y) {
    for (int x = 0; x < maps.width; ++x) {
      auto* px = canvas.at(x, top + y);
      px[0] = px[1] = px[2] = refl[static_cast<std::size_t>(y) * maps.width + x];
    }
  }
  static constexpr std::uint8_t kGreen[3] = {0, 220, 0};
  static constexpr std::uint8_t kRed[3] = {230, 0, 0};
  for (std::size_t i = 0; i < corrs.items.size(); ++i) {
    const auto& c = corrs.items[i];
    const bool good = i < inliers.size() && inliers[i];
    draw_line(canvas, static_cast<int>(std::lround(c.image.x())), static_cast<int>(std::lround(c.image.y())), c.map.u,
              top + c.map.v, good ? kGreen : kRed);
  }
  return canvas;
}

pipeline::Registration cmd_register(const dataio::Frame& frame, const dataio::RunConfig& cfg,
                                    const std::string& out_dir, std::ostream& log) {
  auto reg = pipeline::register_frame(frame, cfg, 0);
  fs::create_directories(out_dir);
  matching::write_correspondences_csv(join(out_dir, "correspondences.csv"), reg.correspondences);
  write_run_manifest(out_dir, "register", {{"frame", frame.name}}, cfg);
  const std::vector<bool> mask = reg.estimate ? reg.estimate->inlier_mask : std::vector<bool>{};
  RgbImage camera = frame.image;
  if (camera.width == 0) camera = RgbImage(frame.intrinsics.width, frame.intrinsics.height);
  dataio::write_ppm(join(out_dir, "matches.ppm"), match_visualization(camera, frame.maps, reg.correspondences, mask));
  log << "correspondences " << reg.correspondences.size() << '\n';
  if (!reg.estimate) {
    log << "registration failed: " << reg.failure << '\n';
    return reg;
  }
  pose::write_pose_estimate(join(out_dir, "pose.txt"), *reg.estimate);
  log << "inliers " << reg.estimate->inlier_count << '\n';
  if (frame.gt_extrinsics) {
    const auto e = metrics::evaluate(*frame.gt_extrinsics, reg.estimate->pose, cfg.euler, cfg.rte_threshold,
                                     cfg.rre_threshold);
    log << "rte " << num(e.rte) << " m rre " << num(e.rre) << " deg " << (e.success ? "success" : "failure") << '\n';
  }
  return reg;
}

EvaluateReport cmd_evaluate(const std::string& manifest_path, const dataio::RunConfig& cfg,
                            const std::string& out_dir, std::ostream& log) {
  const auto entries = dataio::read_manifest(manifest_path);
  if (entries.empty()) fail(ErrorCode::EmptyList, "manifest lists no frames");
  std::vector<matching::MatchTimings> timings;
  EvaluateReport report;
  report.frames = collect_frames(entries, cfg, log, &timings);
  const auto errs = errors_of(report.frames);
  report.stats = metrics::aggregate(errs);

  fs::create_directories(out_dir);
  write_per_frame_csv(join(out_dir, "per_frame.csv"), report.frames);
  {
    auto out = open_out(join(out_dir, "histogram.csv"));
    metrics::write_histograms_csv(out, errs);
  }
  {
    auto out = open_out(join(out_dir, "timing.csv"));
    out << "frame,dense_s,refine_s,total_s\n";
    for (std::size_t i = 0; i < timings.size(); ++i) {
      out << report.frames[i].name << ',' << num(timings[i].dense_seconds) << ',' << num(timings[i].refine_seconds)
          << ',' << num(timings[i].total()) << '\n';
    }
  }
  const std::string table = metrics::table_header() + "\n" + metrics::format_table_row(report.stats) + "\n";
  open_out(join(out_dir, "report.txt")) << table << "frames " << report.stats.count << '\n';
  write_run_manifest(out_dir, "evaluate", {{"manifest", manifest_path}}, cfg);
  log << table;
  return report;
}

std::vector<AblationRow> cmd_ablate_topk(const std::string& manifest_path, const std::vector<int>& ks,
                                         const dataio::RunConfig& cfg, const std::string& out_dir, std::ostream& log,
                                         int repeats) {
  if (ks.empty()) fail(ErrorCode::EmptyList, "no k values");
  for (int k : ks) {
    if (k < 1) fail(ErrorCode::InvalidArgument, "k values must be >= 1");
  }
  if (repeats < 1) fail(ErrorCode::InvalidArgument, "repeats must be >= 1");
  const auto entries = dataio::read_manifest(manifest_path);
  if (entries.empty()) fail(ErrorCode::EmptyList, "manifest lists no frames");

  std::vector<std::vector<pipeline::FrameResult>> results(ks.size());
  std::vector<std::vector<double>> times(ks.size());
  for (std::size_t f = 0; f < entries.size(); ++f) {
    const auto frame = dataio::load_frame(entries[f], cfg, f);
    const auto feats = pipeline::frame_features(frame, cfg);
    const auto t0 = Clock::now();
    const auto patch_p = matching::patch_assignment(feats.camera, feats.lidar);
    const double dense = seconds_since(t0);
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      dataio::RunConfig kcfg = cfg;
      kcfg.top_k = ks[ki];
      const auto options = pipeline::match_options(kcfg);
      pipeline::Registration reg;
      double best = std::numeric_limits<double>::infinity();
      for (int r = 0; r < repeats; ++r) {
        const auto t1 = Clock::now();
        reg.correspondences = matching::refine_matches(patch_p, feats.camera, feats.lidar, frame.maps, frame.cloud, options);
        best = std::min(best, seconds_since(t1));
      }
      reg.timings = {dense, best};
      try {
        reg.estimate = pose::ransac_pnp(reg.correspondences, frame.intrinsics, pipeline::ransac_params(kcfg, f));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoConsensus) throw;
        reg.failure = e.what();
      }
      results[ki].push_back(pipeline::score(frame, reg, kcfg));
      times[ki].push_back(reg.timings.total());
    }
  }

  std::vector<AblationRow> rows;
  for (std::size_t ki = 0; ki < ks.size(); ++ki) {
    rows.push_back({ks[ki], metrics::aggregate(errors_of(results[ki])), median(times[ki])});
  }

  fs::create_directories(out_dir);
  {
    auto out = open_out(join(out_dir, "ablation.csv"));
    out << "k,mean_rte_m,std_rte_m,mean_rre_deg,std_rre_deg,accuracy_pct,frames\n";
    for (const auto& r : rows) {
      out << r.k << ',' << num(r.stats.mean_rte) << ',' << num(r.stats.std_rte) << ',' << num(r.stats.mean_rre) << ','
          << num(r.stats.std_rre) << ',' << num(r.stats.accuracy) << ',' << r.stats.count << '\n';
    }
  }
  {
    auto out = open_out(join(out_dir, "ablation_timing.csv"));
    out << "k,median_time_s\n";
    for (const auto& r : rows) out << r.k << ',' << num(r.median_seconds) << '\n';
  }
  std::string ks_text;
  for (int k : ks) ks_text += (ks_text.empty() ? "" : ",") + std::to_string(k);
  write_run_manifest(out_dir, "ablate-topk", {{"manifest", manifest_path}, {"k", ks_text}}, cfg);

  log << "Top-k | RTE(m) | RRE(deg) | Acc.(%) | Time(s)\n";
  for (const auto& r : rows) {
    log << r.k << " | " << metrics::format_table_row(r.stats) << " | " << std::fixed << std::setprecision(4)
        << r.median_seconds << std::defaultfloat << '\n';
  }
  return rows;
}

std::vector<std::string> cmd_synth(const std::string& out_dir, int count, const dataio::SyntheticOptions& base,
                                   const dataio::RunConfig& cfg, std::ostream& log) {
  if (count < 1) fail(ErrorCode::InvalidArgument, "count must be >= 1");
  fs::create_directories(out_dir);
  std::vector<std::string> names;
  std::ostringstream manifest;
  manifest << "# synthetic scenes, base seed " << cfg.seed << '\n';
  for (int i = 0; i < count; ++i) {
    dataio::SyntheticOptions o = base;
    o.seed = cfg.frame_seed(static_cast<std::size_t>(i));
    std::ostringstream name;
    name << "synth_" << std::setw(3) << std::setfill('0') << i;
    const auto scene = dataio::generate_synthetic(o);
    dataio::save_frame(join(out_dir, name.str()), dataio::frame_from_synthetic(scene, name.str()));
    manifest << "frame " << name.str() << '\n';
    names.push_back(name.str());
  }
  open_out(join(out_dir, "manifest.txt")) << manifest.str();
  dataio::RunConfig scene_cfg = cfg;
  scene_cfg.projection.width = base.w_r;
  scene_cfg.projection.height = base.n_lasers;
  scene_cfg.image_width = base.image_width;
  scene_cfg.image_height = base.image_height;
  open_out(join(out_dir, "config.txt")) << scene_cfg.canonical_text();
  log << "wrote " << count << " scenes to " << out_dir << '\n';
  return names;
}

// --- command line ------------------------------------------------------------

namespace {

struct ConfigFlags {
  std::string file;
  std::vector<std::string> values = std::vector<std::string>(dataio::RunConfig::keys().size());
  std::vector<CLI::Option*> options;
  int k = 0;
  CLI::Option* k_option = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key = value configuration file");
    const auto& keys = dataio::RunConfig::keys();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      std::string flag = keys[i];
      std::replace(flag.begin(), flag.end(), '_', '-');
      options.push_back(app->add_option("--" + flag, values[i], "config key " + keys[i]));
    }
    k_option = app->add_option("--k", k, "alias for --top-k");
  }

  dataio::RunConfig resolve() const {
    dataio::RunConfig cfg;
    if (!file.empty()) cfg.apply(dataio::read_key_values(file));
    const auto& keys = dataio::RunConfig::keys();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (options[i]->count()) cfg.set(keys[i], values[i]);
    }
    if (k_option->count()) cfg.top_k = k;
    return cfg;
  }
};

struct FrameFlags {
  std::string dir;
  std::string kitti_root;
  int index = 0;

  void attach(CLI::App* app) {
    app->add_option("--frame", dir, "frame directory");
    app->add_option("--kitti", kitti_root, "KITTI sequence root");
    app->add_option("--index", index, "KITTI frame index");
  }

  dataio::Frame load(const dataio::RunConfig& cfg) const {
    if (dir.empty() == kitti_root.empty()) fail(ErrorCode::InvalidArgument, "give exactly one of --frame or --kitti");
    dataio::ManifestEntry e;
    if (!dir.empty()) {
      e.path = dir;
    } else {
      e.kind = dataio::ManifestEntry::Kind::Kitti;
      e.path = kitti_root;
      e.index = index;
    }
    return dataio::load_frame(e, cfg, 0);
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LiDAR-camera registration toolkit"};
  app.require_subcommand(1);

  std::string out_dir = ".";

  auto* project = app.add_subcommand("project", "project a point cloud to range/reflectance maps");
  ConfigFlags project_cfg;
  project_cfg.attach(project);
  std::string cloud_path, ids_path;
  project->add_option("--cloud", cloud_path, "KITTI .bin point cloud")->required();
  project->add_option("--laser-ids", ids_path, "per-point laser ring tensor");
  project->add_option("--out", out_dir, "output directory");

  auto* extract = app.add_subcommand("extract", "builtin features for an image or a scan");
  ConfigFlags extract_cfg;
  extract_cfg.attach(extract);
  ExtractArgs extract_args;
  extract->add_option("--image", extract_args.image, "camera image (PNG/PPM)");
  extract->add_option("--cloud", extract_args.cloud, "point cloud");
  extract->add_option("--laser-ids", extract_args.laser_ids, "per-point laser ring tensor");
  extract->add_option("--maps", extract_args.maps, "saved projection maps directory");
  extract->add_option("--output", extract_args.output, "feature file")->required();

  auto* match = app.add_subcommand("match", "patch-to-pixel matching for one frame");
  ConfigFlags match_cfg;
  match_cfg.attach(match);
  FrameFlags match_frame;
  match_frame.attach(match);
  match->add_option("--out", out_dir, "output directory");

  auto* reg = app.add_subcommand("register", "match and estimate the extrinsics of one frame");
  ConfigFlags reg_cfg;
  reg_cfg.attach(reg);
  FrameFlags reg_frame;
  reg_frame.attach(reg);
  reg->add_option("--out", out_dir, "output directory");

  auto* evaluate = app.add_subcommand("evaluate", "register every frame of a manifest and summarise");
  ConfigFlags eval_cfg;
  eval_cfg.attach(evaluate);
  std::string manifest;
  evaluate->add_option("--manifest", manifest, "frame manifest")->required();
  evaluate->add_option("--out", out_dir, "output directory");

  auto* synth = app.add_subcommand("synth", "write synthetic frames with ideal features");
  ConfigFlags synth_cfg;
  synth_cfg.attach(synth);
  int count = 1;
  dataio::SyntheticOptions synth_opts;
  synth->add_option("--count", count, "number of scenes");
  synth->add_option("--lasers", synth_opts.n_lasers, "laser rings");
  synth->add_option("--scan-width", synth_opts.w_r, "azimuth bins of the scan");
  synth->add_option("--outliers", synth_opts.n_outlier_features, "corrupted camera patches per scene");
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* ablate = app.add_subcommand("ablate-topk", "evaluate a manifest for several k");
  ConfigFlags ablate_cfg;
  ablate_cfg.attach(ablate);
  std::vector<int> ks = {100, 200, 300, 400, 500, 600};
  int repeats = 3;
  ablate->add_option("--manifest", manifest, "frame manifest")->required();
  ablate->add_option("--ks", ks, "k values")->delimiter(',');
  ablate->add_option("--repeats", repeats, "timing repetitions per k");
  ablate->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*project) {
      cmd_project(cloud_path, ids_path, project_cfg.resolve(), out_dir, out);
    } else if (*extract) {
      cmd_extract(extract_args, extract_cfg.resolve(), out);
    } else if (*match) {
      const auto cfg = match_cfg.resolve();
      cmd_match(match_frame.load(cfg), cfg, out_dir, out);
    } else if (*reg) {
      const auto cfg = reg_cfg.resolve();
      const auto r = cmd_register(reg_frame.load(cfg), cfg, out_dir, out);
      if (!r.estimate) return kExitNoConsensus;
    } else if (*evaluate) {
      cmd_evaluate(manifest, eval_cfg.resolve(), out_dir, out);
    } else if (*synth) {
      const auto cfg = synth_cfg.resolve();
      synth_opts.image_width = cfg.image_width;
      synth_opts.image_height = cfg.image_height;
      synth_opts.d_patch = cfg.d_patch;
      synth_opts.d_pixel = cfg.d_pixel;
      synth_opts.max_xy_translation = cfg.perturb_max_xy;
      synth_opts.yaw_range = cfg.perturb_yaw_range;
      cmd_synth(out_dir, count, synth_opts, cfg, out);
    } else if (*ablate) {
      cmd_ablate_topk(manifest, ks, ablate_cfg.resolve(), out_dir, out, repeats);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::NoConsensus ? kExitNoConsensus : kExitInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInputError;
  }
  return kExitOk;
}

}  // namespace papireg::cli
