#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "commands.hpp"
#include "papireg/dataio/io.hpp"
#include "papireg/dataio/tensor_io.hpp"
#include "test_util.hpp"

using namespace papireg;
namespace fs = std::filesystem;

namespace {

struct RunResult {
  int code;
  std::string out;
  std::string err;
};

RunResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "papireg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small synthetic set written through the CLI itself.
std::string synth_set(const testutil::TempDir& dir, int count, int outliers = 0) {
  const auto r = run_cli({"synth", "--out", dir.file("synth"), "--count", std::to_string(count), "--lasers", "16",
                          "--scan-width", "256", "--outliers", std::to_string(outliers), "--seed", "5"});
  EXPECT_EQ(r.code, cli::kExitOk) << r.err;
  return dir.file("synth");
}

}  // namespace

TEST(CliProject, BinCenteredScanIsFullyOccupied) {
  testutil::TempDir dir("cli");
  const auto cloud = dataio::bin_centered_scan(64, 1024, 9);
  dataio::write_point_cloud(dir.file("scan.bin"), cloud);
  dataio::write_laser_ids(dir.file("ids.pprt"), *cloud.laser_id);
  const std::string out_dir = dir.file("fresh/nested");
  const auto r = run_cli({"project", "--cloud", dir.file("scan.bin"), "--laser-ids", dir.file("ids.pprt"), "--out", out_dir});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("maps 1024x64"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("occupancy 100.0%"), std::string::npos) << r.out;
  for (const char* f : {"range.pgm", "reflectance.pgm", "run_manifest.txt", "maps/range.pprt", "maps/reflectance.pprt",
                        "maps/index.pprt"}) {
    EXPECT_TRUE(fs::exists(fs::path(out_dir) / f)) << f;
  }
  EXPECT_EQ(dataio::read_tensor(out_dir + "/maps/range.pprt").dims, (std::vector<std::uint32_t>{64, 1024}));
}

TEST(CliProject, MissingCloudIsInputError) {
  testutil::TempDir dir("cli");
  const auto r = run_cli({"project", "--cloud", dir.file("none.bin"), "--out", dir.path()});
  EXPECT_EQ(r.code, cli::kExitInputError);
  EXPECT_NE(r.err.find("IoError"), std::string::npos);
}

TEST(CliExtract, ImageFeaturesAreLoadable) {
  testutil::TempDir dir("cli");
  std::mt19937_64 rng(81);
  RgbImage img(64, 32);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(rng());
  dataio::write_png(dir.file("img.png"), img);
  const auto r = run_cli({"extract", "--image", dir.file("img.png"), "--output", dir.file("img.feat")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = features::load_features(dir.file("img.feat"));
  EXPECT_EQ(f.patch.height, 8);
  EXPECT_EQ(f.pixel.channels, 32);
  const auto bad = run_cli({"extract", "--output", dir.file("x.feat")});
  EXPECT_EQ(bad.code, cli::kExitInputError);
}

TEST(CliRegister, IdealSyntheticSceneSucceeds) {
  testutil::TempDir dir("cli");
  const auto set = synth_set(dir, 1);
  const auto r = run_cli({"register", "--frame", set + "/synth_000", "--out", dir.file("reg")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("success"), std::string::npos) << r.out;
  const auto pos = r.out.find("rte ");
  ASSERT_NE(pos, std::string::npos);
  EXPECT_LT(std::stod(r.out.substr(pos + 4)), 1e-3);
  for (const char* f : {"pose.txt", "correspondences.csv", "matches.ppm", "run_manifest.txt"}) {
    EXPECT_TRUE(fs::exists(dir.file("reg/") + f)) << f;
  }
  const auto viz = dataio::read_ppm(dir.file("reg/matches.ppm"));
  EXPECT_EQ(viz.height, 160 + 16);
  bool green = false;
  for (int i = 0; i < viz.width * viz.height; ++i) {
    const auto* p = &viz.data[static_cast<std::size_t>(i) * 3];
    green |= p[0] == 0 && p[1] == 220 && p[2] == 0;
  }
  EXPECT_TRUE(green);
}

TEST(CliRegister, KOverrideChangesManifest) {
  testutil::TempDir dir("cli");
  const auto set = synth_set(dir, 1);
  ASSERT_EQ(run_cli({"register", "--frame", set + "/synth_000", "--out", dir.file("a")}).code, 0);
  ASSERT_EQ(run_cli({"register", "--frame", set + "/synth_000", "--out", dir.file("b"), "--k", "50"}).code, 0);
  const auto a = slurp(dir.file("a/run_manifest.txt"));
  const auto b = slurp(dir.file("b/run_manifest.txt"));
  EXPECT_NE(a.find("top_k = 300"), std::string::npos);
  EXPECT_NE(b.find("top_k = 50"), std::string::npos);
  EXPECT_NE(a.substr(a.find("config_hash")), b.substr(b.find("config_hash")));
}

TEST(CliRegister, NoOverlapExitsWithNoConsensus) {
  testutil::TempDir dir("cli");
  std::mt19937_64 rng(82);
  dataio::Frame f;
  f.name = "tiny";
  std::uniform_real_distribution<double> u(-20, 20);
  for (int i = 0; i < 5; ++i) f.cloud.points.push_back({u(rng), u(rng), 0.5, 0.3});
  f.image = RgbImage(64, 32);
  for (auto& b : f.image.data) b = static_cast<std::uint8_t>(rng());
  f.intrinsics = {50, 50, 32, 16, 64, 32};
  dataio::save_frame(dir.file("tiny"), f);
  const auto r = run_cli({"register", "--frame", dir.file("tiny"), "--out", dir.file("out"), "--map-width", "128",
                          "--map-height", "16"});
  EXPECT_EQ(r.code, cli::kExitNoConsensus) << r.err << r.out;
  EXPECT_FALSE(fs::exists(dir.file("out/pose.txt")));
  EXPECT_TRUE(fs::exists(dir.file("out/correspondences.csv")));
}

TEST(CliRegister, FlagErrors) {
  testutil::TempDir dir("cli");
  EXPECT_EQ(run_cli({"register", "--frame", dir.file("missing")}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"register"}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"register", "--frame", dir.path(), "--kitti", dir.path()}).code, cli::kExitInputError);
  EXPECT_EQ(run_cli({"register", "--frame", dir.path(), "--top-k", "abc"}).code, cli::kExitInputError);
  EXPECT_NE(run_cli({}).code, 0);
  EXPECT_NE(run_cli({"unknown"}).code, 0);
}

TEST(CliEvaluate, ReportsAndIsDeterministic) {
  testutil::TempDir dir("cli");
  const auto set = synth_set(dir, 3, 8);
  const auto a = run_cli({"evaluate", "--manifest", set + "/manifest.txt", "--out", dir.file("e1")});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = run_cli({"evaluate", "--manifest", set + "/manifest.txt", "--out", dir.file("e2")});
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"per_frame.csv", "histogram.csv", "report.txt", "run_manifest.txt"}) {
    EXPECT_EQ(slurp(dir.file("e1/") + f), slurp(dir.file("e2/") + f)) << f;
  }
  const auto report = slurp(dir.file("e1/report.txt"));
  EXPECT_EQ(report.rfind("RTE(m) | RRE(deg) | Acc.(%)\n", 0), 0u);
  EXPECT_NE(report.find("| 100.00\nframes 3\n"), std::string::npos) << report;
  const auto per_frame = slurp(dir.file("e1/per_frame.csv"));
  EXPECT_EQ(per_frame.rfind("frame,registered,rte_m,rre_deg,success,correspondences,inliers\n", 0), 0u);
  EXPECT_EQ(std::count(per_frame.begin(), per_frame.end(), '\n'), 4);
  EXPECT_EQ(slurp(dir.file("e1/timing.csv")).rfind("frame,dense_s,refine_s,total_s\n", 0), 0u);
}

TEST(CliEvaluate, SingleFrameHasZeroSpread) {
  testutil::TempDir dir("cli");
  const auto set = synth_set(dir, 1);
  const auto r = run_cli({"evaluate", "--manifest", set + "/manifest.txt", "--out", dir.file("e")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0.00 ± 0.00 | 0.00 ± 0.00 | 100.00"), std::string::npos) << r.out;
}

TEST(CliEvaluate, EmptyManifest) {
  testutil::TempDir dir("cli");
  std::ofstream(dir.file("m.txt")) << "# nothing\n";
  const auto r = run_cli({"evaluate", "--manifest", dir.file("m.txt"), "--out", dir.file("e")});
  EXPECT_EQ(r.code, cli::kExitInputError);
  EXPECT_NE(r.err.find("EmptyList"), std::string::npos);
}

TEST(CliAblate, TableSchemaAndSmallK) {
  testutil::TempDir dir("cli");
  const auto set = synth_set(dir, 2);
  const auto r = run_cli({"ablate-topk", "--manifest", set + "/manifest.txt", "--ks", "1,100", "--repeats", "1", "--out",
                          dir.file("ab")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Top-k | RTE(m) | RRE(deg) | Acc.(%) | Time(s)"), std::string::npos);
  const auto csv = slurp(dir.file("ab/ablation.csv"));
  EXPECT_EQ(csv.rfind("k,mean_rte_m,std_rte_m,mean_rre_deg,std_rre_deg,accuracy_pct,frames\n", 0), 0u);
  EXPECT_NE(csv.find("\n100,"), std::string::npos);
  EXPECT_NE(csv.find("\n1,"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir.file("ab/ablation_timing.csv")));
  EXPECT_EQ(run_cli({"ablate-topk", "--manifest", set + "/manifest.txt", "--ks", "0"}).code, cli::kExitInputError);
}

TEST(CliSynth, WritesManifestAndConfig) {
  testutil::TempDir dir("cli");
  const auto set = synth_set(dir, 2);
  const auto entries = dataio::read_manifest(set + "/manifest.txt");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_TRUE(fs::exists(set + "/synth_001/frame.txt"));
  const auto cfg = dataio::RunConfig::from_file(set + "/config.txt");
  EXPECT_EQ(cfg.projection.width, 256);
  EXPECT_EQ(cfg.projection.height, 16);
  EXPECT_EQ(cfg.seed, 5u);
}

TEST(MatchVisualization, LayoutAndColours) {
  RgbImage cam(8, 4);
  auto maps = projection::ProjectionMaps::empty(2, 12);
  matching::CorrespondenceSet corrs;
  corrs.items.push_back({{0, 0}, {0, 0}, {1, 0, 0}, 1.0});
  corrs.items.push_back({{7, 3}, {11, 1}, {1, 0, 0}, 1.0});
  const auto img = cli::match_visualization(cam, maps, corrs, {true, false});
  EXPECT_EQ(img.width, 12);
  EXPECT_EQ(img.height, 6);
  // The first line is vertical from (0,0) to (0,4).
  EXPECT_EQ(img.at(0, 2)[1], 220);
  EXPECT_EQ(img.at(11, 5)[0], 230);
}
