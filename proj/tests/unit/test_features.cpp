#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "papireg/dataio/tensor_io.hpp"
#include "papireg/features.hpp"
#include "test_util.hpp"

using namespace papireg;
using namespace papireg::features;

namespace {

GrayImage random_image(std::mt19937_64& rng, int w, int h) {
  std::uniform_real_distribution<float> u(0, 1);
  GrayImage img(w, h);
  for (auto& v : img.data) v = u(rng);
  return img;
}

double norm_of(std::span<const float> v) {
  double s = 0;
  for (float x : v) s += double(x) * x;
  return std::sqrt(s);
}

void expect_unit_or_zero(const DenseFeatures& f) {
  for (int r = 0; r < f.height; ++r) {
    for (int c = 0; c < f.width; ++c) {
      const double n = norm_of(f.at(r, c));
      if (n != 0.0) ASSERT_NEAR(n, 1.0, 1e-6) << r << "," << c;
    }
  }
}

GrayImage vertical_edge() {
  GrayImage img(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 4; x < 8; ++x) img(x, y) = 1.0f;
  }
  return img;
}

}  // namespace

TEST(Handcrafted, ConstantImageHasNoGradient) {
  const GrayImage img(16, 8, 0.4f);
  const auto d = handcrafted_descriptors(img);
  for (int r = 0; r < d.height; ++r) {
    for (int c = 0; c < d.width; ++c) {
      auto v = d.at(r, c);
      EXPECT_FLOAT_EQ(v[kIntensityChannel], 0.4f);
      EXPECT_FLOAT_EQ(v[kInverseIntensityChannel], 0.6f);
      for (int k = kMagnitudeChannel; k < kHandcraftedChannels; ++k) EXPECT_EQ(v[k], 0.0f);
    }
  }
}

TEST(ExtractBuiltin, ConstantImageGivesEqualFeatures) {
  const GrayImage img(16, 8, 0.4f);
  const auto f = extract_builtin(img);
  for (const DenseFeatures* d : {&f.patch, &f.pixel}) {
    for (std::size_t i = 0; i < d->locations(); ++i) {
      for (int k = 0; k < d->channels; ++k) ASSERT_EQ(d->data[i * d->channels + k], d->data[k]);
    }
  }
}

TEST(Handcrafted, VerticalEdgeHandOracle) {
  const auto d = handcrafted_descriptors(vertical_edge());
  auto v = d.at(3, 3);
  // Scale 1: gx = (I(4) - I(2)) / 2 = 0.5 at column 3.
  EXPECT_FLOAT_EQ(v[kMagnitudeChannel], 0.5f);
  // 3x3 window covers columns 2..4 with gx = 0, 0.5, 0.5 on three rows.
  EXPECT_FLOAT_EQ(v[kHistogramChannel + 0], 3.0f / 9.0f);
  // Scale 2: gx = 0.25 on columns 2..5 of the 5x5 window.
  EXPECT_FLOAT_EQ(v[kMagnitudeChannel + 1], 0.25f);
  EXPECT_FLOAT_EQ(v[kHistogramChannel + kOrientationBins], 20 * 0.25f / 25.0f);
  for (int s = 0; s < 3; ++s) {
    for (int b = 1; b < kOrientationBins; ++b) EXPECT_EQ(v[kHistogramChannel + s * kOrientationBins + b], 0.0f);
  }
}

TEST(Handcrafted, VerticalEdgePeaksInHorizontalGradientBin) {
  const auto d = handcrafted_descriptors(vertical_edge());
  for (int y = 0; y < 8; ++y) {
    for (int x = 2; x < 6; ++x) {
      auto v = d.at(y, x);
      const auto* hist = &v[kHistogramChannel];
      EXPECT_EQ(std::max_element(hist, hist + kOrientationBins) - hist, 0);
      EXPECT_GT(hist[0], 0.0f);
    }
  }
}

TEST(ExtractBuiltin, DeterministicAndUnitNorm) {
  std::mt19937_64 rng(1);
  const auto img = random_image(rng, 32, 16);
  const GrayImage copy = img;
  const auto a = extract_builtin(img);
  const auto b = extract_builtin(copy);
  EXPECT_EQ(a.patch.data, b.patch.data);
  EXPECT_EQ(a.pixel.data, b.pixel.data);
  EXPECT_EQ(a.patch.height, 4);
  EXPECT_EQ(a.patch.width, 8);
  EXPECT_EQ(a.patch.channels, kDefaultPatchDim);
  EXPECT_EQ(a.pixel.channels, kDefaultPixelDim);
  expect_unit_or_zero(a.patch);
  expect_unit_or_zero(a.pixel);
  EXPECT_NO_THROW(a.validate());
}

TEST(ExtractBuiltin, TruncatesAndPads) {
  std::mt19937_64 rng(2);
  const auto img = random_image(rng, 8, 8);
  const auto narrow = extract_builtin(img, 8, 4);
  EXPECT_EQ(narrow.patch.channels, 8);
  EXPECT_EQ(narrow.pixel.channels, 4);
  expect_unit_or_zero(narrow.pixel);
  const auto wide = extract_builtin(img, 100, 40);
  for (std::size_t i = 0; i < wide.pixel.locations(); ++i) {
    for (int k = kHandcraftedChannels; k < 40; ++k) EXPECT_EQ(wide.pixel.data[i * 40 + k], 0.0f);
  }
}

TEST(ExtractBuiltin, RgbUsesLuma) {
  RgbImage rgb(8, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 8; ++x) {
      auto* p = rgb.at(x, y);
      p[0] = static_cast<std::uint8_t>(x * 30);
      p[1] = static_cast<std::uint8_t>(y * 60);
      p[2] = 17;
    }
  }
  const auto a = extract_builtin(rgb);
  const auto b = extract_builtin(to_gray(rgb));
  EXPECT_EQ(a.pixel.data, b.pixel.data);
}

TEST(ExtractBuiltin, BadShape) {
  EXPECT_CODE(extract_builtin(GrayImage(10, 8)), ErrorCode::BadShape);
  EXPECT_CODE(extract_builtin(GrayImage(8, 6)), ErrorCode::BadShape);
}

TEST(ExtractBuiltin, TranslationCovariantOnInterior) {
  std::mt19937_64 rng(3);
  const auto img = random_image(rng, 48, 32);
  GrayImage shifted(48, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 4; x < 48; ++x) shifted(x, y) = img(x - 4, y);
  }
  const auto a = extract_builtin(img);
  const auto b = extract_builtin(shifted);
  // Patches two or more patches away from every border see identical pixels.
  for (int r = 2; r < a.patch.height - 2; ++r) {
    for (int c = 2; c < a.patch.width - 3; ++c) {
      auto pa = a.patch.at(r, c);
      auto pb = b.patch.at(r, c + 1);
      for (int k = 0; k < a.patch.channels; ++k) ASSERT_NEAR(pa[k], pb[k], 1e-6);
    }
  }
}

TEST(DualBranch, ZeroReflectanceHalfIsConstant) {
  std::mt19937_64 rng(4);
  const auto range = random_image(rng, 16, 8);
  const GrayImage zero(16, 8, 0.0f);
  const auto f = extract_dual_branch(range, zero, 64, 32);
  const auto ref_only = extract_dual_branch(zero, zero, 64, 32);
  // The reflectance half is the same direction everywhere; its share of the
  // norm depends on the range half, so compare directions.
  for (std::size_t i = 1; i < f.pixel.locations(); ++i) {
    std::vector<double> a(16), b(16);
    for (int k = 0; k < 16; ++k) {
      a[k] = f.pixel.data[i * 32 + 16 + k];
      b[k] = f.pixel.data[16 + k];
    }
    const double na = std::sqrt(std::inner_product(a.begin(), a.end(), a.begin(), 0.0));
    const double nb = std::sqrt(std::inner_product(b.begin(), b.end(), b.begin(), 0.0));
    const double cosine = std::inner_product(a.begin(), a.end(), b.begin(), 0.0) / (na * nb);
    EXPECT_NEAR(cosine, 1.0, 1e-6);
  }
  EXPECT_EQ(ref_only.pixel.channels, 32);
}

TEST(DualBranch, SwappingInputsSwapsHalves) {
  std::mt19937_64 rng(5);
  const auto a = random_image(rng, 16, 8);
  const auto b = random_image(rng, 16, 8);
  const auto ab = extract_dual_branch(a, b, 64, 32);
  const auto ba = extract_dual_branch(b, a, 64, 32);
  for (std::size_t i = 0; i < ab.pixel.locations(); ++i) {
    for (int k = 0; k < 16; ++k) {
      ASSERT_EQ(ab.pixel.data[i * 32 + k], ba.pixel.data[i * 32 + 16 + k]);
      ASSERT_EQ(ab.pixel.data[i * 32 + 16 + k], ba.pixel.data[i * 32 + k]);
    }
  }
}

TEST(DualBranch, KittiMapGrid) {
  const GrayImage range(1024, 64, 0.3f), refl(1024, 64, 0.1f);
  const auto f = extract_dual_branch(range, refl);
  EXPECT_EQ(f.patch.height, 16);
  EXPECT_EQ(f.patch.width, 256);
  EXPECT_EQ(f.pixel.height, 64);
  EXPECT_EQ(f.pixel.width, 1024);
}

TEST(DualBranch, ShapeMismatch) {
  EXPECT_CODE(extract_dual_branch(GrayImage(8, 8), GrayImage(16, 8)), ErrorCode::ShapeMismatch);
}

TEST(DualBranch, MaskedPixelsAreZero) {
  std::mt19937_64 rng(6);
  const auto a = random_image(rng, 8, 8);
  std::vector<std::uint8_t> mask(64, 1);
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) mask[y * 8 + x] = 0;  // whole top-left patch
  }
  mask[7 * 8 + 7] = 0;
  const auto f = extract_dual_branch(a, a, 64, 32, mask);
  EXPECT_EQ(norm_of(f.pixel.at(7, 7)), 0.0);
  EXPECT_EQ(norm_of(f.pixel.at(0, 0)), 0.0);
  EXPECT_EQ(norm_of(f.patch.at(0, 0)), 0.0);
  EXPECT_NEAR(norm_of(f.patch.at(1, 1)), 1.0, 1e-6);
}

TEST(PoolPatches, AverageThenNormalise) {
  DenseFeatures px(4, 4, 2);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      px.at(r, c)[0] = (r + c) % 2 ? 1.0f : 0.0f;
      px.at(r, c)[1] = (r + c) % 2 ? 0.0f : 1.0f;
    }
  }
  const auto p = pool_patches(px);
  EXPECT_NEAR(p.at(0, 0)[0], std::sqrt(0.5), 1e-7);
  EXPECT_NEAR(p.at(0, 0)[1], std::sqrt(0.5), 1e-7);
}

TEST(NormalizeLocations, CountsLargeDeviations) {
  DenseFeatures f(1, 3, 2);
  f.at(0, 0)[0] = 0.9999f;  // fixed, below the report tolerance
  f.at(0, 1)[0] = 2.0f;    // reported
  const std::size_t reported = normalize_locations(f);
  EXPECT_EQ(reported, 1u);
  EXPECT_NEAR(norm_of(f.at(0, 0)), 1.0, 1e-7);
  EXPECT_NEAR(norm_of(f.at(0, 1)), 1.0, 1e-7);
  EXPECT_EQ(norm_of(f.at(0, 2)), 0.0);
}

TEST(LinearHead, IdentityAndShape) {
  Eigen::MatrixXd rows = Eigen::MatrixXd::Random(3, 4);
  EXPECT_EQ(LinearHead::identity().apply(rows), rows);
  LinearHead h{Eigen::MatrixXd::Identity(4, 2)};
  EXPECT_EQ(h.apply(rows), rows.leftCols(2));
  LinearHead bad{Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_CODE(bad.apply(rows), ErrorCode::ShapeMismatch);
}

TEST(FeatureFiles, RoundTripBitIdentical) {
  testutil::TempDir dir("feat");
  std::mt19937_64 rng(7);
  const auto f = extract_builtin(random_image(rng, 32, 16));
  save_features(dir.file("f.feat"), f);
  LoadReport report;
  const auto g = load_features(dir.file("f.feat"), {}, &report);
  EXPECT_EQ(f.patch.data, g.patch.data);
  EXPECT_EQ(f.pixel.data, g.pixel.data);
  EXPECT_EQ(g.source, FeatureSource::External);
  EXPECT_EQ(report.renormalized, 0u);
}

TEST(FeatureFiles, TruncatedFile) {
  testutil::TempDir dir("feat");
  std::mt19937_64 rng(8);
  save_features(dir.file("f.feat"), extract_builtin(random_image(rng, 8, 8)));
  auto bytes = dataio::read_file_bytes(dir.file("f.feat"));
  bytes.resize(bytes.size() - 5);
  dataio::write_file_bytes(dir.file("t.feat"), bytes);
  EXPECT_CODE(load_features(dir.file("t.feat")), ErrorCode::FormatError);
}

TEST(FeatureFiles, WrongLayouts) {
  testutil::TempDir dir("feat");
  dataio::Tensor one{{2, 2, 3}, std::vector<float>(12, 0.0f)};
  dataio::write_tensor(dir.file("one.feat"), one);
  EXPECT_CODE(load_features(dir.file("one.feat")), ErrorCode::FormatError);
  const dataio::Tensor mismatched[2] = {{{1, 1, 2}, {1, 0}}, {{8, 4, 2}, std::vector<float>(64, 0.0f)}};
  dataio::write_tensors(dir.file("grid.feat"), mismatched);
  EXPECT_CODE(load_features(dir.file("grid.feat")), ErrorCode::FormatError);
  const dataio::Tensor flat[2] = {{{2}, {1, 0}}, {{2}, {1, 0}}};
  dataio::write_tensors(dir.file("rank.feat"), flat);
  EXPECT_CODE(load_features(dir.file("rank.feat")), ErrorCode::FormatError);
}

TEST(FeatureFiles, OffNormsAreRenormalisedAndCounted) {
  testutil::TempDir dir("feat");
  std::mt19937_64 rng(9);
  auto f = extract_builtin(random_image(rng, 8, 8));
  for (auto& x : f.patch.data) x *= 0.99f;
  for (auto& x : f.pixel.data) x *= 0.99f;
  const dataio::Tensor t[2] = {{{2, 2, 64}, f.patch.data}, {{8, 8, 32}, f.pixel.data}};
  dataio::write_tensors(dir.file("f.feat"), t);
  LoadReport report;
  const auto g = load_features(dir.file("f.feat"), {}, &report);
  expect_unit_or_zero(g.patch);
  expect_unit_or_zero(g.pixel);
  EXPECT_EQ(report.renormalized, 4u + 64u);
}

TEST(FeatureFiles, ZeroVectorAtOccupiedPixel) {
  testutil::TempDir dir("feat");
  std::mt19937_64 rng(10);
  auto f = extract_builtin(random_image(rng, 8, 8));
  std::fill_n(f.pixel.at(5, 6).begin(), f.pixel.channels, 0.0f);
  save_features(dir.file("f.feat"), f);
  std::vector<std::uint8_t> mask(64, 1);
  EXPECT_CODE(load_features(dir.file("f.feat"), mask), ErrorCode::NormError);
  mask[5 * 8 + 6] = 0;
  EXPECT_NO_THROW(load_features(dir.file("f.feat"), mask));
  EXPECT_NO_THROW(load_features(dir.file("f.feat")));
}

TEST(FeatureFiles, NonFiniteRejected) {
  testutil::TempDir dir("feat");
  const dataio::Tensor t[2] = {{{1, 1, 1}, {NAN}}, {{4, 4, 1}, std::vector<float>(16, 1.0f)}};
  dataio::write_tensors(dir.file("f.feat"), t);
  EXPECT_CODE(load_features(dir.file("f.feat")), ErrorCode::FormatError);
}

TEST(FeatureMaps, ValidateRejectsBadNorm) {
  FeatureMaps f;
  f.patch = DenseFeatures(1, 1, 2);
  f.pixel = DenseFeatures(4, 4, 2);
  EXPECT_NO_THROW(f.validate());
  f.pixel.at(0, 0)[0] = 0.5f;
  EXPECT_CODE(f.validate(), ErrorCode::NormError);
  f.pixel = DenseFeatures(4, 8, 2);
  EXPECT_CODE(f.validate(), ErrorCode::BadShape);
}
