#include <cmath>
#include <cstring>

#include <gtest/gtest.h>

#include "mdpn/error.hpp"
#include "mdpn/heatmap.hpp"
#include "mdpn/heatmap_io.hpp"
#include "mdpn/random.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {
namespace {

Heatmap one_peak(std::size_t H, std::size_t W, GridPoint at, double sigma) {
  std::optional<GridPoint> j[] = {at};
  return render_target(j, sigma, H, W).heatmap;
}

TEST(Heatmap, RejectsTinyGrids) {
  EXPECT_THROW(Heatmap(1, 2, 5), Error);
  EXPECT_THROW(Heatmap(1, 5, 5, "", HeatmapGeometry{{0, 0, 1, 1}, 0.0, 1.0}), Error);
}

TEST(Heatmap, GridMappingUsesCellCentres) {
  const HeatmapGeometry g{{100, 50, 48, 64}, 4.0, 4.0};
  const Point p = grid_to_image(g, {0, 0});
  EXPECT_DOUBLE_EQ(p.x, 102.0);
  EXPECT_DOUBLE_EQ(p.y, 52.0);
  const GridPoint q = image_to_grid(g, {130.5, 77.25});
  const Point back = grid_to_image(g, q);
  EXPECT_DOUBLE_EQ(back.x, 130.5);
  EXPECT_DOUBLE_EQ(back.y, 77.25);
}

TEST(Heatmap, RenderTargetPeakAndMask) {
  std::optional<GridPoint> joints[] = {GridPoint{5, 4}, std::nullopt, GridPoint{-3, 2}};
  const auto t = render_target(joints, 2.0, 10, 12);
  EXPECT_EQ(t.mask, (std::vector<unsigned char>{1, 0, 0}));
  EXPECT_FLOAT_EQ(t.heatmap.at(0, 4, 5), 1.0f);
  EXPECT_FLOAT_EQ(t.heatmap.at(0, 4, 7), static_cast<float>(std::exp(-4.0 / 8.0)));
  for (float v : t.heatmap.channel(1)) EXPECT_EQ(v, 0.0f);
  for (float v : t.heatmap.channel(2)) EXPECT_EQ(v, 0.0f);
}

TEST(Heatmap, KernelIsNormalisedAndSymmetric) {
  const auto k = gaussian_kernel(1.0);
  ASSERT_EQ(k.size(), 7u);
  double s = 0.0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-12);
  for (std::size_t i = 0; i < k.size(); ++i) EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
}

TEST(Heatmap, SmoothPreservesConstantPlanes) {
  Heatmap h(2, 6, 7);
  for (auto& v : h.values()) v = 0.75f;
  const Heatmap s = smooth(h, 1.5);
  for (float v : s.values()) EXPECT_NEAR(v, 0.75f, 1e-6);
  EXPECT_EQ(smooth(h, 0.0), h);
}

TEST(Heatmap, SmoothKeepsSymmetricPeakInPlace) {
  const Heatmap h = one_peak(15, 15, {7, 7}, 1.0);
  const Heatmap s = smooth(h, 1.0);
  const auto pose = decode(s, {0.0, true});
  EXPECT_DOUBLE_EQ(pose.keypoints[0].x, 7.5);
  EXPECT_DOUBLE_EQ(pose.keypoints[0].y, 7.5);
}

TEST(Heatmap, DecodeQuarterOffsetExamples) {
  Heatmap h(1, 5, 5);
  h.at(0, 2, 2) = 1.0f;
  h.at(0, 2, 3) = 0.5f;
  h.at(0, 1, 2) = 0.25f;
  auto p = decode(h, {0.0, true}).keypoints[0];
  // cell (2, 2), shifted +0.25 in x and -0.25 in y, then +0.5 to pixel centre.
  EXPECT_DOUBLE_EQ(p.x, 2.75);
  EXPECT_DOUBLE_EQ(p.y, 2.25);
  EXPECT_FLOAT_EQ(p.score, 1.0);
  p = decode(h, {0.0, false}).keypoints[0];
  EXPECT_DOUBLE_EQ(p.x, 2.5);
  EXPECT_DOUBLE_EQ(p.y, 2.5);
}

TEST(Heatmap, DecodeEmptyChannelIsMissing) {
  Heatmap h(2, 4, 4);
  h.at(1, 0, 0) = -1.0f;
  const auto pose = decode(h);
  EXPECT_FALSE(pose.keypoints[0].annotated);
  EXPECT_FALSE(pose.keypoints[1].annotated);
}

TEST(Heatmap, DecodeOnBorderSkipsOffsetOnThatAxis) {
  Heatmap h(1, 5, 5);
  h.at(0, 0, 2) = 1.0f;
  h.at(0, 0, 3) = 0.5f;
  h.at(0, 1, 2) = 0.6f;
  const auto p = decode(h, {0.0, true}).keypoints[0];
  EXPECT_DOUBLE_EQ(p.x, 2.75);
  EXPECT_DOUBLE_EQ(p.y, 0.5);
}

// Property: for interior peaks the quarter offset never moves the estimate
// further than 0.25 cell per axis from the true location.
TEST(Heatmap, QuarterOffsetErrorBoundProperty) {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const GridPoint t{rng.uniform(8, 40), rng.uniform(8, 56)};
    const auto p = decode(one_peak(64, 48, t, 2.25), {1.0, true}).keypoints[0];
    EXPECT_LE(std::abs(p.x - 0.5 - t.x), 0.25 + 1e-9);
    EXPECT_LE(std::abs(p.y - 0.5 - t.y), 0.25 + 1e-9);
  }
}

TEST(Heatmap, FlipRoundTrip) {
  Rng rng(3);
  const auto& coco = builtin_joint_set("coco");
  Heatmap h(coco.count(), 8, 9, "coco");
  for (auto& v : h.values()) v = static_cast<float>(rng.uniform());
  const Heatmap back = unmirror(mirror(h, coco.flip_pairs), coco.flip_pairs);
  for (std::size_t k = 0; k < h.channels(); ++k) {
    for (std::size_t y = 0; y < h.height(); ++y) {
      for (std::size_t x = 1; x < h.width(); ++x) EXPECT_EQ(back.at(k, y, x), h.at(k, y, x));
    }
  }
}

TEST(Heatmap, FlipMergeOfMirroredInputKeepsPeaks) {
  const auto& coco = builtin_joint_set("coco");
  std::vector<std::optional<GridPoint>> joints(coco.count());
  joints[*coco.index_of("left_wrist")] = GridPoint{10, 12};
  joints[*coco.index_of("right_wrist")] = GridPoint{30, 20};
  Heatmap h = render_target(joints, 2.0, 32, 40).heatmap;
  h.set_joint_set("coco");
  const Heatmap merged = flip_merge(h, mirror(h, coco.flip_pairs), coco.flip_pairs);
  EXPECT_EQ(decode(merged), decode(h));
  EXPECT_THROW(flip_merge(h, Heatmap(coco.count(), 8, 8, "coco"), coco.flip_pairs), Error);
}

TEST(HeatmapIo, RoundTripIsLossless) {
  Rng rng(5);
  Heatmap h(3, 4, 5, "posetrack", HeatmapGeometry{{1.5, -2.0, 40, 32}, 8.0, 8.0});
  for (auto& v : h.values()) v = static_cast<float>(rng.normal());
  h.values()[0] = -0.0f;
  const std::string bytes = serialize_heatmap(h);
  EXPECT_EQ(bytes.size(), 4 + 4 * 4 + 6 * 8 + 4 + 9 + 3 * 4 * 5 * 4u);
  const Heatmap back = parse_heatmap(bytes);
  EXPECT_EQ(back, h);
  EXPECT_EQ(serialize_heatmap(back), bytes);
}

TEST(HeatmapIo, LayoutIsLittleEndian) {
  Heatmap h(1, 3, 3, "a");
  h.at(0, 0, 0) = 1.0f;
  const std::string b = serialize_heatmap(h);
  EXPECT_EQ(b.substr(0, 4), "PKHM");
  EXPECT_EQ(static_cast<unsigned char>(b[4]), 1u);  // version
  EXPECT_EQ(static_cast<unsigned char>(b[8]), 1u);  // K
  EXPECT_EQ(static_cast<unsigned char>(b[12]), 3u);
  EXPECT_EQ(static_cast<unsigned char>(b[16]), 3u);
  const std::size_t payload = 4 + 16 + 48 + 4 + 1;
  EXPECT_EQ(b.substr(payload, 4), std::string("\x00\x00\x80\x3f", 4));
}

TEST(HeatmapIo, RejectsMalformedInput) {
  Heatmap h(2, 3, 3, "coco");
  const std::string good = serialize_heatmap(h);
  auto expect_parse_error = [](const std::string& bytes, const char* needle) {
    try {
      parse_heatmap(bytes);
      FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_parse_error(good.substr(0, good.size() - 1), "truncated");
  expect_parse_error(good + "x", "trailing");
  std::string bad = good;
  bad[0] = 'X';
  expect_parse_error(bad, "magic");
  bad = good;
  bad[4] = 9;
  expect_parse_error(bad, "version");
  // Truncation is reported identically every time.
  std::string first, second;
  try { parse_heatmap(good.substr(0, 30)); } catch (const ParseError& e) { first = e.what(); }
  try { parse_heatmap(good.substr(0, 30)); } catch (const ParseError& e) { second = e.what(); }
  EXPECT_FALSE(first.empty());
  EXPECT_EQ(first, second);
}

}  // namespace
}  // namespace mdpn
