#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "mdpn/error.hpp"
#include "mdpn/random.hpp"
#include "mdpn/suppression.hpp"
#include "support/oracles.hpp"

namespace mdpn {
namespace {

PersonInstance person(std::vector<Point> pts, Box box, double score) {
  PersonInstance p;
  p.joint_set = "posetrack";
  p.box = box;
  p.box_score = score;
  p.score = score;
  p.keypoints.resize(15);
  for (std::size_t i = 0; i < pts.size(); ++i) p.keypoints[i] = {pts[i].x, pts[i].y, 1.0, true};
  return p;
}

TEST(Oks, ConstantsFollowCocoSigmas) {
  const OksConstants c;
  EXPECT_DOUBLE_EQ(c.k("nose"), 0.052);
  EXPECT_DOUBLE_EQ(c.k("left_hip"), 0.214);
  EXPECT_DOUBLE_EQ(c.k("left_ankle"), 0.178);
  EXPECT_DOUBLE_EQ(c.k("head_top"), 0.158);
  EXPECT_DOUBLE_EQ(c.k("head_bottom"), c.k("upper_neck"));
  OksConstants d;
  EXPECT_THROW(d.set("nose", 0.0), Error);
}

TEST(Oks, IdenticalPosesScoreOne) {
  const auto a = person({{10, 10}, {20, 30}}, {0, 0, 50, 100}, 1.0);
  EXPECT_DOUBLE_EQ(oks(a, a, OksConstants{}), 1.0);
}

TEST(Oks, MatchesDefinition) {
  const auto a = person({{10, 10}, {20, 30}}, {0, 0, 50, 100}, 1.0);
  auto b = a;
  b.keypoints[0].x += 5;
  b.keypoints[1].y -= 3;
  b.keypoints[2] = {1, 1, 1, true};  // not annotated in a: ignored
  const auto k = OksConstants{}.for_set(builtin_joint_set("posetrack"));
  EXPECT_NEAR(oks(a, b, k), oracle::oks(a, b, k), 1e-15);
  const double k0 = k[0], k1 = k[1];
  const double expect = (std::exp(-25.0 / (2 * 5000 * k0 * k0)) + std::exp(-9.0 / (2 * 5000 * k1 * k1))) / 2;
  EXPECT_NEAR(oks(a, b, k), expect, 1e-15);
}

TEST(Oks, NoSharedJointsIsZeroAndSetsMustAgree) {
  auto a = person({{10, 10}}, {0, 0, 50, 100}, 1.0);
  auto b = person({}, {0, 0, 50, 100}, 1.0);
  EXPECT_EQ(oks(a, b, OksConstants{}), 0.0);
  b.joint_set = "coco";
  b.keypoints.resize(17);
  EXPECT_THROW(oks(a, b, OksConstants{}), Error);
}

TEST(Oks, UsesExplicitArea) {
  auto a = person({{0, 0}}, {0, 0, 10, 10}, 1.0);
  auto b = a;
  b.keypoints[0].x = 3;
  const double small = oks(a, b, OksConstants{});
  a.area = 10000.0;
  EXPECT_GT(oks(a, b, OksConstants{}), small);
}

TEST(OksNms, DuplicatesCollapseToHighestScore) {
  const auto a = person({{10, 10}, {20, 30}, {40, 40}}, {0, 0, 50, 100}, 0.9);
  auto dup = a;
  dup.score = 0.5;
  dup.keypoints[0].x += 1;
  const auto far = person({{300, 300}, {320, 330}}, {280, 280, 50, 100}, 0.7);
  const std::vector<PersonInstance> v{dup, far, a};
  EXPECT_EQ(oks_nms(v, 0.4, OksConstants{}), (std::vector<std::size_t>{2, 1}));
}

TEST(OksNms, EqualScoresKeepInputOrder) {
  const auto a = person({{10, 10}}, {0, 0, 50, 100}, 0.5);
  const std::vector<PersonInstance> v{a, a, a};
  EXPECT_EQ(oks_nms(v, 0.4, OksConstants{}), (std::vector<std::size_t>{0}));
  EXPECT_THROW(oks_nms(v, 0.0, OksConstants{}), Error);
}

TEST(BoxNms, Basics) {
  const std::vector<Box> b{{0, 0, 10, 10}, {1, 0, 10, 10}, {50, 50, 10, 10}};
  const std::vector<double> s{0.8, 0.9, 0.1};
  EXPECT_EQ(box_nms(b, s, 0.6), (std::vector<std::size_t>{1, 2}));
  EXPECT_DOUBLE_EQ(box_iou(b[0], b[1]), 90.0 / 110.0);
  EXPECT_DOUBLE_EQ(box_iou(b[0], b[2]), 0.0);
}

TEST(OksNms, MatchesExhaustiveOracle) {
  Rng rng(2024);
  const auto& set = builtin_joint_set("posetrack");
  const OksConstants consts;
  const auto k = consts.for_set(set);
  for (int t = 0; t < 200; ++t) {
    const auto v = oracle::random_instances(rng, 1 + rng.index(8), set.count(), set.name);
    const double thr = 0.2 + 0.6 * rng.uniform();
    const auto expected = oracle::exhaustive_nms(
        [&] {
          std::vector<double> s;
          for (const auto& p : v) s.push_back(p.score);
          return s;
        }(),
        thr, [&](std::size_t r, std::size_t o) { return oracle::oks(v[r], v[o], k); });
    ASSERT_TRUE(expected);
    EXPECT_EQ(oks_nms(v, thr, consts), *expected);
  }
}

// Property: no two kept instances overlap above the threshold and every
// dropped instance is covered by a higher-ranked kept one.
TEST(BoxNms, KeptSetIsIndependentAndCovering) {
  Rng rng(8);
  for (int t = 0; t < 200; ++t) {
    std::vector<Box> boxes;
    std::vector<double> scores;
    for (std::size_t i = 0; i < 1 + rng.index(10); ++i) {
      boxes.push_back({rng.uniform(0, 40), rng.uniform(0, 40), rng.uniform(5, 30), rng.uniform(5, 30)});
      scores.push_back(rng.uniform());
    }
    const auto kept = box_nms(boxes, scores, 0.5);
    std::vector<bool> is_kept(boxes.size(), false);
    for (std::size_t i : kept) is_kept[i] = true;
    for (std::size_t a = 0; a < kept.size(); ++a) {
      for (std::size_t b = a + 1; b < kept.size(); ++b) {
        EXPECT_LT(box_iou(boxes[kept[a]], boxes[kept[b]]), 0.5);
        EXPECT_GE(scores[kept[a]], scores[kept[b]]);
      }
    }
    for (std::size_t i = 0; i < boxes.size(); ++i) {
      if (is_kept[i]) continue;
      bool covered = false;
      for (std::size_t j : kept) covered |= scores[j] >= scores[i] && box_iou(boxes[j], boxes[i]) >= 0.5;
      EXPECT_TRUE(covered);
    }
  }
}

TEST(Rescore, MultipliesMeanKeypointScore) {
  auto p = person({{0, 0}, {1, 1}}, {0, 0, 10, 10}, 0.8);
  p.keypoints[0].score = 0.5;
  p.keypoints[1].score = 1.0;
  EXPECT_DOUBLE_EQ(rescore(p).score, 0.8 * 0.75);
  EXPECT_DOUBLE_EQ(rescore(person({}, {0, 0, 1, 1}, 0.8)).score, 0.0);
}

TEST(Thresholds, DropBoxesAndMaskJoints) {
  auto a = person({{0, 0}, {1, 1}}, {0, 0, 10, 10}, 0.8);
  a.keypoints[0].score = 0.2;
  const auto b = person({{0, 0}}, {0, 0, 10, 10}, 0.3);
  const auto out = apply_thresholds({a, b}, 0.4, 0.3);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_FALSE(out[0].keypoints[0].annotated);
  EXPECT_TRUE(out[0].keypoints[1].annotated);
  // Boundary values are kept.
  EXPECT_EQ(apply_thresholds({b}, 0.3, 0.0).size(), 1u);
  EXPECT_THROW(apply_thresholds({a}, -1, 0), Error);
}

}  // namespace
}  // namespace mdpn
