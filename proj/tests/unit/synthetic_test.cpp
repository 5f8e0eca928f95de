#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "mdpn/synthetic.hpp"

namespace mdpn {
namespace {

TEST(Synthetic, FigureFitsInsideGrid) {
  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    const Figure f = sample_figure(rng, 32, 24, 1.0);
    for (const auto& p : f) {
      EXPECT_GE(p.x, 1.0);
      EXPECT_LE(p.x, 22.0);
      EXPECT_GE(p.y, 1.0);
      EXPECT_LE(p.y, 30.0);
    }
  }
}

TEST(Synthetic, RenderingDependsOnFigureAndClutter) {
  Rng rng(2);
  const Figure f = sample_figure(rng, 32, 24);
  const Tensor3 img = render_figure(f, {}, 1, 32, 24);
  EXPECT_EQ(render_figure(f, {}, 1, 32, 24), img);
  const auto clutter = sample_clutter(rng, f, 4, 32, 24);
  EXPECT_NE(render_figure(f, clutter, 1, 32, 24), img);
  Figure moved = f;
  moved[0].x += 1.0;
  EXPECT_NE(render_figure(moved, {}, 1, 32, 24), img);
  for (const auto& [a, b] : figure_bones()) {
    EXPECT_LT(a, kMergedJoints);
    EXPECT_LT(b, kMergedJoints);
  }
}

TEST(Synthetic, ClutterKeepsAwayFromJoints) {
  Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const Figure f = sample_figure(rng, 32, 24);
    for (const auto& d : sample_clutter(rng, f, 6, 32, 24)) {
      for (const auto& p : f) EXPECT_GE(std::hypot(d.at.x - p.x, d.at.y - p.y), 3.0 - 1e-9);
    }
  }
}

TEST(Synthetic, SamplesHaveDomainJointSet) {
  for (const auto& spec : default_domains()) {
    const auto s = gen_synthetic(spec, 5, 7);
    ASSERT_EQ(s.size(), 5u);
    const auto& set = builtin_joint_set(spec.name);
    for (const auto& x : s) {
      EXPECT_EQ(x.domain, spec.name);
      EXPECT_EQ(x.head, spec.name);
      EXPECT_EQ(x.target.channels(), set.count());
      EXPECT_EQ(x.mask.size(), set.count());
      EXPECT_EQ(x.keypoints.size(), set.count());
      EXPECT_EQ(x.input.height, 32u);
      for (std::size_t k = 0; k < set.count(); ++k) EXPECT_EQ(x.mask[k] != 0, x.keypoints[k].has_value());
    }
  }
}

TEST(Synthetic, SharedSeedSharesFigures) {
  // Domains drawn with the same seed and clip length see the same people but
  // different rendering.
  const auto d = default_domains();
  const auto coco = gen_synthetic(d[0], 3, 11);
  const auto mpii = gen_synthetic(d[1], 3, 11);
  const auto& cs = builtin_joint_set("coco");
  const auto& ms = builtin_joint_set("mpii");
  const auto lw_c = coco[0].keypoints[*cs.index_of("left_wrist")];
  const auto lw_m = mpii[0].keypoints[*ms.index_of("left_wrist")];
  ASSERT_TRUE(lw_c && lw_m);
  EXPECT_NEAR(lw_m->x - lw_c->x, d[1].offset.x - d[0].offset.x, 1e-12);
  EXPECT_NEAR(lw_m->y - lw_c->y, d[1].offset.y - d[0].offset.y, 1e-12);
  EXPECT_NE(coco[0].input, mpii[0].input);
}

TEST(Synthetic, ClipsShareAFigureWithJitter) {
  DomainSpec spec = default_domains()[2];
  ASSERT_GT(spec.clip_length, 2u);
  const auto s = gen_synthetic(spec, 3, 5);
  const auto& a = s[0].keypoints;
  const auto& b = s[1].keypoints;
  double moved = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k] && b[k]) moved = std::max(moved, std::hypot(a[k]->x - b[k]->x, a[k]->y - b[k]->y));
  }
  EXPECT_GT(moved, 0.0);
  EXPECT_LT(moved, 3.0);
}

TEST(Synthetic, Deterministic) {
  const auto spec = default_domains()[0];
  const auto a = gen_synthetic(spec, 4, 9);
  const auto b = gen_synthetic(spec, 4, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].input, b[i].input);
    EXPECT_EQ(a[i].target, b[i].target);
  }
  EXPECT_NE(gen_synthetic(spec, 1, 10)[0].input, a[0].input);
}

}  // namespace
}  // namespace mdpn
