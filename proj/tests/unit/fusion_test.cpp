#include <gtest/gtest.h>

#include "mdpn/error.hpp"
#include "mdpn/fusion.hpp"
#include "mdpn/random.hpp"

namespace mdpn {
namespace {

const HeatmapGeometry kGeom{{10, 20, 48, 64}, 1.0, 1.0};

Heatmap random_branch(Rng& rng, std::string_view set, std::size_t H = 64, std::size_t W = 48) {
  const auto& js = builtin_joint_set(set);
  std::vector<std::optional<GridPoint>> joints;
  for (std::size_t i = 0; i < js.count(); ++i) {
    joints.push_back(GridPoint{rng.uniform(4, W - 5.0), rng.uniform(4, H - 5.0)});
  }
  Heatmap h = render_target(joints, 2.25, H, W).heatmap;
  for (auto& v : h.values()) v = static_cast<float>(v * rng.uniform(0.5, 1.0));
  h.set_joint_set(std::string(set));
  h.set_geometry(kGeom);
  return h;
}

TEST(Branches, RejectDuplicatesAndMismatches) {
  Rng rng(1);
  BranchOutputs b;
  b.add(random_branch(rng, "coco"));
  EXPECT_THROW(b.add(random_branch(rng, "coco")), Error);
  EXPECT_THROW(b.add(random_branch(rng, "mpii", 32, 24)), Error);
  Heatmap unnamed(3, 64, 48);
  EXPECT_THROW(b.add(unnamed), Error);
  Heatmap moved = random_branch(rng, "mpii");
  moved.set_geometry({{0, 0, 1, 1}, 2.0, 2.0});
  EXPECT_THROW(b.add(moved), Error);
  EXPECT_THROW(b.at("posetrack"), Error);
}

TEST(Fusion, StrategyParsing) {
  EXPECT_EQ(FusionStrategy::parse("vote").kind, FusionStrategy::Kind::kVote);
  const auto s = FusionStrategy::parse("select:mpii");
  EXPECT_EQ(s.kind, FusionStrategy::Kind::kSelect);
  EXPECT_EQ(s.body, "mpii");
  const auto h = FusionStrategy::parse("head-swap:coco,mpii");
  EXPECT_EQ(h, FusionStrategy{});
  EXPECT_EQ(FusionStrategy::parse(h.to_string()), h);
  EXPECT_THROW(FusionStrategy::parse("swap"), ParseError);
  EXPECT_THROW(FusionStrategy::parse("select:"), ParseError);
}

TEST(Fusion, InterpolateHeadAlongNoseAxis) {
  DecodedPose p{"coco", std::vector<Keypoint>(17)};
  p.keypoints[0] = {50, 40, 0.9, true};   // nose
  p.keypoints[5] = {60, 60, 0.6, true};   // left shoulder
  p.keypoints[6] = {40, 60, 0.6, true};   // right shoulder
  const auto h = interpolate_head(p);
  EXPECT_DOUBLE_EQ(h.head_bottom.x, 50);
  EXPECT_DOUBLE_EQ(h.head_bottom.y, 50);
  EXPECT_DOUBLE_EQ(h.head_top.y, 20);
  EXPECT_DOUBLE_EQ(h.head_top.score, 0.7);
  p.keypoints[5].annotated = false;
  EXPECT_FALSE(interpolate_head(p).head_top.annotated);
}

TEST(Fusion, SelectFillsHeadFromNoseAndShoulders) {
  Rng rng(2);
  BranchOutputs b;
  b.add(random_branch(rng, "coco"));
  const auto& pt = builtin_joint_set("posetrack");
  const auto out = fuse_select(b, "coco", pt);
  const auto decoded = decode(b.at("coco"));
  const auto head = interpolate_head(decoded);
  EXPECT_EQ(out.keypoints[*pt.index_of("head_top")], head.head_top);
  EXPECT_EQ(out.keypoints[*pt.index_of("head_bottom")], head.head_bottom);
  EXPECT_EQ(out.keypoints[*pt.index_of("left_knee")], decoded.keypoints[13]);
}

TEST(Fusion, VoteOfIdenticalBranchesEqualsDecode) {
  Rng rng(3);
  JointSetRegistry reg;
  const auto& coco = builtin_joint_set("coco");
  for (const char* name : {"coco_a", "coco_b", "coco_c"}) reg.add(JointSet{name, coco.joints, coco.flip_pairs});
  for (int t = 0; t < 20; ++t) {
    const Heatmap base = random_branch(rng, "coco");
    BranchOutputs b;
    for (const char* name : {"coco_a", "coco_b", "coco_c"}) {
      Heatmap h = base;
      h.set_joint_set(name);
      b.add(h);
    }
    EXPECT_EQ(fuse_vote(b, coco, {}, reg).keypoints, decode(base).keypoints);
  }
}

TEST(Fusion, VoteAveragesOnlyBranchesWithTheJoint) {
  Rng rng(4);
  BranchOutputs b;
  b.add(random_branch(rng, "coco"));
  b.add(random_branch(rng, "mpii"));
  const auto& pt = builtin_joint_set("posetrack");
  const auto out = fuse_vote(b, pt);
  // head_top and head_bottom exist only in mpii, so the vote is mpii's decode.
  const auto mpii = decode(b.at("mpii"));
  const auto& ms = builtin_joint_set("mpii");
  EXPECT_EQ(out.keypoints[*pt.index_of("head_top")], mpii.keypoints[*ms.index_of("head_top")]);
  EXPECT_EQ(out.keypoints[*pt.index_of("head_bottom")], mpii.keypoints[*ms.index_of("upper_neck")]);
}

TEST(Fusion, HeadSwapTouchesOnlyHeadJoints) {
  Rng rng(5);
  const auto& pt = builtin_joint_set("posetrack");
  const auto& ms = builtin_joint_set("mpii");
  for (int t = 0; t < 20; ++t) {
    BranchOutputs b;
    b.add(random_branch(rng, "coco"));
    b.add(random_branch(rng, "mpii"));
    const auto swap = fuse_head_swap(b, "coco", "mpii", pt);
    const auto body = fuse_select(b, "coco", pt);
    const auto head = decode(b.at("mpii"));
    for (std::size_t j = 0; j < pt.count(); ++j) {
      const std::string& name = pt.joints[j];
      if (name == "head_top" || name == "head_bottom") {
        EXPECT_EQ(swap.keypoints[j], head.keypoints[*ms.index_of(name)]);
      } else {
        EXPECT_EQ(swap.keypoints[j], body.keypoints[j]) << name;
      }
    }
  }
  BranchOutputs only_coco;
  only_coco.add(random_branch(rng, "coco"));
  EXPECT_THROW(fuse_head_swap(only_coco, "coco", "mpii", pt), Error);
  EXPECT_THROW(fuse_head_swap(only_coco, "mpii", "coco", pt), Error);
}

TEST(Fusion, DispatchMatchesDirectCalls) {
  Rng rng(6);
  BranchOutputs b;
  b.add(random_branch(rng, "coco"));
  b.add(random_branch(rng, "mpii"));
  const auto& pt = builtin_joint_set("posetrack");
  EXPECT_EQ(fuse(b, FusionStrategy::parse("vote"), pt), fuse_vote(b, pt));
  EXPECT_EQ(fuse(b, FusionStrategy::parse("select:mpii"), pt), fuse_select(b, "mpii", pt));
  EXPECT_EQ(fuse(b, FusionStrategy{}, pt), fuse_head_swap(b, "coco", "mpii", pt));
}

}  // namespace
}  // namespace mdpn
