#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"
#include "mdpn/pose.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {
namespace {

TEST(Skeleton, BuiltinSizes) {
  EXPECT_EQ(builtin_joint_set("merged").count(), 21u);
  EXPECT_EQ(builtin_joint_set("coco").count(), 17u);
  EXPECT_EQ(builtin_joint_set("mpii").count(), 16u);
  EXPECT_EQ(builtin_joint_set("posetrack").count(), 15u);
  EXPECT_THROW(builtin_joint_set("h36m"), Error);
}

TEST(Skeleton, HeadBottomIsUpperNeck) {
  const auto& pt = builtin_joint_set("posetrack");
  const auto& mpii = builtin_joint_set("mpii");
  ASSERT_TRUE(pt.index_of("upper_neck"));
  EXPECT_EQ(pt.joints[*pt.index_of("upper_neck")], "head_bottom");
  EXPECT_EQ(mpii.joints[*mpii.index_of("head_bottom")], "upper_neck");
  EXPECT_EQ(canonical_joint("head_bottom"), "upper_neck");
  EXPECT_EQ(canonical_joint("nose"), "nose");
}

TEST(Skeleton, EveryBuiltinEmbedsInMerged) {
  const auto& merged = builtin_joint_set("merged");
  for (const auto& name : builtin_joint_set_names()) {
    const auto m = mapping(builtin_joint_set(name), merged);
    EXPECT_EQ(m.index_map.size(), builtin_joint_set(name).count()) << name;
  }
}

TEST(Skeleton, CocoToPosetrackKeepsThirteenJoints) {
  // nose plus twelve limb joints; no head_top or head_bottom in COCO.
  const auto m = mapping("coco", "posetrack");
  EXPECT_EQ(m.index_map.size(), 13u);
  const auto& pt = builtin_joint_set("posetrack");
  for (const auto& [from, to] : m.index_map) {
    EXPECT_NE(pt.joints[to], "head_top");
    EXPECT_NE(pt.joints[to], "head_bottom");
  }
}

TEST(Skeleton, MappingRoundTripIsIdentityOnSharedJoints) {
  for (const auto& a : builtin_joint_set_names()) {
    for (const auto& b : builtin_joint_set_names()) {
      const auto ab = mapping(a, b);
      const auto ba = mapping(b, a);
      for (const auto& [from, to] : ab.index_map) {
        ASSERT_EQ(ba.target_of(to), from) << a << " -> " << b;
      }
    }
  }
}

TEST(Skeleton, FlipPairsAreLeftRight) {
  for (const auto& name : builtin_joint_set_names()) {
    const auto& s = builtin_joint_set(name);
    for (const auto& [l, r] : s.flip_pairs) {
      EXPECT_EQ("left_" + s.joints[l].substr(5), s.joints[l]);
      EXPECT_EQ("right_" + s.joints[l].substr(5), s.joints[r]);
    }
  }
  EXPECT_EQ(builtin_joint_set("coco").flip_pairs.size(), 8u);
  EXPECT_EQ(builtin_joint_set("posetrack").flip_pairs.size(), 6u);
}

TEST(Skeleton, ValidateRejectsBadSets) {
  EXPECT_THROW((JointSet{"x", {"a", "a"}, {}}.validate()), Error);
  EXPECT_THROW((JointSet{"x", {"a", "b"}, {{0, 2}}}.validate()), Error);
  EXPECT_THROW((JointSet{"x", {"a", "b", "c"}, {{0, 1}, {1, 2}}}.validate()), Error);
  EXPECT_NO_THROW((JointSet{"x", {"a", "b"}, {{0, 1}}}.validate()));
}

TEST(Skeleton, RegistryRejectsBuiltinOverride) {
  JointSetRegistry reg;
  EXPECT_THROW(reg.add(JointSet{"coco", {"nose"}, {}}), Error);
  reg.add(JointSet{"tiny", {"nose", "left_eye", "right_eye"}, {{1, 2}}});
  EXPECT_TRUE(reg.contains("tiny"));
  EXPECT_EQ(reg.get("tiny").count(), 3u);
  EXPECT_THROW(reg.get("nope"), Error);
}

TEST(Skeleton, JsonRoundTrip) {
  const auto& s = builtin_joint_set("mpii");
  const nlohmann::json j = s;
  EXPECT_EQ(j.get<JointSet>(), s);
}

TEST(Skeleton, ProjectMarksUnmappedJointsMissing) {
  PersonInstance p;
  p.joint_set = "coco";
  for (std::size_t i = 0; i < 17; ++i) p.keypoints.push_back({double(i), double(i), 0.5, true});
  const auto out = project(p, mapping("coco", "posetrack"));
  const auto& pt = builtin_joint_set("posetrack");
  EXPECT_EQ(out.joint_set, "posetrack");
  ASSERT_EQ(out.keypoints.size(), 15u);
  EXPECT_FALSE(out.keypoints[*pt.index_of("head_top")].annotated);
  EXPECT_TRUE(out.keypoints[*pt.index_of("nose")].annotated);
  EXPECT_EQ(out.keypoints[*pt.index_of("left_wrist")].x, 9.0);

  p.joint_set = "mpii";
  EXPECT_THROW(project(p, mapping("coco", "posetrack")), Error);
}

}  // namespace
}  // namespace mdpn
