#include <gtest/gtest.h>

#include "mdpn/error.hpp"
#include "mdpn/pose_io.hpp"

namespace mdpn {
namespace {

std::string keypoints_json(std::size_t k, double base = 1.0) {
  std::string s = "[";
  for (std::size_t i = 0; i < k; ++i) {
    if (i) s += ",";
    s += std::to_string(base + i) + ",2.5,0.5";
  }
  return s + "]";
}

std::string pose_doc(const std::string& frames) {
  return R"({"joint_set":"posetrack","frames":[)" + frames + "]}";
}

std::string instance(std::size_t k = 15, const std::string& extra = "") {
  return R"({"box":[0,0,10,20],"box_score":0.9,"keypoints":)" + keypoints_json(k) + extra + "}";
}

std::string frame(int i, const std::string& instances) {
  return R"({"frame_index":)" + std::to_string(i) + R"(,"instances":[)" + instances + "]}";
}

TEST(PoseIo, ParsesWithDefaults) {
  const auto f = parse_pose_file(pose_doc(frame(0, instance()) + "," + frame(3, "")));
  ASSERT_EQ(f.frames.size(), 2u);
  EXPECT_EQ(f.frames[1].frame_index, 3);
  const auto& p = f.frames[0].instances[0];
  EXPECT_EQ(p.keypoints.size(), 15u);
  EXPECT_TRUE(p.keypoints[14].annotated);
  EXPECT_DOUBLE_EQ(p.score, 0.9);
  EXPECT_FALSE(p.track_id);
  EXPECT_EQ(p.joint_set, "posetrack");
}

TEST(PoseIo, CanonicalRoundTripIsByteExact) {
  const auto f = parse_pose_file(pose_doc(
      frame(0, instance(15, R"(,"track_id":4,"score":0.25,"area":1234.5)")) + "," +
      frame(1, instance(15, R"(,"annotated":[1,0,1,1,1,1,1,1,1,1,1,1,1,1,0])"))));
  const std::string canonical = emit_pose_file(f);
  EXPECT_EQ(canonical.back(), '\n');
  EXPECT_EQ(emit_pose_file(parse_pose_file(canonical)), canonical);
  EXPECT_EQ(parse_pose_file(canonical), f);
}

TEST(PoseIo, RejectsSchemaViolations) {
  auto expect_error = [](const std::string& text, std::optional<int> frame_no) {
    try {
      parse_pose_file(text, "p.json");
      FAIL() << "accepted: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.file(), "p.json");
      EXPECT_EQ(e.frame(), frame_no) << e.what();
    }
  };
  expect_error("{", std::nullopt);
  expect_error(R"({"joint_set":"h36m","frames":[]})", std::nullopt);
  expect_error(pose_doc(frame(0, instance(14))), 0);
  expect_error(pose_doc(frame(2, instance()) + "," + frame(2, instance())), 2);
  expect_error(pose_doc(frame(0, instance()) + "," + frame(5, instance(15, R"(,"colour":1)"))), 5);
  expect_error(pose_doc(frame(1, instance(15, R"(,"annotated":[1,0])"))), 1);
  expect_error(pose_doc(frame(1, R"({"box":[0,0,1],"box_score":1,"keypoints":[]})")), 1);
  expect_error(R"({"joint_set":"posetrack","frames":[],"extra":0})", std::nullopt);
}

TEST(PoseIo, GroundTruthHeadSize) {
  const std::string text = R"({"joint_set":"posetrack","frames":[{"frame_index":0,"people":[
      {"person_id":1,"head_box":[0,0,30,40],"keypoints":)" + keypoints_json(15) + R"(},
      {"person_id":2,"head_size":7,"keypoints":)" + keypoints_json(15) + R"(}]}]})";
  const auto gt = parse_gt_file(text);
  ASSERT_EQ(gt.frames[0].people.size(), 2u);
  EXPECT_DOUBLE_EQ(gt.frames[0].people[0].head_size, 30.0);
  EXPECT_DOUBLE_EQ(gt.frames[0].people[1].head_size, 7.0);
  EXPECT_DOUBLE_EQ(parse_gt_file(text, "", 1.0).frames[0].people[0].head_size, 50.0);
  const std::string again = emit_gt_file(gt);
  EXPECT_EQ(emit_gt_file(parse_gt_file(again)), again);

  const std::string dup = R"({"joint_set":"posetrack","frames":[{"frame_index":0,"people":[
      {"person_id":1,"head_size":3,"keypoints":)" + keypoints_json(15) + R"(},
      {"person_id":1,"head_size":3,"keypoints":)" + keypoints_json(15) + R"(}]}]})";
  EXPECT_THROW(parse_gt_file(dup), ParseError);
  const std::string no_head = R"({"joint_set":"posetrack","frames":[{"frame_index":0,"people":[
      {"person_id":1,"keypoints":)" + keypoints_json(15) + R"(}]}]})";
  EXPECT_THROW(parse_gt_file(no_head), ParseError);
}

TEST(PoseIo, BoxFileRoundTrip) {
  const std::string text =
      R"({"frames":[{"frame_index":0,"boxes":[{"box":[1,2,3,4],"score":0.5}]},{"frame_index":4,"boxes":[]}]})";
  const auto b = parse_box_file(text);
  ASSERT_EQ(b.frames.size(), 2u);
  EXPECT_EQ(b.frames[0].boxes[0], (ScoredBox{{1, 2, 3, 4}, 0.5}));
  EXPECT_EQ(parse_box_file(emit_box_file(b)), b);
  EXPECT_THROW(parse_box_file(R"({"frames":[{"frame_index":0,"boxes":[{"box":[1,2,3,4]}]}]})"),
               ParseError);
}

TEST(PoseIo, MissingFileIsParseError) {
  try {
    read_pose_file("/nonexistent/poses.json");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.file(), "/nonexistent/poses.json");
  }
}

}  // namespace
}  // namespace mdpn
