#include <filesystem>

#include <gtest/gtest.h>

#include "mdpn/error.hpp"
#include "mdpn/heatmap_io.hpp"
#include "mdpn/pipeline.hpp"
#include "mdpn/sequence.hpp"

namespace mdpn {
namespace {

namespace fs = std::filesystem;

const Sequence& golden_sequence() {
  static const Sequence s = make_sequence();
  return s;
}

PipelineConfig everything_off() {
  PipelineConfig c;
  c.stages = StageFlags{false, false, false, false, false, false, false, false};
  c.flip_test = false;
  c.tracking = false;
  return c;
}

std::size_t instance_count(const PoseFile& f) {
  std::size_t n = 0;
  for (const auto& fr : f.frames) n += fr.instances.size();
  return n;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mdpn_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(Pipeline, GoldenSequenceMatchesCommittedOutput) {
  const fs::path dir = scratch("golden");
  write_sequence(golden_sequence(), dir);
  const auto frames = load_manifest(dir / "manifest.json");
  const std::string out = emit_pose_file(run_pipeline(PipelineConfig{}, frames).poses);
  const std::string golden = binary::read_file(fs::path(MDPN_TEST_DATA_DIR) / "golden_poses.json");
  EXPECT_EQ(out, golden);
  // Reading the heatmaps back from disk loses nothing.
  EXPECT_EQ(emit_pose_file(run_pipeline(PipelineConfig{}, golden_sequence().frames).poses), out);
  fs::remove_all(dir);
}

TEST(Pipeline, StageOrderIsFixedAndLogged) {
  const auto r = run_pipeline(PipelineConfig{}, golden_sequence().frames);
  std::vector<std::string> stages;
  for (const auto& e : r.log) stages.push_back(e.at("stage"));
  EXPECT_EQ(stages, (std::vector<std::string>{"decode", "fuse", "rescore", "thresholds", "oks_nms",
                                              "track", "prune"}));
  for (const auto& e : run_pipeline(everything_off(), golden_sequence().frames).log) {
    if (e.at("stage") != "decode" && e.at("stage") != "fuse") EXPECT_FALSE(e.at("enabled"));
  }
}

TEST(Pipeline, DecodeOnlyKeepsEveryCrop) {
  const auto& seq = golden_sequence();
  const auto r = run_pipeline(everything_off(), seq.frames);
  std::size_t crops = 0;
  for (const auto& f : seq.frames) crops += f.crops.size();
  EXPECT_EQ(instance_count(r.poses), crops);
  for (const auto& f : r.poses.frames) {
    for (const auto& p : f.instances) {
      EXPECT_FALSE(p.track_id);
      EXPECT_DOUBLE_EQ(p.score, p.box_score);
    }
  }
}

TEST(Pipeline, DisablingOksNmsDoublesDuplicatedCrops) {
  std::vector<FrameInput> frames;
  for (const auto& f : golden_sequence().frames) {
    if (f.frame_index != 0) continue;
    FrameInput twice = f;
    for (const auto& c : f.crops) twice.crops.push_back(c);
    frames.push_back(twice);
  }
  PipelineConfig on;
  on.tracking = false;
  PipelineConfig off = on;
  off.stages.oks_nms = false;
  const std::size_t kept = instance_count(run_pipeline(on, frames).poses);
  EXPECT_EQ(instance_count(run_pipeline(off, frames).poses), 2 * kept);
}

TEST(Pipeline, RerunIsByteIdentical) {
  const auto& frames = golden_sequence().frames;
  EXPECT_EQ(emit_pose_file(run_pipeline(PipelineConfig{}, frames).poses),
            emit_pose_file(run_pipeline(PipelineConfig{}, frames).poses));
}

TEST(Pipeline, TrackIdsAreAssignedAndPruned) {
  const auto r = run_pipeline(PipelineConfig{}, golden_sequence().frames);
  std::map<int, int> lengths;
  for (const auto& f : r.poses.frames) {
    for (const auto& p : f.instances) {
      ASSERT_TRUE(p.track_id);
      ++lengths[*p.track_id];
    }
  }
  for (const auto& [id, n] : lengths) EXPECT_GE(n, 2) << "track " << id;
}

TEST(Manifest, ErrorsNameFileAndFrame) {
  const fs::path dir = scratch("manifest");
  fs::create_directories(dir / "heatmaps");
  Heatmap h(17, 8, 6, "coco");
  write_heatmap_file(dir / "heatmaps" / "a.pkhm", h);
  binary::write_file(dir / "heatmaps" / "bad.pkhm", serialize_heatmap(h).substr(0, 40));
  auto manifest = [&](const std::string& branch, const std::string& file) {
    binary::write_file(dir / "manifest.json",
                       R"({"frames":[{"frame_index":0,"instances":[]},{"frame_index":3,"instances":[
                          {"box":[0,0,6,8],"box_score":0.9,"heatmaps":{")" +
                           branch + R"(":"heatmaps/)" + file + R"("}}]}]})");
  };
  auto expect_error = [&](const std::string& needle, const std::string& file) {
    try {
      load_manifest(dir / "manifest.json");
      FAIL() << "accepted";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.frame(), 3);
      EXPECT_NE(e.file().find(file), std::string::npos) << e.file();
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  manifest("coco", "a.pkhm");
  EXPECT_EQ(load_manifest(dir / "manifest.json").size(), 2u);
  manifest("coco", "bad.pkhm");
  expect_error("truncated", "bad.pkhm");
  manifest("mpii", "a.pkhm");
  expect_error("mpii", "manifest.json");
  manifest("coco", "missing.pkhm");
  expect_error("cannot open", "missing.pkhm");
  fs::remove_all(dir);
}

TEST(Sequence, GroundTruthCoversBothPeople) {
  const auto& seq = golden_sequence();
  EXPECT_EQ(seq.frames.size(), 10u);
  EXPECT_EQ(seq.ground_truth.frames.size(), 10u);
  for (const auto& f : seq.ground_truth.frames) EXPECT_EQ(f.people.size(), 2u);
  EXPECT_EQ(seq.frames[4].crops.size(), 3u);  // person 0, its duplicate, person 1
  EXPECT_GT(seq.boxes.frames[0].boxes.size(), seq.frames[0].crops.size());
}

}  // namespace
}  // namespace mdpn
