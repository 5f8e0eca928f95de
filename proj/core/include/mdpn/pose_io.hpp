#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mdpn/metrics.hpp"
#include "mdpn/pose.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {

// Per-sequence pose document:
//   {"joint_set": name,
//    "frames": [{"frame_index": i,
//                "instances": [{"box": [x, y, w, h], "box_score": s, "score": s,
//                               "keypoints": [x, y, score] * K,
//                               "annotated": [0|1] * K,
//                               "track_id": id?, "area": a?}]}]}
// Frame indices must increase strictly. "annotated" may be omitted on input
// (every joint annotated); "score" defaults to box_score.
struct PoseFile {
  std::string joint_set;
  std::vector<PredictionFrame> frames;

  friend bool operator==(const PoseFile&, const PoseFile&) = default;
};

// Ground truth: same layout with "people" instead of "instances"; each
// person has "person_id" and either "head_size" or "head_box" [x, y, w, h]
// (head_size = factor * diagonal). "box", "box_score", "score" optional.
struct GroundTruthFile {
  std::string joint_set;
  std::vector<GroundTruthFrame> frames;
};

// Detector boxes: {"frames": [{"frame_index": i,
//                              "boxes": [{"box": [x, y, w, h], "score": s}]}]}.
struct ScoredBox {
  Box box;
  double score = 0.0;

  friend bool operator==(const ScoredBox&, const ScoredBox&) = default;
};

struct BoxFrame {
  int frame_index = 0;
  std::vector<ScoredBox> boxes;

  friend bool operator==(const BoxFrame&, const BoxFrame&) = default;
};

struct BoxFile {
  std::vector<BoxFrame> frames;

  friend bool operator==(const BoxFile&, const BoxFile&) = default;
};

// Parsers throw ParseError naming the file (when given) and frame.
PoseFile parse_pose_file(std::string_view text, std::string_view file = {},
                         const JointSetRegistry& registry = default_registry());
GroundTruthFile parse_gt_file(std::string_view text, std::string_view file = {},
                              double head_size_factor = 0.6,
                              const JointSetRegistry& registry = default_registry());
BoxFile parse_box_file(std::string_view text, std::string_view file = {});

// Canonical emission: compact JSON with sorted keys and a trailing newline.
// emit(parse(x)) == x for canonical x.
std::string emit_pose_file(const PoseFile& f);
std::string emit_gt_file(const GroundTruthFile& f);
std::string emit_box_file(const BoxFile& f);

PoseFile read_pose_file(const std::filesystem::path& path,
                        const JointSetRegistry& registry = default_registry());
GroundTruthFile read_gt_file(const std::filesystem::path& path, double head_size_factor = 0.6,
                             const JointSetRegistry& registry = default_registry());
BoxFile read_box_file(const std::filesystem::path& path);

}  // namespace mdpn
