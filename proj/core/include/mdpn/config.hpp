#pragma once

#include <cstddef>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "mdpn/fusion.hpp"
#include "mdpn/metrics.hpp"
#include "mdpn/suppression.hpp"
#include "mdpn/tracker.hpp"

namespace mdpn {

// Post-processing switches, one per ablation row of the pipeline.
struct StageFlags {
  bool gaussian_filter = true;
  bool quarter_offset = true;
  bool box_threshold = true;
  bool oks_nms = true;
  bool box_rescore = true;
  bool keypoint_threshold = true;
  bool tracklet_pruning = true;
  // Off = identity propagation (last pose, unmoved).
  bool flow_track = true;

  friend bool operator==(const StageFlags&, const StageFlags&) = default;
};

struct PipelineConfig {
  StageFlags stages;
  // Average in the flipped-crop heatmaps when a manifest provides them.
  bool flip_test = true;
  bool tracking = true;

  // decode
  double smooth_sigma = 1.0;
  // Gaussian target sigma in input pixels, used when rendering heatmaps.
  double render_sigma = 9.0;

  // fusion
  FusionStrategy fusion;
  std::string target_set = "posetrack";
  HeadInterpolation head;

  // scoring and suppression
  double box_threshold = 0.4;
  double keypoint_threshold = 0.3;
  double oks_nms_threshold = 0.4;
  double box_nms_threshold = 0.6;
  OksConstants oks;

  // tracking
  Matcher matcher = Matcher::kHungarian;
  double similarity_threshold = 0.3;
  int lookback = 8;
  std::size_t min_track_length = 2;

  EvalConfig metrics;

  DecodeOptions decode_options() const;
  FusionOptions fusion_options() const;
  TrackerConfig tracker_config() const;
};

// Sectioned JSON form:
//   {"stages": {...flags, "flip_test", "tracking"},
//    "decode": {"smooth_sigma"}, "render": {"sigma"},
//    "fusion": {"strategy", "target", "head_bottom_ratio", "head_top_ratio"},
//    "scoring": {"box_threshold", "keypoint_threshold", "oks_nms_threshold",
//                "box_nms_threshold", "oks_k": {joint: k}},
//    "tracking": {"matcher", "similarity_threshold", "lookback", "min_len"},
//    "metrics": {"pckh_threshold", "head_size_factor"}}
// Missing keys keep their defaults; unknown keys are a ParseError.
PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineConfig& c);

}  // namespace mdpn
