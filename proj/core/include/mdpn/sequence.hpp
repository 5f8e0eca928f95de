#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "mdpn/pipeline.hpp"
#include "mdpn/pose_io.hpp"

namespace mdpn {

// A short synthetic video of two people walking in opposite directions,
// rendered as per-branch network heatmaps. It also contains the cases the
// post-processing stages exist for:
//  - frame 2: a low-scoring false detection (box threshold),
//  - frame 4: a shifted duplicate detection of person 0 (OKS-NMS),
//  - frames 3-6: person 1's left arm occluded, with weak heatmap peaks and
//    no ground truth (keypoint threshold),
//  - frame 6: a confident one-frame ghost person (track-let pruning).
struct SequenceOptions {
  int frames = 10;
  std::uint64_t seed = 7;
  std::size_t heatmap_height = 64;
  std::size_t heatmap_width = 48;
  // Gaussian peak sigma in image pixels.
  double render_sigma = 9.0;
  // Per-pixel heatmap noise.
  double noise = 0.01;
};

struct Sequence {
  std::vector<FrameInput> frames;
  GroundTruthFile ground_truth;
  // Raw detector boxes, including an overlapping double detection.
  BoxFile boxes;
};

Sequence make_sequence(const SequenceOptions& options = {});

// Writes manifest.json, gt.json, boxes.json and heatmaps/*.pkhm (plus
// mirrored-crop heatmaps) into `dir`, creating it if needed.
void write_sequence(const Sequence& sequence, const std::filesystem::path& dir);

}  // namespace mdpn
