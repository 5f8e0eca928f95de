#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdpn/config.hpp"
#include "mdpn/fusion.hpp"
#include "mdpn/heatmap.hpp"
#include "mdpn/pose_io.hpp"

namespace mdpn {

// Network outputs for one detected person.
struct CropInput {
  Box box;
  double box_score = 0.0;
  BranchOutputs branches;
  // Heatmaps predicted on the mirrored crop, keyed by branch.
  std::map<std::string, Heatmap, std::less<>> flipped;
};

struct FrameInput {
  int frame_index = 0;
  std::vector<CropInput> crops;
};

// Manifest: {"frames": [{"frame_index": i, "instances": [
//     {"box": [x, y, w, h], "box_score": s,
//      "heatmaps": {"<branch>": "file.pkhm", ...},
//      "flipped": {"<branch>": "file.pkhm", ...}}]}]}
// Paths are relative to the manifest. Errors name the file and frame.
std::vector<FrameInput> load_manifest(const std::filesystem::path& manifest);

struct PipelineResult {
  PoseFile poses;
  // One entry per stage, in execution order.
  std::vector<nlohmann::json> log;
};

// decode -> fuse -> rescore -> thresholds -> OKS-NMS -> track (-> prune),
// always in this order; disabled stages pass instances through.
PipelineResult run_pipeline(const PipelineConfig& config, std::span<const FrameInput> frames,
                            const JointSetRegistry& registry = default_registry());

}  // namespace mdpn
