#include "mdpn/pipeline.hpp"

#include <limits>
#include <optional>
#include <set>

#include "mdpn/error.hpp"
#include "mdpn/heatmap_io.hpp"
#include "mdpn/suppression.hpp"
#include "mdpn/tracker.hpp"

namespace mdpn {
namespace {

using nlohmann::json;

std::size_t count_instances(const std::vector<PredictionFrame>& frames) {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.instances.size();
  return n;
}

std::size_t count_joints(const std::vector<PredictionFrame>& frames) {
  std::size_t n = 0;
  for (const auto& f : frames) {
    for (const auto& p : f.instances) n += p.annotated_count();
  }
  return n;
}

}  // namespace

std::vector<FrameInput> load_manifest(const std::filesystem::path& manifest) {
  const std::string file = manifest.string();
  std::optional<int> frame;
  auto fail = [&](const std::string& detail) -> ParseError { return ParseError(detail, file, frame); };

  json doc;
  try {
    doc = json::parse(binary::read_file(manifest));
  } catch (const json::exception& e) {
    throw fail(std::string("invalid JSON: ") + e.what());
  } catch (const ParseError& e) {
    throw e.with_file(file);
  }
  const auto base = manifest.parent_path();
  std::vector<FrameInput> out;
  try {
    for (const auto& f : doc.at("frames")) {
      frame.reset();
      FrameInput in;
      in.frame_index = f.at("frame_index").get<int>();
      frame = in.frame_index;
      if (!out.empty() && in.frame_index <= out.back().frame_index) {
        throw fail("frame indices must increase strictly");
      }
      for (const auto& inst : f.at("instances")) {
        CropInput crop;
        const auto& b = inst.at("box");
        if (!b.is_array() || b.size() != 4) throw fail("box must be [x, y, w, h]");
        crop.box = Box{b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
        crop.box_score = inst.at("box_score").get<double>();
        auto load = [&](const json& path) {
          const auto p = base / path.get<std::string>();
          try {
            return read_heatmap_file(p);
          } catch (const ParseError& e) {
            throw ParseError(e.detail(), e.file(), frame);
          }
        };
        for (const auto& [branch, path] : inst.at("heatmaps").items()) {
          Heatmap h = load(path);
          if (h.joint_set() != branch) {
            throw fail("heatmap for branch '" + branch + "' is tagged '" + h.joint_set() + "'");
          }
          crop.branches.add(std::move(h));
        }
        if (inst.contains("flipped")) {
          for (const auto& [branch, path] : inst.at("flipped").items()) {
            if (!crop.branches.contains(branch)) throw fail("flipped heatmap for unknown branch '" + branch + "'");
            crop.flipped.emplace(branch, load(path));
          }
        }
        in.crops.push_back(std::move(crop));
      }
      out.push_back(std::move(in));
    }
  } catch (const json::exception& e) {
    throw fail(std::string("manifest: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw fail(e.what());
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config, std::span<const FrameInput> frames,
                            const JointSetRegistry& registry) {
  PipelineResult result;
  const JointSet& target = registry.get(config.target_set);
  const FusionOptions fusion = config.fusion_options();
  result.poses.joint_set = target.name;
  auto& out = result.poses.frames;
  auto log = [&](const char* stage, bool enabled) {
    result.log.push_back({{"stage", stage},
                          {"enabled", enabled},
                          {"instances", count_instances(out)},
                          {"joints", count_joints(out)}});
  };

  // decode + fuse
  for (const auto& f : frames) {
    PredictionFrame pf;
    pf.frame_index = f.frame_index;
    for (const auto& crop : f.crops) {
      BranchOutputs branches;
      for (const auto& [name, h] : crop.branches.branches()) {
        auto flipped = crop.flipped.find(name);
        if (config.flip_test && flipped != crop.flipped.end()) {
          branches.add(flip_merge(h, flipped->second, registry.get(name).flip_pairs));
        } else {
          branches.add(h);
        }
      }
      const DecodedPose pose = fuse(branches, config.fusion, target, fusion, registry);
      PersonInstance p;
      p.box = crop.box;
      p.box_score = crop.box_score;
      p.score = crop.box_score;
      p.joint_set = target.name;
      p.keypoints = pose.keypoints;
      pf.instances.push_back(std::move(p));
    }
    out.push_back(std::move(pf));
  }
  log("decode", true);
  log("fuse", true);

  if (config.stages.box_rescore) {
    for (auto& f : out) {
      for (auto& p : f.instances) p = rescore(p);
    }
  }
  log("rescore", config.stages.box_rescore);

  {
    // Scores are never negative, so a zero threshold keeps everything.
    const double box_thr = config.stages.box_threshold ? config.box_threshold : 0.0;
    const double kp_thr = config.stages.keypoint_threshold ? config.keypoint_threshold : 0.0;
    for (auto& f : out) f.instances = apply_thresholds(std::move(f.instances), box_thr, kp_thr);
  }
  log("thresholds", config.stages.box_threshold || config.stages.keypoint_threshold);

  if (config.stages.oks_nms) {
    for (auto& f : out) {
      const auto keep = oks_nms(f.instances, config.oks_nms_threshold, config.oks, registry);
      std::vector<PersonInstance> kept;
      for (std::size_t i : keep) kept.push_back(std::move(f.instances[i]));
      f.instances = std::move(kept);
    }
  }
  log("oks_nms", config.stages.oks_nms);

  if (config.tracking) {
    TrackerState state;
    state.config = config.tracker_config();
    for (auto& f : out) {
      state = step(std::move(state), f.frame_index, f.instances, registry);
      for (std::size_t i = 0; i < f.instances.size(); ++i) f.instances[i].track_id = state.frame_ids[i];
    }
    log("track", true);
    const std::size_t min_len = config.stages.tracklet_pruning ? config.min_track_length : 1;
    std::set<int> kept;
    for (const auto& t : finalize(state, min_len)) kept.insert(t.id);
    for (auto& f : out) {
      std::erase_if(f.instances, [&](const PersonInstance& p) { return !kept.contains(*p.track_id); });
    }
    log("prune", config.stages.tracklet_pruning);
  } else {
    log("track", false);
    log("prune", false);
  }
  return result;
}

}  // namespace mdpn
