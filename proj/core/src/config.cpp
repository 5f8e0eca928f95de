#include "mdpn/config.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

using nlohmann::json;

// Reads the keys of one section, rejecting anything it does not know.
class Section {
 public:
  Section(const json& parent, std::string name) : name_(std::move(name)) {
    auto it = parent.find(name_);
    if (it == parent.end()) return;
    if (!it->is_object()) fail("must be an object");
    obj_ = &*it;
  }

  template <typename T>
  void read(const char* key, T& value) {
    seen_.push_back(key);
    if (!obj_) return;
    auto it = obj_->find(key);
    if (it == obj_->end()) return;
    try {
      value = it->get<T>();
    } catch (const json::exception&) {
      fail(std::string("bad value for '") + key + "'");
    }
  }

  const json* child(const char* key) {
    seen_.push_back(key);
    if (!obj_) return nullptr;
    auto it = obj_->find(key);
    return it == obj_->end() ? nullptr : &*it;
  }

  void done() const {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) fail("unknown key '" + key + "'");
    }
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("config section '" + name_ + "': " + what);
  }

 private:
  std::string name_;
  const json* obj_ = nullptr;
  std::vector<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ParseError("config: " + what);
}

std::string matcher_name(Matcher m) { return m == Matcher::kGreedy ? "greedy" : "hungarian"; }

}  // namespace

DecodeOptions PipelineConfig::decode_options() const {
  return DecodeOptions{stages.gaussian_filter ? smooth_sigma : 0.0, stages.quarter_offset};
}

FusionOptions PipelineConfig::fusion_options() const { return FusionOptions{decode_options(), head}; }

TrackerConfig PipelineConfig::tracker_config() const {
  TrackerConfig t;
  t.similarity_threshold = similarity_threshold;
  t.lookback = lookback;
  t.matcher = matcher;
  t.propagator = stages.flow_track ? PropagatorKind::kVelocity : PropagatorKind::kIdentity;
  t.oks = oks;
  return t;
}

PipelineConfig pipeline_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config must be a JSON object");
  static const std::vector<std::string> sections = {"stages",  "decode",  "render", "fusion",
                                                    "scoring", "tracking", "metrics"};
  for (const auto& [key, value] : j.items()) {
    require(std::find(sections.begin(), sections.end(), key) != sections.end(),
            "unknown section '" + key + "'");
  }
  PipelineConfig c;

  Section st(j, "stages");
  st.read("gaussian_filter", c.stages.gaussian_filter);
  st.read("quarter_offset", c.stages.quarter_offset);
  st.read("box_threshold", c.stages.box_threshold);
  st.read("oks_nms", c.stages.oks_nms);
  st.read("box_rescore", c.stages.box_rescore);
  st.read("keypoint_threshold", c.stages.keypoint_threshold);
  st.read("tracklet_pruning", c.stages.tracklet_pruning);
  st.read("flow_track", c.stages.flow_track);
  st.read("flip_test", c.flip_test);
  st.read("tracking", c.tracking);
  st.done();

  Section dec(j, "decode");
  dec.read("smooth_sigma", c.smooth_sigma);
  dec.done();
  require(c.smooth_sigma >= 0.0, "smooth_sigma must be >= 0");

  Section ren(j, "render");
  ren.read("sigma", c.render_sigma);
  ren.done();
  require(c.render_sigma > 0.0, "render sigma must be > 0");

  Section fu(j, "fusion");
  std::string strategy = c.fusion.to_string();
  fu.read("strategy", strategy);
  fu.read("target", c.target_set);
  fu.read("head_bottom_ratio", c.head.bottom_ratio);
  fu.read("head_top_ratio", c.head.top_ratio);
  fu.done();
  try {
    c.fusion = FusionStrategy::parse(strategy);
    builtin_joint_set(c.target_set);
  } catch (const Error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }

  Section sc(j, "scoring");
  sc.read("box_threshold", c.box_threshold);
  sc.read("keypoint_threshold", c.keypoint_threshold);
  sc.read("oks_nms_threshold", c.oks_nms_threshold);
  sc.read("box_nms_threshold", c.box_nms_threshold);
  if (const json* k = sc.child("oks_k")) {
    if (!k->is_object()) sc.fail("oks_k must map joint names to constants");
    for (const auto& [joint, value] : k->items()) {
      if (!value.is_number()) sc.fail("oks_k values must be numbers");
      try {
        c.oks.set(joint, value.get<double>());
      } catch (const Error& e) {
        sc.fail(e.what());
      }
    }
  }
  sc.done();
  require(c.oks_nms_threshold > 0.0 && c.oks_nms_threshold <= 1.0, "oks_nms_threshold must lie in (0, 1]");
  require(c.box_nms_threshold > 0.0 && c.box_nms_threshold <= 1.0, "box_nms_threshold must lie in (0, 1]");

  Section tr(j, "tracking");
  std::string matcher = matcher_name(c.matcher);
  tr.read("matcher", matcher);
  tr.read("similarity_threshold", c.similarity_threshold);
  tr.read("lookback", c.lookback);
  tr.read("min_len", c.min_track_length);
  tr.done();
  if (matcher == "hungarian") {
    c.matcher = Matcher::kHungarian;
  } else if (matcher == "greedy") {
    c.matcher = Matcher::kGreedy;
  } else {
    tr.fail("matcher must be 'hungarian' or 'greedy'");
  }
  require(c.lookback >= 1, "lookback must be >= 1");
  require(c.min_track_length >= 1, "min_len must be >= 1");

  Section me(j, "metrics");
  me.read("pckh_threshold", c.metrics.pckh_threshold);
  me.read("head_size_factor", c.metrics.head_size_factor);
  me.done();
  require(c.metrics.pckh_threshold > 0.0, "pckh_threshold must be > 0");
  require(c.metrics.head_size_factor > 0.0, "head_size_factor must be > 0");
  return c;
}

json to_json(const PipelineConfig& c) {
  return {{"stages",
           {{"gaussian_filter", c.stages.gaussian_filter},
            {"quarter_offset", c.stages.quarter_offset},
            {"box_threshold", c.stages.box_threshold},
            {"oks_nms", c.stages.oks_nms},
            {"box_rescore", c.stages.box_rescore},
            {"keypoint_threshold", c.stages.keypoint_threshold},
            {"tracklet_pruning", c.stages.tracklet_pruning},
            {"flow_track", c.stages.flow_track},
            {"flip_test", c.flip_test},
            {"tracking", c.tracking}}},
          {"decode", {{"smooth_sigma", c.smooth_sigma}}},
          {"render", {{"sigma", c.render_sigma}}},
          {"fusion",
           {{"strategy", c.fusion.to_string()},
            {"target", c.target_set},
            {"head_bottom_ratio", c.head.bottom_ratio},
            {"head_top_ratio", c.head.top_ratio}}},
          {"scoring",
           {{"box_threshold", c.box_threshold},
            {"keypoint_threshold", c.keypoint_threshold},
            {"oks_nms_threshold", c.oks_nms_threshold},
            {"box_nms_threshold", c.box_nms_threshold},
            {"oks_k", c.oks.values()}}},
          {"tracking",
           {{"matcher", matcher_name(c.matcher)},
            {"similarity_threshold", c.similarity_threshold},
            {"lookback", c.lookback},
            {"min_len", c.min_track_length}}},
          {"metrics",
           {{"pckh_threshold", c.metrics.pckh_threshold},
            {"head_size_factor", c.metrics.head_size_factor}}}};
}

}  // namespace mdpn
