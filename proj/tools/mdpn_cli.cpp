// mdpn: command line front end for the pose pipeline.
//
// Every subcommand writes its result to --out (stdout when omitted). On
// failure a single JSON object {"error": {...}} goes to stderr and the exit
// code is nonzero: 1 runtime error, 2 malformed input, 64 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mdpn/config.hpp"
#include "mdpn/error.hpp"
#include "mdpn/fusion.hpp"
#include "mdpn/heatmap_io.hpp"
#include "mdpn/metrics.hpp"
#include "mdpn/pipeline.hpp"
#include "mdpn/pose_io.hpp"
#include "mdpn/sequence.hpp"
#include "mdpn/suppression.hpp"
#include "mdpn/tracker.hpp"
#include "mdpn/trainer.hpp"

namespace {

using nlohmann::json;

void emit(const std::string& out, std::string_view text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    mdpn::binary::write_file(out, text);
  }
}

json read_json(const std::string& path) {
  const std::string text = mdpn::binary::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw mdpn::ParseError(std::string("invalid JSON: ") + e.what(), path);
  }
}

mdpn::Box parse_box_arg(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw mdpn::Error("--box expects x,y,w,h");
    }
  }
  if (v.size() != 4) throw mdpn::Error("--box expects x,y,w,h");
  return {v[0], v[1], v[2], v[3]};
}

mdpn::PoseFile single_pose_file(const mdpn::DecodedPose& pose, const mdpn::Box& box, double box_score,
                                int frame) {
  mdpn::PersonInstance p;
  p.box = box;
  p.box_score = box_score;
  p.score = box_score;
  p.joint_set = pose.joint_set;
  p.keypoints = pose.keypoints;
  mdpn::PoseFile f;
  f.joint_set = pose.joint_set;
  f.frames.push_back({frame, {p}});
  return f;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
  std::string kind = "sequence";
  std::string out;
  int frames = 10;
  std::uint64_t seed = 7;
  double sigma = 9.0;
  std::string domain = "coco";
  std::size_t count = 8;
};

void run_synth(const SynthArgs& a) {
  if (a.out.empty()) throw mdpn::Error("synth needs --out <dir>");
  if (a.kind == "sequence") {
    mdpn::SequenceOptions o;
    o.frames = a.frames;
    o.seed = a.seed;
    o.render_sigma = a.sigma;
    mdpn::write_sequence(mdpn::make_sequence(o), a.out);
    return;
  }
  if (a.kind != "dataset") throw mdpn::Error("synth --kind must be 'sequence' or 'dataset'");
  mdpn::DomainSpec spec;
  spec.name = a.domain;
  for (const auto& d : mdpn::default_domains()) {
    if (d.name == a.domain) spec = d;
  }
  const auto samples = mdpn::gen_synthetic(spec, a.count, a.seed);
  std::filesystem::create_directories(a.out);
  json index = json::array();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    mdpn::Heatmap input(s.input.channels, s.input.height, s.input.width, "input");
    for (std::size_t j = 0; j < s.input.data.size(); ++j) {
      input.values()[j] = static_cast<float>(s.input.data[j]);
    }
    const std::string stem = "sample_" + std::to_string(i);
    mdpn::write_heatmap_file(std::filesystem::path(a.out) / (stem + "_input.pkhm"), input);
    mdpn::write_heatmap_file(std::filesystem::path(a.out) / (stem + "_target.pkhm"), s.target);
    json kps = json::array();
    for (const auto& k : s.keypoints) kps.push_back(k ? json{k->x, k->y} : json(nullptr));
    index.push_back({{"input", stem + "_input.pkhm"},
                     {"target", stem + "_target.pkhm"},
                     {"keypoints", kps},
                     {"mask", s.mask}});
  }
  mdpn::binary::write_file(std::filesystem::path(a.out) / "dataset.json",
                           json{{"domain", a.domain}, {"seed", a.seed}, {"samples", index}}.dump() + "\n");
}

// ---- train-toy -----------------------------------------------------------

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string preset;
  std::string checkpoint;
  std::string log;
  bool print_config = false;
};

void run_train(const TrainArgs& a) {
  mdpn::ToyTrainConfig cfg =
      a.config.empty() ? mdpn::ToyTrainConfig::defaults() : mdpn::toy_train_config_from_json(read_json(a.config));
  if (a.seed) cfg.seed = *a.seed;
  if (!a.preset.empty()) cfg.schedule = mdpn::preset_schedule(a.preset);
  if (a.print_config) {
    emit(a.log, mdpn::to_json(cfg).dump(2) + "\n");
    return;
  }
  const auto data = mdpn::make_datasets(cfg.domains, cfg.seed, cfg.data);
  std::string lines;
  mdpn::TrainOptions o;
  o.features = cfg.features;
  o.seed = cfg.seed;
  o.on_log = [&](const json& entry) {
    if (a.log.empty() || a.log == "-") {
      std::cout << entry.dump() << "\n";
    } else {
      lines += entry.dump() + "\n";
    }
  };
  const auto result = mdpn::train(cfg.schedule, data, o);
  if (!a.log.empty() && a.log != "-") mdpn::binary::write_file(a.log, lines);
  if (!a.checkpoint.empty()) mdpn::binary::write_file(a.checkpoint, mdpn::serialize_checkpoint(result.network));
}

// ---- decode / fuse -------------------------------------------------------

struct DecodeArgs {
  std::string heatmap;
  std::string flipped;
  double smooth_sigma = 1.0;
  bool no_quarter = false;
  std::string box;
  double box_score = 1.0;
  int frame = 0;
  std::string out;
};

void run_decode(const DecodeArgs& a) {
  mdpn::Heatmap h = mdpn::read_heatmap_file(a.heatmap);
  if (!a.flipped.empty()) {
    const auto& set = mdpn::builtin_joint_set(h.joint_set());
    h = mdpn::flip_merge(h, mdpn::read_heatmap_file(a.flipped), set.flip_pairs);
  }
  const auto pose = mdpn::decode(h, {a.smooth_sigma, !a.no_quarter});
  const mdpn::Box box = a.box.empty() ? h.geometry().crop : parse_box_arg(a.box);
  emit(a.out, mdpn::emit_pose_file(single_pose_file(pose, box, a.box_score, a.frame)));
}

struct FuseArgs {
  std::vector<std::string> heatmaps;
  std::string strategy = "head-swap:coco,mpii";
  std::string target = "posetrack";
  double smooth_sigma = 1.0;
  bool no_quarter = false;
  std::string box;
  double box_score = 1.0;
  int frame = 0;
  std::string out;
};

void run_fuse(const FuseArgs& a) {
  mdpn::BranchOutputs b;
  for (const auto& path : a.heatmaps) b.add(mdpn::read_heatmap_file(path));
  if (b.empty()) throw mdpn::Error("fuse needs at least one --heatmap");
  mdpn::FusionOptions o;
  o.decode = {a.smooth_sigma, !a.no_quarter};
  const auto pose = mdpn::fuse(b, mdpn::FusionStrategy::parse(a.strategy),
                               mdpn::builtin_joint_set(a.target), o);
  const mdpn::Box box = a.box.empty() ? b.branches().begin()->second.geometry().crop : parse_box_arg(a.box);
  emit(a.out, mdpn::emit_pose_file(single_pose_file(pose, box, a.box_score, a.frame)));
}

// ---- merge-boxes / nms ---------------------------------------------------

void run_merge_boxes(const std::string& in, double thr, const std::string& out) {
  mdpn::BoxFile f = mdpn::read_box_file(in);
  for (auto& frame : f.frames) {
    std::vector<mdpn::Box> boxes;
    std::vector<double> scores;
    for (const auto& b : frame.boxes) {
      boxes.push_back(b.box);
      scores.push_back(b.score);
    }
    std::vector<mdpn::ScoredBox> kept;
    for (std::size_t i : mdpn::box_nms(boxes, scores, thr)) kept.push_back(frame.boxes[i]);
    frame.boxes = std::move(kept);
  }
  emit(out, mdpn::emit_box_file(f));
}

void run_nms(const std::string& in, double thr, const std::string& out) {
  mdpn::PoseFile f = mdpn::read_pose_file(in);
  const mdpn::OksConstants consts;
  for (auto& frame : f.frames) {
    std::vector<mdpn::PersonInstance> kept;
    for (std::size_t i : mdpn::oks_nms(frame.instances, thr, consts)) kept.push_back(frame.instances[i]);
    frame.instances = std::move(kept);
  }
  emit(out, mdpn::emit_pose_file(f));
}

// ---- track ---------------------------------------------------------------

struct TrackArgs {
  std::string poses;
  std::string matcher = "hungarian";
  std::string propagator = "velocity";
  double sim_thr = 0.3;
  int lookback = 8;
  std::size_t min_len = 2;
  std::string out;
};

void run_track(const TrackArgs& a) {
  mdpn::PoseFile f = mdpn::read_pose_file(a.poses);
  mdpn::TrackerState state;
  state.config.similarity_threshold = a.sim_thr;
  state.config.lookback = a.lookback;
  state.config.matcher = a.matcher == "greedy" ? mdpn::Matcher::kGreedy : mdpn::Matcher::kHungarian;
  state.config.propagator =
      a.propagator == "identity" ? mdpn::PropagatorKind::kIdentity : mdpn::PropagatorKind::kVelocity;
  if (a.min_len < 1) throw mdpn::Error("--min-len must be >= 1");
  for (auto& frame : f.frames) {
    state = mdpn::step(std::move(state), frame.frame_index, frame.instances);
    for (std::size_t i = 0; i < frame.instances.size(); ++i) frame.instances[i].track_id = state.frame_ids[i];
  }
  std::set<int> kept;
  for (const auto& t : mdpn::finalize(state, a.min_len)) kept.insert(t.id);
  for (auto& frame : f.frames) {
    std::erase_if(frame.instances,
                  [&](const mdpn::PersonInstance& p) { return !kept.contains(*p.track_id); });
  }
  emit(a.out, mdpn::emit_pose_file(f));
}

// ---- eval ----------------------------------------------------------------

struct EvalArgs {
  std::string pred;
  std::string gt;
  double pckh = 0.5;
  double head_factor = 0.6;
  std::string format = "text";
  std::string json_out;
  std::string out;
};

void run_eval(const EvalArgs& a, mdpn::TableKind kind) {
  const mdpn::EvalConfig cfg{a.pckh, a.head_factor};
  const mdpn::PoseFile pred = mdpn::read_pose_file(a.pred);
  const mdpn::GroundTruthFile gt = mdpn::read_gt_file(a.gt, a.head_factor);
  if (pred.joint_set != gt.joint_set) {
    throw mdpn::Error("prediction joint set '" + pred.joint_set + "' differs from ground truth '" +
                      gt.joint_set + "'");
  }
  const mdpn::EvalReport report = kind == mdpn::TableKind::kAp
                                      ? mdpn::compute_map(pred.frames, gt.frames, cfg)
                                      : mdpn::compute_mota(pred.frames, gt.frames, cfg);
  json j = report;
  if (!a.json_out.empty()) mdpn::binary::write_file(a.json_out, j.dump(2) + "\n");
  emit(a.out, a.format == "json" ? j.dump(2) + "\n" : mdpn::format_table(report, kind));
}

// ---- run -----------------------------------------------------------------

struct RunArgs {
  std::string manifest;
  std::string config;
  std::vector<std::string> disable;
  std::string out;
  std::string log;
  bool print_config = false;
};

void run_pipeline_cmd(const RunArgs& a) {
  mdpn::PipelineConfig cfg =
      a.config.empty() ? mdpn::PipelineConfig{} : mdpn::pipeline_config_from_json(read_json(a.config));
  for (const auto& flag : a.disable) {
    auto& s = cfg.stages;
    if (flag == "gaussian_filter") s.gaussian_filter = false;
    else if (flag == "quarter_offset") s.quarter_offset = false;
    else if (flag == "box_threshold") s.box_threshold = false;
    else if (flag == "oks_nms") s.oks_nms = false;
    else if (flag == "box_rescore") s.box_rescore = false;
    else if (flag == "keypoint_threshold") s.keypoint_threshold = false;
    else if (flag == "tracklet_pruning") s.tracklet_pruning = false;
    else if (flag == "flow_track") s.flow_track = false;
    else if (flag == "flip_test") cfg.flip_test = false;
    else if (flag == "tracking") cfg.tracking = false;
    else throw mdpn::Error("unknown stage flag '" + flag + "'");
  }
  if (a.print_config) {
    emit(a.out, mdpn::to_json(cfg).dump(2) + "\n");
    return;
  }
  if (a.manifest.empty()) throw mdpn::Error("run needs --manifest");
  const auto frames = mdpn::load_manifest(a.manifest);
  const auto result = mdpn::run_pipeline(cfg, frames);
  if (!a.log.empty()) {
    std::string lines;
    for (const auto& entry : result.log) lines += entry.dump() + "\n";
    emit(a.log, lines);
  }
  emit(a.out, mdpn::emit_pose_file(result.poses));
}

int report(const char* type, const std::string& message, int code,
           const mdpn::ParseError* parse = nullptr) {
  json err = {{"type", type}, {"message", message}};
  if (parse) {
    err["detail"] = parse->detail();
    if (!parse->file().empty()) err["file"] = parse->file();
    if (parse->frame()) err["frame"] = *parse->frame();
  }
  std::cerr << json{{"error", err}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-domain pose estimation and tracking pipeline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate the synthetic golden sequence or a toy dataset");
  c_synth->add_option("--kind", synth.kind, "sequence | dataset")->capture_default_str();
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--frames", synth.frames, "Sequence length")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  c_synth->add_option("--sigma", synth.sigma, "Heatmap peak sigma in image pixels")->capture_default_str();
  c_synth->add_option("--domain", synth.domain, "Dataset domain: coco | mpii | posetrack")->capture_default_str();
  c_synth->add_option("--count", synth.count, "Dataset sample count")->capture_default_str();

  TrainArgs train;
  auto* c_train = app.add_subcommand("train-toy", "Train the toy multi-domain network on synthetic data");
  c_train->add_option("--config", train.config, "Training config JSON (defaults: MDPN preset)");
  c_train->add_option("--seed", train.seed, "Override the config seed");
  c_train->add_option("--preset", train.preset,
                      "Schedule preset: mdpn | multi-domain | mixed | single:<d> | transfer:<a>><b>");
  c_train->add_option("--checkpoint", train.checkpoint, "Write the trained parameters here");
  c_train->add_option("--log", train.log, "Metrics log, one JSON object per line (default stdout)");
  c_train->add_flag("--print-config", train.print_config, "Print the effective config and exit");

  DecodeArgs dec;
  auto* c_decode = app.add_subcommand("decode", "Decode one heatmap file into a pose");
  c_decode->add_option("--heatmap", dec.heatmap, "PKHM heatmap file")->required();
  c_decode->add_option("--flipped", dec.flipped, "Heatmap of the mirrored crop (flip test)");
  c_decode->add_option("--smooth-sigma", dec.smooth_sigma, "Gaussian filter sigma in cells, 0 = off")
      ->capture_default_str();
  c_decode->add_flag("--no-quarter-offset", dec.no_quarter, "Disable the quarter offset");
  c_decode->add_option("--box", dec.box, "Detection box x,y,w,h (default: crop)");
  c_decode->add_option("--box-score", dec.box_score, "Detection score")->capture_default_str();
  c_decode->add_option("--frame", dec.frame, "Frame index")->capture_default_str();
  c_decode->add_option("--out", dec.out, "Output pose JSON (default stdout)");

  FuseArgs fu;
  auto* c_fuse = app.add_subcommand("fuse", "Fuse the branch heatmaps of one crop into a pose");
  c_fuse->add_option("--heatmap", fu.heatmaps, "Branch heatmap files (repeat)")->required();
  c_fuse->add_option("--strategy", fu.strategy, "select:<b> | head-swap:<body>,<head> | vote")
      ->capture_default_str();
  c_fuse->add_option("--target", fu.target, "Output joint set")->capture_default_str();
  c_fuse->add_option("--smooth-sigma", fu.smooth_sigma, "Gaussian filter sigma in cells, 0 = off")
      ->capture_default_str();
  c_fuse->add_flag("--no-quarter-offset", fu.no_quarter, "Disable the quarter offset");
  c_fuse->add_option("--box", fu.box, "Detection box x,y,w,h (default: crop)");
  c_fuse->add_option("--box-score", fu.box_score, "Detection score")->capture_default_str();
  c_fuse->add_option("--frame", fu.frame, "Frame index")->capture_default_str();
  c_fuse->add_option("--out", fu.out, "Output pose JSON (default stdout)");

  std::string mb_in, mb_out;
  double iou_thr = 0.6;
  auto* c_merge = app.add_subcommand("merge-boxes", "Box NMS over a detection file");
  c_merge->add_option("--boxes", mb_in, "Box JSON file")->required();
  c_merge->add_option("--iou-thr", iou_thr, "Suppress when IoU >= threshold")->capture_default_str();
  c_merge->add_option("--out", mb_out, "Output box JSON (default stdout)");

  std::string nms_in, nms_out;
  double oks_thr = 0.4;
  auto* c_nms = app.add_subcommand("nms", "OKS-NMS over a pose file");
  c_nms->add_option("--poses", nms_in, "Pose JSON file")->required();
  c_nms->add_option("--oks-thr", oks_thr, "Suppress when OKS >= threshold")->capture_default_str();
  c_nms->add_option("--out", nms_out, "Output pose JSON (default stdout)");

  TrackArgs tr;
  auto* c_track = app.add_subcommand("track", "Assign track ids across frames");
  c_track->add_option("--poses", tr.poses, "Pose JSON file")->required();
  c_track->add_option("--matcher", tr.matcher, "hungarian | greedy")
      ->check(CLI::IsMember({"hungarian", "greedy"}))
      ->capture_default_str();
  c_track->add_option("--propagator", tr.propagator, "velocity | identity")
      ->check(CLI::IsMember({"velocity", "identity"}))
      ->capture_default_str();
  c_track->add_option("--sim-thr", tr.sim_thr, "Minimum OKS to continue a track")->capture_default_str();
  c_track->add_option("--lookback", tr.lookback, "Frames a lost track stays matchable")->capture_default_str();
  c_track->add_option("--min-len", tr.min_len, "Drop tracks with fewer frames")->capture_default_str();
  c_track->add_option("--out", tr.out, "Output pose JSON (default stdout)");

  EvalArgs ev_map, ev_mota;
  auto add_eval = [&](const char* name, const char* help, EvalArgs& e) {
    auto* c = app.add_subcommand(name, help);
    c->add_option("--pred", e.pred, "Prediction pose JSON")->required();
    c->add_option("--gt", e.gt, "Ground truth JSON")->required();
    c->add_option("--pckh", e.pckh, "PCKh threshold")->capture_default_str();
    c->add_option("--head-factor", e.head_factor, "Head size = factor * head-box diagonal")
        ->capture_default_str();
    c->add_option("--format", e.format, "text | json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    c->add_option("--json", e.json_out, "Also write the JSON report here");
    c->add_option("--out", e.out, "Output file (default stdout)");
    return c;
  };
  auto* c_map = add_eval("eval-map", "Per-joint AP and mAP", ev_map);
  auto* c_mota = add_eval("eval-mota", "Per-joint MOTA, MOTP, precision, recall", ev_mota);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Full pipeline over a heatmap manifest");
  c_run->add_option("--manifest", run.manifest, "Manifest JSON");
  c_run->add_option("--config", run.config, "Pipeline config JSON (missing keys use defaults)");
  c_run->add_option("--disable", run.disable,
                    "Turn a stage off (repeat): gaussian_filter, quarter_offset, box_threshold, "
                    "oks_nms, box_rescore, keypoint_threshold, tracklet_pruning, flow_track, "
                    "flip_test, tracking");
  c_run->add_option("--out", run.out, "Output pose JSON (default stdout)");
  c_run->add_option("--log", run.log, "Stage log, one JSON object per line");
  c_run->add_flag("--print-config", run.print_config, "Print the effective config and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage_error", e.what(), 64);
  }

  try {
    if (c_synth->parsed()) run_synth(synth);
    else if (c_train->parsed()) run_train(train);
    else if (c_decode->parsed()) run_decode(dec);
    else if (c_fuse->parsed()) run_fuse(fu);
    else if (c_merge->parsed()) run_merge_boxes(mb_in, iou_thr, mb_out);
    else if (c_nms->parsed()) run_nms(nms_in, oks_thr, nms_out);
    else if (c_track->parsed()) run_track(tr);
    else if (c_map->parsed()) run_eval(ev_map, mdpn::TableKind::kAp);
    else if (c_mota->parsed()) run_eval(ev_mota, mdpn::TableKind::kMota);
    else if (c_run->parsed()) run_pipeline_cmd(run);
  } catch (const mdpn::ParseError& e) {
    return report("parse_error", e.what(), 2, &e);
  } catch (const std::exception& e) {
    return report("error", e.what(), 1);
  }
  return 0;
}
