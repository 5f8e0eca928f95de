#include "mdpn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mdpn/error.hpp"
#include "mdpn/heatmap_io.hpp"
#include "mdpn/random.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {
namespace {

constexpr std::string_view kMergedHead = "merged";

Sample route_to_merged(const Sample& s) {
  const JointSet& merged = builtin_joint_set(kMergedHead);
  const JointMapping m = mapping(builtin_joint_set(s.domain), merged);
  Sample out;
  out.domain = s.domain;
  out.head = std::string(kMergedHead);
  out.input = s.input;
  out.target = Heatmap(merged.count(), s.target.height(), s.target.width(), merged.name,
                       s.target.geometry());
  out.mask.assign(merged.count(), 0);
  out.keypoints.assign(merged.count(), std::nullopt);
  for (const auto& [from, to] : m.index_map) {
    const auto src = s.target.channel(from);
    std::copy(src.begin(), src.end(), out.target.channel(to).begin());
    out.mask[to] = s.mask[from];
    out.keypoints[to] = s.keypoints[from];
  }
  return out;
}

std::vector<HeadSpec> heads_for(const TrainSchedule& schedule) {
  std::vector<HeadSpec> heads;
  if (schedule.heads == HeadMode::kMerged) {
    heads.push_back({std::string(kMergedHead), builtin_joint_set(kMergedHead).count()});
    return heads;
  }
  for (const auto& stage : schedule.stages) {
    for (const auto& d : stage.datasets) {
      if (std::none_of(heads.begin(), heads.end(), [&](const HeadSpec& h) { return h.name == d; })) {
        heads.push_back({d, builtin_joint_set(d).count()});
      }
    }
  }
  return heads;
}

std::set<std::string> frozen_groups(const ToyNetwork& net, const TrainStage& stage) {
  std::set<std::string> all;
  for (const auto& b : net.parameters()) all.insert(group_of_block(b.name));
  if (stage.trainable.empty()) return {};
  for (const auto& g : stage.trainable) {
    if (!all.contains(g)) {
      throw Error("stage '" + stage.name + "' names unknown trainable group '" + g + "'");
    }
    all.erase(g);
  }
  return all;
}

nlohmann::json error_json(const ToyNetwork& net, const Datasets& data, HeadMode heads,
                          std::map<std::string, double>* out = nullptr) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [domain, samples] : data.heldout) {
    const auto e = heldout_error(net, samples, heads);
    j[domain] = e ? nlohmann::json(*e) : nlohmann::json(nullptr);
    if (out && e) (*out)[domain] = *e;
  }
  return j;
}

// Endless shuffled stream over the stage's datasets. Pooled sampling draws
// from the concatenation; balanced sampling cycles through the domains so
// each contributes equally regardless of its size.
class BatchSampler {
 public:
  BatchSampler(const TrainStage& stage, const std::map<std::string, std::vector<Sample>>& data,
               Sampling mode, std::uint64_t seed)
      : rng_(seed) {
    if (mode == Sampling::kPooled) {
      streams_.emplace_back();
      for (const auto& d : stage.datasets) {
        for (const auto& s : data.at(d)) streams_.back().items.push_back(&s);
      }
    } else {
      for (const auto& d : stage.datasets) {
        streams_.emplace_back();
        for (const auto& s : data.at(d)) streams_.back().items.push_back(&s);
      }
    }
    for (auto& st : streams_) {
      st.order.resize(st.items.size());
      for (std::size_t i = 0; i < st.order.size(); ++i) st.order[i] = i;
      st.cursor = st.order.size();
    }
  }

  const Sample& next() {
    Stream& st = streams_[turn_];
    turn_ = (turn_ + 1) % streams_.size();
    if (st.cursor == st.order.size()) {
      rng_.shuffle(st.order);
      st.cursor = 0;
    }
    return *st.items[st.order[st.cursor++]];
  }

 private:
  struct Stream {
    std::vector<const Sample*> items;
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
  };
  Rng rng_;
  std::vector<Stream> streams_;
  std::size_t turn_ = 0;
};

std::string_view head_mode_name(HeadMode m) {
  return m == HeadMode::kMerged ? "merged" : "per_domain";
}

}  // namespace

const LossSpec& TrainStage::loss_at(std::size_t step) const {
  if (loss.empty()) throw Error("stage '" + name + "' has no loss");
  const LossSpec* current = &loss.front().loss;
  for (const auto& phase : loss) {
    if (phase.from_step <= step) current = &phase.loss;
  }
  return *current;
}

TrainSchedule preset_schedule(std::string_view name, const PresetOptions& o) {
  TrainSchedule s;
  s.name = std::string(name);
  s.batch_size = o.batch_size;
  std::vector<std::string> all{o.generic};
  all.insert(all.end(), o.others.begin(), o.others.end());
  const std::size_t total = o.joint_steps + o.generic_steps + o.head_steps;
  // The joint stage switches to OHKM(8) for its final sixth.
  const std::vector<LossPhase> joint_loss{
      {0, LossSpec::l2()}, {o.joint_steps - o.joint_steps / 6, LossSpec::ohkm(8)}};

  auto stage = [&](std::string stage_name, std::vector<std::string> datasets,
                   std::vector<std::string> trainable, std::vector<LossPhase> loss,
                   std::size_t steps) {
    return TrainStage{std::move(stage_name), std::move(datasets), std::move(trainable),
                      std::move(loss), steps, o.learning_rate};
  };

  if (name == "mdpn" || name == "multi-domain") {
    s.stages.push_back(stage("joint", all, {}, joint_loss, o.joint_steps));
    if (name == "mdpn") {
      s.stages.push_back(stage("generic-finetune", {o.generic}, {}, {LossPhase{0, LossSpec::ohkm(8)}},
                               o.generic_steps));
      std::vector<std::string> heads;
      for (const auto& d : o.others) heads.push_back("head:" + d);
      s.stages.push_back(
          stage("heads-finetune", o.others, heads, {LossPhase{0, LossSpec::ohkm(8)}}, o.head_steps));
    }
    return s;
  }
  if (name == "mixed") {
    s.heads = HeadMode::kMerged;
    s.stages.push_back(stage("mixed", all, {}, joint_loss, total));
    return s;
  }
  if (name.starts_with("single:")) {
    const std::string domain(name.substr(7));
    s.stages.push_back(stage("single", {domain}, {},
                             {{0, LossSpec::l2()}, {total - total / 6, LossSpec::ohkm(8)}}, total));
    return s;
  }
  if (name.starts_with("transfer:")) {
    const auto rest = name.substr(9);
    const auto sep = rest.find('>');
    if (sep == std::string_view::npos || sep == 0 || sep + 1 == rest.size()) {
      throw Error("transfer preset must look like transfer:<from>><to>");
    }
    const std::string from(rest.substr(0, sep));
    std::vector<std::string> to;
    std::string targets(rest.substr(sep + 1));
    for (std::size_t pos = 0; pos <= targets.size();) {
      const auto plus = targets.find('+', pos);
      to.push_back(targets.substr(pos, plus == std::string::npos ? std::string::npos : plus - pos));
      if (plus == std::string::npos) break;
      pos = plus + 1;
    }
    s.heads = HeadMode::kMerged;
    s.stages.push_back(stage("pretrain", {from}, {}, joint_loss, o.joint_steps));
    s.stages.push_back(stage("finetune", to, {}, {LossPhase{0, LossSpec::ohkm(8)}},
                             o.generic_steps + o.head_steps));
    return s;
  }
  throw Error("unknown schedule preset '" + std::string(name) + "'");
}

Datasets make_datasets(const std::vector<DomainData>& domains, std::uint64_t seed,
                       const SyntheticConfig& config) {
  Datasets out;
  for (const auto& d : domains) {
    if (out.train.contains(d.spec.name)) throw Error("domain '" + d.spec.name + "' listed twice");
    // Training sets of different domains use different latent poses.
    if (d.train_size > 0) {
      out.train[d.spec.name] =
          gen_synthetic(d.spec, d.train_size, derive_seed(seed, "train:" + d.spec.name), config);
    } else {
      out.train[d.spec.name] = {};
    }
    if (d.heldout_size > 0) {
      // Every held-out sample comes from a fresh clip.
      DomainSpec fresh = d.spec;
      fresh.clip_length = 1;
      out.heldout[d.spec.name] =
          gen_synthetic(fresh, d.heldout_size, derive_seed(seed, "heldout:" + d.spec.name), config);
    }
  }
  return out;
}

std::optional<double> heldout_error(const ToyNetwork& net, const std::vector<Sample>& heldout,
                                    HeadMode heads) {
  if (heldout.empty()) return std::nullopt;
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& s : heldout) {
    const JointSet& set = builtin_joint_set(s.domain);
    const std::string head = heads == HeadMode::kMerged ? std::string(kMergedHead) : s.domain;
    if (!net.has_head(head)) return std::nullopt;
    const BackboneActivations act = forward_backbone(net, s.input);
    const Tensor3 out = forward_head(net, act.features, head);
    Heatmap h(set.count(), out.height, out.width, set.name, s.target.geometry());
    const JointMapping m = heads == HeadMode::kMerged ? mapping(set, builtin_joint_set(kMergedHead))
                                                      : mapping(set, set);
    for (const auto& [k, source] : m.index_map) {
      auto dst = h.channel(k);
      for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] = static_cast<float>(out.data[source * out.plane() + i]);
      }
    }
    const DecodedPose pose = decode(h);
    const double diagonal = std::hypot(static_cast<double>(out.width), static_cast<double>(out.height));
    for (std::size_t k = 0; k < set.count(); ++k) {
      if (!s.mask[k] || !s.keypoints[k]) continue;
      const Keypoint& p = pose.keypoints[k];
      const GridPoint g = image_to_grid(h.geometry(), {p.x, p.y});
      total += p.annotated ? std::hypot(g.x - s.keypoints[k]->x, g.y - s.keypoints[k]->y) : diagonal;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return total / static_cast<double>(count);
}

TrainResult train(const TrainSchedule& schedule, const Datasets& datasets,
                  const TrainOptions& options) {
  if (schedule.batch_size == 0) throw Error("batch size must be positive");
  for (const auto& stage : schedule.stages) {
    if (stage.datasets.empty()) throw Error("stage '" + stage.name + "' selects no dataset");
    for (const auto& d : stage.datasets) {
      auto it = datasets.train.find(d);
      if (it == datasets.train.end() || it->second.empty()) {
        throw Error("stage '" + stage.name + "' needs missing dataset '" + d + "'");
      }
    }
  }

  std::map<std::string, std::vector<Sample>> routed;
  for (const auto& [domain, samples] : datasets.train) {
    auto& dst = routed[domain];
    dst.reserve(samples.size());
    for (const auto& s : samples) {
      dst.push_back(schedule.heads == HeadMode::kMerged ? route_to_merged(s) : s);
    }
  }

  const Sample* probe = nullptr;
  for (const auto& [d, v] : routed) {
    if (!v.empty()) {
      probe = &v.front();
      break;
    }
  }
  if (!probe) throw Error("no training samples");
  ToyNetworkConfig config{probe->input.channels, probe->input.height, probe->input.width,
                          options.features, heads_for(schedule)};

  TrainResult result;
  auto emit = [&](nlohmann::json entry) {
    if (options.on_log) options.on_log(entry);
    result.log.push_back(std::move(entry));
  };
  result.network = ToyNetwork::initialise(config, options.seed);
  ToyNetwork& net = result.network;
  emit({{"event", "start"},
        {"schedule", schedule.name},
        {"heads", head_mode_name(schedule.heads)},
        {"parameters", net.parameter_count()},
        {"seed", options.seed}});

  for (std::size_t si = 0; si < schedule.stages.size(); ++si) {
    const TrainStage& stage = schedule.stages[si];
    const auto frozen = frozen_groups(net, stage);
    net.set_frozen(frozen);
    emit({{"event", "stage_begin"},
          {"stage", si},
          {"name", stage.name},
          {"datasets", stage.datasets},
          {"frozen", std::vector<std::string>(frozen.begin(), frozen.end())},
          {"steps", stage.steps},
          {"learning_rate", stage.learning_rate}});

    BatchSampler sampler(stage, routed, schedule.sampling,
                         derive_seed(options.seed, "stage:" + std::to_string(si) + ":" + stage.name));
    std::vector<Sample> batch;
    double window_loss = 0.0;
    std::size_t window = 0;
    for (std::size_t step = 0; step < stage.steps; ++step) {
      batch.clear();
      while (batch.size() < schedule.batch_size) batch.push_back(sampler.next());
      double loss = 0.0;
      const ParameterSet grad = gradients(net, batch, stage.loss_at(step), &loss);
      sgd_update(net, grad, stage.learning_rate);
      if (!std::isfinite(loss)) throw Error("training diverged in stage '" + stage.name + "'");
      window_loss += loss;
      ++window;
      const bool last = step + 1 == stage.steps;
      if (last || (schedule.eval_every > 0 && (step + 1) % schedule.eval_every == 0)) {
        emit({{"event", last ? "stage_end" : "eval"},
              {"stage", si},
              {"name", stage.name},
              {"step", step + 1},
              {"loss", window_loss / static_cast<double>(window)},
              {"loss_kind", stage.loss_at(step).to_string()},
              {"heldout_error", error_json(net, datasets, schedule.heads)}});
        window_loss = 0.0;
        window = 0;
      }
    }
    if (stage.steps == 0) {
      emit({{"event", "stage_end"}, {"stage", si}, {"name", stage.name}, {"step", 0}});
    }
    net.set_frozen({});
    result.stage_outputs.push_back(net);
  }
  emit({{"event", "final"},
        {"heldout_error", error_json(net, datasets, schedule.heads, &result.final_error)}});
  return result;
}

void to_json(nlohmann::json& j, const TrainSchedule& schedule) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : schedule.stages) {
    nlohmann::json loss = nlohmann::json::array();
    for (const auto& p : st.loss) loss.push_back({{"from", p.from_step}, {"loss", p.loss.to_string()}});
    stages.push_back({{"name", st.name},
                      {"datasets", st.datasets},
                      {"trainable", st.trainable},
                      {"loss", loss},
                      {"steps", st.steps},
                      {"learning_rate", st.learning_rate}});
  }
  j = {{"name", schedule.name},
       {"heads", head_mode_name(schedule.heads)},
       {"sampling", schedule.sampling == Sampling::kPooled ? "pooled" : "balanced"},
       {"batch_size", schedule.batch_size},
       {"eval_every", schedule.eval_every},
       {"stages", stages}};
}

void from_json(const nlohmann::json& j, TrainSchedule& schedule) {
  try {
    schedule = TrainSchedule{};
    schedule.name = j.value("name", std::string("custom"));
    const std::string heads = j.value("heads", std::string("per_domain"));
    if (heads == "merged") {
      schedule.heads = HeadMode::kMerged;
    } else if (heads != "per_domain") {
      throw ParseError("schedule heads must be 'per_domain' or 'merged'");
    }
    const std::string sampling = j.value("sampling", std::string("balanced"));
    if (sampling == "pooled") {
      schedule.sampling = Sampling::kPooled;
    } else if (sampling != "balanced") {
      throw ParseError("schedule sampling must be 'balanced' or 'pooled'");
    }
    schedule.batch_size = j.value("batch_size", std::size_t{4});
    schedule.eval_every = j.value("eval_every", std::size_t{0});
    for (const auto& st : j.at("stages")) {
      TrainStage stage;
      stage.name = st.at("name").get<std::string>();
      stage.datasets = st.at("datasets").get<std::vector<std::string>>();
      stage.trainable = st.value("trainable", std::vector<std::string>{});
      stage.steps = st.at("steps").get<std::size_t>();
      stage.learning_rate = st.value("learning_rate", TrainStage{}.learning_rate);
      stage.loss.clear();
      const auto& loss = st.contains("loss") ? st.at("loss") : nlohmann::json("l2");
      if (loss.is_string()) {
        stage.loss.push_back({0, LossSpec::parse(loss.get<std::string>())});
      } else {
        for (const auto& p : loss) {
          stage.loss.push_back({p.value("from", std::size_t{0}),
                                LossSpec::parse(p.at("loss").get<std::string>())});
        }
      }
      if (stage.loss.empty()) throw ParseError("stage '" + stage.name + "' has no loss");
      schedule.stages.push_back(std::move(stage));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("schedule: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const DomainData& d) {
  j = {{"name", d.spec.name},
       {"contrast", d.spec.contrast},
       {"noise", d.spec.noise},
       {"offset", {d.spec.offset.x, d.spec.offset.y}},
       {"clutter", d.spec.clutter},
       {"clip_length", d.spec.clip_length},
       {"frame_jitter", d.spec.frame_jitter},
       {"train_size", d.train_size},
       {"heldout_size", d.heldout_size}};
}

void from_json(const nlohmann::json& j, DomainData& d) {
  try {
    const std::string name = j.at("name").get<std::string>();
    builtin_joint_set(name);
    // Unspecified rendering knobs fall back to the builtin domain of that name.
    d.spec = DomainSpec{};
    d.spec.name = name;
    for (const auto& builtin : default_domains()) {
      if (builtin.name == name) d.spec = builtin;
    }
    d.spec.contrast = j.value("contrast", d.spec.contrast);
    d.spec.noise = j.value("noise", d.spec.noise);
    if (j.contains("offset")) {
      const auto& o = j.at("offset");
      if (!o.is_array() || o.size() != 2) throw ParseError("domain offset must be [dx, dy]");
      d.spec.offset = {o[0].get<double>(), o[1].get<double>()};
    }
    d.spec.clutter = j.value("clutter", d.spec.clutter);
    d.spec.clip_length = j.value("clip_length", d.spec.clip_length);
    d.spec.frame_jitter = j.value("frame_jitter", d.spec.frame_jitter);
    if (d.spec.clip_length < 1) throw ParseError("clip_length must be >= 1");
    d.train_size = j.value("train_size", std::size_t{0});
    d.heldout_size = j.value("heldout_size", std::size_t{100});
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("domain: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
}

ToyTrainConfig ToyTrainConfig::defaults() {
  ToyTrainConfig c;
  const std::size_t sizes[] = {2000, 2000, 200};
  const auto domains = default_domains();
  for (std::size_t i = 0; i < domains.size(); ++i) {
    c.domains.push_back(DomainData{domains[i], sizes[i], 100});
  }
  c.schedule = preset_schedule("mdpn");
  return c;
}

ToyTrainConfig toy_train_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"data", "domains", "schedule", "preset", "features",
                                              "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ParseError("unknown train-toy config key '" + key + "'");
  }
  ToyTrainConfig c = ToyTrainConfig::defaults();
  try {
    if (j.contains("data")) {
      const auto& d = j.at("data");
      c.data.channels = d.value("channels", c.data.channels);
      c.data.height = d.value("height", c.data.height);
      c.data.width = d.value("width", c.data.width);
      c.data.target_sigma = d.value("target_sigma", c.data.target_sigma);
    }
    if (j.contains("domains")) c.domains = j.at("domains").get<std::vector<DomainData>>();
    c.features = j.value("features", c.features);
    c.seed = j.value("seed", c.seed);
    if (j.contains("schedule")) {
      const auto& s = j.at("schedule");
      if (s.is_string()) {
        PresetOptions o;
        if (j.contains("preset")) {
          const auto& p = j.at("preset");
          o.generic = p.value("generic", o.generic);
          o.others = p.value("others", o.others);
          o.joint_steps = p.value("joint_steps", o.joint_steps);
          o.generic_steps = p.value("generic_steps", o.generic_steps);
          o.head_steps = p.value("head_steps", o.head_steps);
          o.learning_rate = p.value("learning_rate", o.learning_rate);
          o.batch_size = p.value("batch_size", o.batch_size);
        }
        c.schedule = preset_schedule(s.get<std::string>(), o);
      } else {
        c.schedule = s.get<TrainSchedule>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("train-toy config: ") + e.what());
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(e.what());
  }
  return c;
}

nlohmann::json to_json(const ToyTrainConfig& c) {
  return {{"data",
           {{"channels", c.data.channels},
            {"height", c.data.height},
            {"width", c.data.width},
            {"target_sigma", c.data.target_sigma}}},
          {"domains", c.domains},
          {"schedule", c.schedule},
          {"features", c.features},
          {"seed", c.seed}};
}

namespace {
constexpr std::string_view kCheckpointMagic = "PKNT";
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

std::string serialize_checkpoint(const ToyNetwork& net) {
  const auto& cfg = net.config();
  nlohmann::json heads = nlohmann::json::array();
  for (const auto& h : cfg.heads) heads.push_back({{"name", h.name}, {"joints", h.joints}});
  nlohmann::json blocks = nlohmann::json::array();
  std::size_t offset = 0;
  for (const auto& b : net.parameters()) {
    blocks.push_back({{"name", b.name}, {"shape", b.shape}, {"offset", offset}});
    offset += b.values.size();
  }
  const nlohmann::json manifest = {{"config",
                                    {{"input_channels", cfg.input_channels},
                                     {"height", cfg.height},
                                     {"width", cfg.width},
                                     {"features", cfg.features},
                                     {"heads", heads}}},
                                   {"blocks", blocks},
                                   {"dtype", "f64"}};
  const std::string text = manifest.dump();
  std::string out(kCheckpointMagic);
  binary::put_u32(out, kCheckpointVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  for (const auto& b : net.parameters()) {
    for (double v : b.values) binary::put_f64(out, v);
  }
  return out;
}

ToyNetwork parse_checkpoint(std::string_view bytes) {
  binary::Reader r(bytes);
  if (bytes.size() < 4 || r.take(4) != kCheckpointMagic) throw ParseError("not a checkpoint file");
  if (r.u32() != kCheckpointVersion) throw ParseError("unsupported checkpoint version");
  const std::size_t len = r.u32();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(r.take(len));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  ToyNetworkConfig cfg;
  try {
    const auto& c = manifest.at("config");
    cfg.input_channels = c.at("input_channels").get<std::size_t>();
    cfg.height = c.at("height").get<std::size_t>();
    cfg.width = c.at("width").get<std::size_t>();
    cfg.features = c.at("features").get<std::size_t>();
    for (const auto& h : c.at("heads")) {
      cfg.heads.push_back({h.at("name").get<std::string>(), h.at("joints").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  ToyNetwork net(cfg);
  for (auto& b : net.parameters()) {
    for (double& v : b.values) v = r.f64();
  }
  if (r.remaining() != 0) throw ParseError("trailing bytes after checkpoint payload");
  return net;
}

}  // namespace mdpn
