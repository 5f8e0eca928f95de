#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mdpn/synthetic.hpp"
#include "mdpn/toy_network.hpp"

namespace mdpn {

// Loss used from `from_step` (inclusive) until the next phase.
struct LossPhase {
  std::size_t from_step = 0;
  LossSpec loss;

  friend bool operator==(const LossPhase&, const LossPhase&) = default;
};

struct TrainStage {
  std::string name;
  // Domains whose training sets are pooled for this stage.
  std::vector<std::string> datasets;
  // Groups that are updated ("backbone", "head:<name>"); empty = all.
  std::vector<std::string> trainable;
  std::vector<LossPhase> loss{LossPhase{}};
  std::size_t steps = 0;
  double learning_rate = 3.0;

  const LossSpec& loss_at(std::size_t step) const;
  friend bool operator==(const TrainStage&, const TrainStage&) = default;
};

enum class HeadMode {
  kPerDomain,  // one head per domain (multi-domain learning)
  kMerged,     // a single 21-joint head over all domains (mixed)
};

enum class Sampling {
  kPooled,    // shuffle the concatenated datasets of a stage
  kBalanced,  // round-robin over the stage's domains
};

struct TrainSchedule {
  std::string name;
  HeadMode heads = HeadMode::kPerDomain;
  Sampling sampling = Sampling::kBalanced;
  std::vector<TrainStage> stages;
  std::size_t batch_size = 4;
  // Held-out evaluation every n steps inside a stage (0 = stage ends only).
  std::size_t eval_every = 0;

  friend bool operator==(const TrainSchedule&, const TrainSchedule&) = default;
};

struct PresetOptions {
  std::string generic = "coco";  // domain A
  std::vector<std::string> others = {"mpii", "posetrack"};
  std::size_t joint_steps = 2000;
  std::size_t generic_steps = 300;
  std::size_t head_steps = 400;
  double learning_rate = 3.0;
  std::size_t batch_size = 4;
};

// Presets: "mdpn", "multi-domain" (joint stage only), "mixed",
// "single:<domain>", "transfer:<from>><to>" (e.g. transfer:coco>posetrack).
// Single-domain and transfer presets spend the same total number of steps as
// "mdpn".
TrainSchedule preset_schedule(std::string_view name, const PresetOptions& options = {});

struct Datasets {
  std::map<std::string, std::vector<Sample>> train;
  std::map<std::string, std::vector<Sample>> heldout;
};

struct DomainData {
  DomainSpec spec;
  std::size_t train_size = 0;
  std::size_t heldout_size = 100;
};

Datasets make_datasets(const std::vector<DomainData>& domains, std::uint64_t seed,
                       const SyntheticConfig& config = {});

// Mean Euclidean distance (grid cells) between decoded predictions and the
// true keypoints of the held-out samples. Empty when the network cannot
// predict the domain's joint set.
std::optional<double> heldout_error(const ToyNetwork& net, const std::vector<Sample>& heldout,
                                    HeadMode heads);

struct TrainResult {
  ToyNetwork network;
  // Network after each stage.
  std::vector<ToyNetwork> stage_outputs;
  // Line-oriented metrics log, one JSON object per entry.
  std::vector<nlohmann::json> log;
  // Final held-out error per domain.
  std::map<std::string, double> final_error;
};

struct TrainOptions {
  std::size_t features = 16;
  std::uint64_t seed = 0;
  // Called for every log entry as it is produced.
  std::function<void(const nlohmann::json&)> on_log;
};

// Runs the stages in order with plain SGD. Bit-reproducible for a given
// seed. Throws mdpn::Error if a stage names a missing dataset.
TrainResult train(const TrainSchedule& schedule, const Datasets& datasets,
                  const TrainOptions& options);

// JSON forms of schedules and domain specs.
void to_json(nlohmann::json& j, const TrainSchedule& schedule);
void from_json(const nlohmann::json& j, TrainSchedule& schedule);
void to_json(nlohmann::json& j, const DomainData& domain);
void from_json(const nlohmann::json& j, DomainData& domain);

// Full train-toy configuration.
struct ToyTrainConfig {
  SyntheticConfig data;
  std::vector<DomainData> domains;
  TrainSchedule schedule;
  std::size_t features = 16;
  std::uint64_t seed = 0;

  // MDPN preset over the default domains: 2000 / 2000 / 200 training
  // samples for coco / mpii / posetrack.
  static ToyTrainConfig defaults();
};

// Missing keys take the values of ToyTrainConfig::defaults(); "schedule" may
// be a preset name or a full schedule object.
ToyTrainConfig toy_train_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ToyTrainConfig& config);

// Parameter checkpoint: "PKNT" | version u32 | manifest length u32 |
// manifest JSON | f64 little-endian parameter payload in block order.
std::string serialize_checkpoint(const ToyNetwork& net);
ToyNetwork parse_checkpoint(std::string_view bytes);

}  // namespace mdpn
