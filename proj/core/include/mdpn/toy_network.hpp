#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdpn/heatmap.hpp"

namespace mdpn {

// Dense C x H x W tensor of doubles.
struct Tensor3 {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  Tensor3() = default;
  Tensor3(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  std::size_t plane() const noexcept { return height * width; }
  double& at(std::size_t c, std::size_t y, std::size_t x) { return data[(c * height + y) * width + x]; }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }

  friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

struct HeadSpec {
  std::string name;  // joint-set name of the domain
  std::size_t joints = 0;

  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

struct ToyNetworkConfig {
  std::size_t input_channels = 1;
  std::size_t height = 32;
  std::size_t width = 24;
  std::size_t features = 16;
  std::vector<HeadSpec> heads;

  friend bool operator==(const ToyNetworkConfig&, const ToyNetworkConfig&) = default;
};

struct ParameterBlock {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> values;

  friend bool operator==(const ParameterBlock&, const ParameterBlock&) = default;
};

// Parameter (or gradient) blocks in a fixed order:
//   conv1.weight [F,C,3,3], conv1.bias [F], conv2.weight [F,F,3,3],
//   conv2.bias [F], then head.<name>.weight [K,F], head.<name>.bias [K]
//   for every head in config order.
using ParameterSet = std::vector<ParameterBlock>;

// Freeze / trainability groups: "backbone" (conv1 + conv2) and
// "head:<name>".
std::string group_of_block(std::string_view block_name);

// Shared backbone conv3x3 -> ReLU -> conv3x3 (zero padding), followed by one
// 1x1 convolution head per domain.
class ToyNetwork {
 public:
  ToyNetwork() = default;
  // Zero-initialised parameters.
  explicit ToyNetwork(ToyNetworkConfig config);
  // Normal weights with std sqrt(1 / (3 fan_in)), zero biases, deterministic
  // in seed.
  static ToyNetwork initialise(ToyNetworkConfig config, std::uint64_t seed);

  const ToyNetworkConfig& config() const noexcept { return config_; }
  ParameterSet& parameters() noexcept { return params_; }
  const ParameterSet& parameters() const noexcept { return params_; }
  ParameterBlock& block(std::string_view name);
  const ParameterBlock& block(std::string_view name) const;
  bool has_head(std::string_view head) const;
  std::size_t head_joints(std::string_view head) const;
  std::size_t parameter_count() const noexcept;

  // Names of groups that are frozen; frozen groups receive zero gradient.
  const std::set<std::string>& frozen() const noexcept { return frozen_; }
  void set_frozen(std::set<std::string> groups) { frozen_ = std::move(groups); }
  bool is_frozen(std::string_view block_name) const;

  friend bool operator==(const ToyNetwork&, const ToyNetwork&) = default;

 private:
  ToyNetworkConfig config_;
  ParameterSet params_;
  std::set<std::string> frozen_;
};

// Intermediate activations of one forward pass.
struct BackboneActivations {
  Tensor3 pre_relu;  // conv1 output
  Tensor3 hidden;    // ReLU(conv1)
  Tensor3 features;  // conv2 output
};

// Throws mdpn::Error if the input shape does not match the config.
BackboneActivations forward_backbone(const ToyNetwork& net, const Tensor3& input);
Tensor3 forward_head(const ToyNetwork& net, const Tensor3& features, std::string_view head);

// All heads evaluated on the shared features, as float heatmaps with unit
// stride geometry.
std::map<std::string, Heatmap> forward(const ToyNetwork& net, const Tensor3& input);

struct LossSpec {
  enum class Kind { kL2, kOhkm };
  Kind kind = Kind::kL2;
  std::size_t top_k = 8;

  static LossSpec l2() { return {}; }
  static LossSpec ohkm(std::size_t k) { return {Kind::kOhkm, k}; }
  // "l2" or "ohkm:<k>".
  static LossSpec parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

// Per-joint mean squared error over the grid, for annotated joints only.
std::vector<double> per_joint_mse(std::span<const double> pred, std::span<const float> target,
                                  std::span<const unsigned char> mask, std::size_t joints);

struct LossValue {
  double loss = 0.0;
  // d loss / d pred, same layout as pred (filled only when requested).
  std::vector<double> grad;
};

LossValue evaluate_loss(const LossSpec& spec, std::span<const double> pred,
                        std::span<const float> target, std::span<const unsigned char> mask,
                        std::size_t joints, bool with_grad);

// Mean over annotated joints of per-joint MSE; 0 if nothing is annotated.
double loss_l2_masked(const Heatmap& pred, const Heatmap& target,
                      std::span<const unsigned char> mask);
// Mean of the min(k, #annotated) largest per-joint MSEs.
double loss_ohkm(const Heatmap& pred, const Heatmap& target, std::span<const unsigned char> mask,
                 std::size_t k);

// One training example routed to a head.
struct Sample {
  std::string domain;
  std::string head;  // head the target belongs to (domain set, or "merged")
  Tensor3 input;
  Heatmap target;
  std::vector<unsigned char> mask;
  // Ground-truth keypoints in grid coordinates for the target's joint set.
  std::vector<std::optional<GridPoint>> keypoints;
};

ParameterSet zero_like(const ParameterSet& params);

// Mean batch loss. Throws mdpn::Error on an empty batch or unknown head.
double batch_loss(const ToyNetwork& net, std::span<const Sample> batch, const LossSpec& loss);

// Exact gradient of batch_loss. Frozen groups and heads without samples in
// the batch get exactly zero.
ParameterSet gradients(const ToyNetwork& net, std::span<const Sample> batch, const LossSpec& loss,
                       double* loss_out = nullptr);

// theta -= learning_rate * grad for every non-frozen block.
void sgd_update(ToyNetwork& net, const ParameterSet& grad, double learning_rate);

}  // namespace mdpn
