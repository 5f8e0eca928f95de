#include "mdpn/toy_network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdpn/error.hpp"
#include "mdpn/random.hpp"

// Leaf kernels get an AVX2 clone picked at load time. Results stay
// bit-identical to the baseline build because contraction is disabled and
// only independent pixels are vectorised. Cloned functions must not throw.
#if defined(__GNUC__) && defined(__x86_64__) && !defined(__clang__)
#define MDPN_VECTOR_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define MDPN_VECTOR_CLONES
#endif

namespace mdpn {
namespace {

constexpr std::size_t kConv1W = 0;
constexpr std::size_t kConv1B = 1;
constexpr std::size_t kConv2W = 2;
constexpr std::size_t kConv2B = 3;
constexpr std::size_t kFirstHead = 4;

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

ParameterBlock make_block(std::string name, std::vector<std::size_t> shape) {
  const std::size_t n = shape_size(shape);
  return ParameterBlock{std::move(name), std::move(shape), std::vector<double>(n, 0.0)};
}

// Rows (i, ky, kx) of the zero-padded 3x3 neighbourhoods, one column per
// pixel, so every convolution becomes long contiguous loops over the plane.
MDPN_VECTOR_CLONES
void im2col(const Tensor3& in, std::vector<double>& col) {
  const std::size_t H = in.height;
  const std::size_t W = in.width;
  const std::size_t P = in.plane();
  col.resize(in.channels * 9 * P);
  for (std::size_t i = 0; i < in.channels; ++i) {
    const double* src = in.data.data() + i * P;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* dst = col.data() + ((i * 3 + ky) * 3 + kx) * P;
        const std::size_t x0 = kx == 0 ? 1 : 0;
        const std::size_t x1 = kx == 2 ? W - 1 : W;
        for (std::size_t y = 0; y < H; ++y) {
          double* drow = dst + y * W;
          const std::size_t sy = y + ky;  // source row + 1
          if (sy == 0 || sy > H) {
            std::fill(drow, drow + W, 0.0);
            continue;
          }
          const double* srow = src + (sy - 1) * W + kx - 1;
          std::fill(drow, drow + x0, 0.0);
          std::copy(srow + x0, srow + x1, drow + x0);
          std::fill(drow + x1, drow + W, 0.0);
        }
      }
    }
  }
}

// Fixed-lane dot product; the lane split keeps the sum order independent of
// the vector width.
MDPN_VECTOR_CLONES
double dot(const double* a, const double* b, std::size_t n) {
  double lanes[8] = {};
  std::size_t p = 0;
  for (; p + 8 <= n; p += 8) {
    for (std::size_t l = 0; l < 8; ++l) lanes[l] += a[p + l] * b[p + l];
  }
  double tail = 0.0;
  for (; p < n; ++p) tail += a[p] * b[p];
  double sum = 0.0;
  for (double v : lanes) sum += v;
  return sum + tail;
}

// Four dot products of a[0..3] against one shared b.
MDPN_VECTOR_CLONES
void dot4(const double* const a[4], const double* b, std::size_t n, double out[4]) {
  double lanes[4][8] = {};
  std::size_t p = 0;
  for (; p + 8 <= n; p += 8) {
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t l = 0; l < 8; ++l) lanes[k][l] += a[k][p + l] * b[p + l];
    }
  }
  for (std::size_t k = 0; k < 4; ++k) {
    double tail = 0.0;
    for (std::size_t q = p; q < n; ++q) tail += a[k][q] * b[q];
    double sum = 0.0;
    for (double v : lanes[k]) sum += v;
    out[k] = sum + tail;
  }
}

// Pixel tile for the column loops: a tile of every column row fits in L1.
constexpr std::size_t kTile = 32;

// out[o] += conv3x3(in)[o], zero padding. weight layout [O][I][3][3].
MDPN_VECTOR_CLONES
void conv3x3_accumulate(const Tensor3& in, std::span<const double> weight, Tensor3& out) {
  // Reused scratch; im2col overwrites every entry.
  thread_local std::vector<double> col;
  im2col(in, col);
  const std::size_t P = in.plane();
  const std::size_t R = in.channels * 9;
  for (std::size_t t0 = 0; t0 < P; t0 += kTile) {
    const std::size_t n = std::min(kTile, P - t0);
    for (std::size_t o = 0; o < out.channels; ++o) {
      double* dst = out.data.data() + o * P + t0;
      if (n == kTile) {
        // Full tile: the accumulator stays in registers across all taps.
        double acc[kTile];
        std::copy(dst, dst + kTile, acc);
        for (std::size_t r = 0; r < R; ++r) {
          const double w = weight[o * R + r];
          const double* c = col.data() + r * P + t0;
          for (std::size_t p = 0; p < kTile; ++p) acc[p] += w * c[p];
        }
        std::copy(acc, acc + kTile, dst);
        continue;
      }
      for (std::size_t r = 0; r < R; ++r) {
        const double w = weight[o * R + r];
        const double* c = col.data() + r * P + t0;
        for (std::size_t p = 0; p < n; ++p) dst[p] += w * c[p];
      }
    }
  }
}

// Given d out, accumulates d weight, d bias and (optionally) d in.
MDPN_VECTOR_CLONES
void conv3x3_backward(const Tensor3& in, std::span<const double> weight, const Tensor3& grad_out,
                      std::span<double> grad_weight, std::span<double> grad_bias, Tensor3* grad_in) {
  const std::size_t H = in.height;
  const std::size_t W = in.width;
  const std::size_t P = in.plane();
  const std::size_t R = in.channels * 9;
  // Reused scratch; im2col overwrites every entry.
  thread_local std::vector<double> col;
  im2col(in, col);
  const std::size_t O = grad_out.channels;
  for (std::size_t o = 0; o < O; ++o) {
    const double* g = grad_out.data.data() + o * P;
    grad_bias[o] += std::accumulate(g, g + P, 0.0);
  }
  std::size_t o = 0;
  for (; o + 4 <= O; o += 4) {
    const double* g[4];
    for (std::size_t k = 0; k < 4; ++k) g[k] = grad_out.data.data() + (o + k) * P;
    for (std::size_t r = 0; r < R; ++r) {
      double d[4];
      dot4(g, col.data() + r * P, P, d);
      for (std::size_t k = 0; k < 4; ++k) grad_weight[(o + k) * R + r] += d[k];
    }
  }
  for (; o < O; ++o) {
    const double* g = grad_out.data.data() + o * P;
    for (std::size_t r = 0; r < R; ++r) grad_weight[o * R + r] += dot(g, col.data() + r * P, P);
  }
  if (!grad_in) return;
  // Reuse the column buffer for d col, then scatter it back onto the input.
  for (std::size_t t0 = 0; t0 < P; t0 += kTile) {
    const std::size_t n = std::min(kTile, P - t0);
    for (std::size_t r = 0; r < R; ++r) {
      double acc[kTile] = {};
      for (std::size_t oo = 0; oo < O; ++oo) {
        const double w = weight[oo * R + r];
        const double* g = grad_out.data.data() + oo * P + t0;
        if (n == kTile) {
          for (std::size_t p = 0; p < kTile; ++p) acc[p] += w * g[p];
        } else {
          for (std::size_t p = 0; p < n; ++p) acc[p] += w * g[p];
        }
      }
      std::copy(acc, acc + n, col.data() + r * P + t0);
    }
  }
  for (std::size_t i = 0; i < in.channels; ++i) {
    double* gin = grad_in->data.data() + i * P;
    for (std::size_t ky = 0; ky < 3; ++ky) {
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* c = col.data() + ((i * 3 + ky) * 3 + kx) * P;
        const std::size_t y0 = ky == 0 ? 1 : 0;
        const std::size_t y1 = ky == 2 ? H - 1 : H;
        const std::size_t x0 = kx == 0 ? 1 : 0;
        const std::size_t x1 = kx == 2 ? W - 1 : W;
        for (std::size_t y = y0; y < y1; ++y) {
          double* girow = gin + (y + ky - 1) * W + kx - 1;
          const double* crow = c + y * W;
          for (std::size_t x = x0; x < x1; ++x) girow[x] += crow[x];
        }
      }
    }
  }
}

std::size_t head_index(const ToyNetworkConfig& config, std::string_view head) {
  for (std::size_t h = 0; h < config.heads.size(); ++h) {
    if (config.heads[h].name == head) return h;
  }
  throw Error("network has no head '" + std::string(head) + "'");
}

}  // namespace

std::string group_of_block(std::string_view block_name) {
  if (block_name.starts_with("conv")) return "backbone";
  if (block_name.starts_with("head.")) {
    const auto rest = block_name.substr(5);
    return "head:" + std::string(rest.substr(0, rest.rfind('.')));
  }
  throw Error("unknown parameter block '" + std::string(block_name) + "'");
}

ToyNetwork::ToyNetwork(ToyNetworkConfig config) : config_(std::move(config)) {
  if (config_.input_channels == 0 || config_.features == 0 || config_.height < 3 ||
      config_.width < 3) {
    throw Error("invalid toy network configuration");
  }
  const std::size_t C = config_.input_channels;
  const std::size_t F = config_.features;
  params_.push_back(make_block("conv1.weight", {F, C, 3, 3}));
  params_.push_back(make_block("conv1.bias", {F}));
  params_.push_back(make_block("conv2.weight", {F, F, 3, 3}));
  params_.push_back(make_block("conv2.bias", {F}));
  for (const auto& head : config_.heads) {
    if (head.joints == 0) throw Error("head '" + head.name + "' has no joints");
    params_.push_back(make_block("head." + head.name + ".weight", {head.joints, F}));
    params_.push_back(make_block("head." + head.name + ".bias", {head.joints}));
  }
}

ToyNetwork ToyNetwork::initialise(ToyNetworkConfig config, std::uint64_t seed) {
  ToyNetwork net(std::move(config));
  Rng rng(derive_seed(seed, "init"));
  for (auto& block : net.params_) {
    if (block.shape.size() < 2) continue;
    const std::size_t fan_in = shape_size(block.shape) / block.shape[0];
    // Small initial weights keep plain SGD stable at the large step sizes the
    // per-pixel mean loss needs.
    const double scale = std::sqrt(1.0 / (3.0 * static_cast<double>(fan_in)));
    for (double& v : block.values) v = scale * rng.normal();
  }
  return net;
}

ParameterBlock& ToyNetwork::block(std::string_view name) {
  for (auto& b : params_) {
    if (b.name == name) return b;
  }
  throw Error("no parameter block '" + std::string(name) + "'");
}

const ParameterBlock& ToyNetwork::block(std::string_view name) const {
  for (const auto& b : params_) {
    if (b.name == name) return b;
  }
  throw Error("no parameter block '" + std::string(name) + "'");
}

bool ToyNetwork::has_head(std::string_view head) const {
  return std::any_of(config_.heads.begin(), config_.heads.end(),
                     [&](const HeadSpec& h) { return h.name == head; });
}

std::size_t ToyNetwork::head_joints(std::string_view head) const {
  return config_.heads[head_index(config_, head)].joints;
}

std::size_t ToyNetwork::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& b : params_) n += b.values.size();
  return n;
}

bool ToyNetwork::is_frozen(std::string_view block_name) const {
  return frozen_.contains(group_of_block(block_name));
}

BackboneActivations forward_backbone(const ToyNetwork& net, const Tensor3& input) {
  const auto& cfg = net.config();
  if (input.channels != cfg.input_channels || input.height != cfg.height ||
      input.width != cfg.width || input.data.size() != input.channels * input.plane()) {
    throw Error("input shape does not match the network configuration");
  }
  const auto& p = net.parameters();
  const std::size_t F = cfg.features;
  BackboneActivations act;
  act.pre_relu = Tensor3(F, cfg.height, cfg.width);
  for (std::size_t f = 0; f < F; ++f) {
    std::fill_n(act.pre_relu.data.begin() + static_cast<long>(f * act.pre_relu.plane()),
                act.pre_relu.plane(), p[kConv1B].values[f]);
  }
  conv3x3_accumulate(input, p[kConv1W].values, act.pre_relu);
  act.hidden = act.pre_relu;
  for (double& v : act.hidden.data) v = v > 0.0 ? v : 0.0;
  act.features = Tensor3(F, cfg.height, cfg.width);
  for (std::size_t f = 0; f < F; ++f) {
    std::fill_n(act.features.data.begin() + static_cast<long>(f * act.features.plane()),
                act.features.plane(), p[kConv2B].values[f]);
  }
  conv3x3_accumulate(act.hidden, p[kConv2W].values, act.features);
  return act;
}

Tensor3 forward_head(const ToyNetwork& net, const Tensor3& features, std::string_view head) {
  const auto& cfg = net.config();
  const std::size_t h = head_index(cfg, head);
  const auto& weight = net.parameters()[kFirstHead + 2 * h].values;
  const auto& bias = net.parameters()[kFirstHead + 2 * h + 1].values;
  const std::size_t K = cfg.heads[h].joints;
  const std::size_t F = cfg.features;
  const std::size_t P = features.plane();
  Tensor3 out(K, features.height, features.width);
  for (std::size_t k = 0; k < K; ++k) {
    double* dst = out.data.data() + k * P;
    std::fill_n(dst, P, bias[k]);
    for (std::size_t f = 0; f < F; ++f) {
      const double w = weight[k * F + f];
      const double* src = features.data.data() + f * P;
      for (std::size_t i = 0; i < P; ++i) dst[i] += w * src[i];
    }
  }
  return out;
}

std::map<std::string, Heatmap> forward(const ToyNetwork& net, const Tensor3& input) {
  const BackboneActivations act = forward_backbone(net, input);
  std::map<std::string, Heatmap> out;
  const auto& cfg = net.config();
  HeatmapGeometry g;
  g.crop = Box{0.0, 0.0, static_cast<double>(cfg.width), static_cast<double>(cfg.height)};
  for (const auto& head : cfg.heads) {
    const Tensor3 t = forward_head(net, act.features, head.name);
    Heatmap h(t.channels, t.height, t.width, head.name, g);
    std::transform(t.data.begin(), t.data.end(), h.values().begin(),
                   [](double v) { return static_cast<float>(v); });
    out.emplace(head.name, std::move(h));
  }
  return out;
}

LossSpec LossSpec::parse(std::string_view text) {
  if (text == "l2") return l2();
  if (text.starts_with("ohkm:")) {
    const std::string digits(text.substr(5));
    if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit)) {
      const auto k = std::stoul(digits);
      if (k >= 1) return ohkm(k);
    }
  }
  throw ParseError("invalid loss '" + std::string(text) + "' (expected l2 or ohkm:<k>)");
}

std::string LossSpec::to_string() const {
  return kind == Kind::kL2 ? "l2" : "ohkm:" + std::to_string(top_k);
}

std::vector<double> per_joint_mse(std::span<const double> pred, std::span<const float> target,
                                  std::span<const unsigned char> mask, std::size_t joints) {
  if (pred.size() != target.size() || joints == 0 || pred.size() % joints != 0 ||
      mask.size() != joints) {
    throw Error("loss: prediction, target and mask shapes differ");
  }
  const std::size_t P = pred.size() / joints;
  std::vector<double> mse(joints, 0.0);
  for (std::size_t k = 0; k < joints; ++k) {
    if (!mask[k]) continue;
    double acc = 0.0;
    for (std::size_t i = k * P; i < (k + 1) * P; ++i) {
      const double d = pred[i] - static_cast<double>(target[i]);
      acc += d * d;
    }
    mse[k] = acc / static_cast<double>(P);
  }
  return mse;
}

LossValue evaluate_loss(const LossSpec& spec, std::span<const double> pred,
                        std::span<const float> target, std::span<const unsigned char> mask,
                        std::size_t joints, bool with_grad) {
  if (spec.kind == LossSpec::Kind::kOhkm && spec.top_k < 1) throw Error("OHKM needs k >= 1");
  const std::vector<double> mse = per_joint_mse(pred, target, mask, joints);
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < joints; ++k) {
    if (mask[k]) active.push_back(k);
  }
  if (spec.kind == LossSpec::Kind::kOhkm && active.size() > spec.top_k) {
    std::stable_sort(active.begin(), active.end(),
                     [&](std::size_t a, std::size_t b) { return mse[a] > mse[b]; });
    active.resize(spec.top_k);
  }
  LossValue out;
  if (with_grad) out.grad.assign(pred.size(), 0.0);
  if (active.empty()) return out;
  const double n = static_cast<double>(active.size());
  for (std::size_t k : active) out.loss += mse[k];
  out.loss /= n;
  if (with_grad) {
    const std::size_t P = pred.size() / joints;
    const double scale = 2.0 / (static_cast<double>(P) * n);
    for (std::size_t k : active) {
      for (std::size_t i = k * P; i < (k + 1) * P; ++i) {
        out.grad[i] = scale * (pred[i] - static_cast<double>(target[i]));
      }
    }
  }
  return out;
}

namespace {

double heatmap_loss(const LossSpec& spec, const Heatmap& pred, const Heatmap& target,
                    std::span<const unsigned char> mask) {
  if (!pred.same_shape(target)) throw Error("loss: prediction and target shapes differ");
  std::vector<double> p(pred.values().begin(), pred.values().end());
  return evaluate_loss(spec, p, target.values(), mask, pred.channels(), false).loss;
}

}  // namespace

double loss_l2_masked(const Heatmap& pred, const Heatmap& target,
                      std::span<const unsigned char> mask) {
  return heatmap_loss(LossSpec::l2(), pred, target, mask);
}

double loss_ohkm(const Heatmap& pred, const Heatmap& target, std::span<const unsigned char> mask,
                 std::size_t k) {
  return heatmap_loss(LossSpec::ohkm(k), pred, target, mask);
}

ParameterSet zero_like(const ParameterSet& params) {
  ParameterSet out = params;
  for (auto& b : out) std::fill(b.values.begin(), b.values.end(), 0.0);
  return out;
}

double batch_loss(const ToyNetwork& net, std::span<const Sample> batch, const LossSpec& loss) {
  if (batch.empty()) throw Error("empty batch");
  double total = 0.0;
  for (const auto& s : batch) {
    const BackboneActivations act = forward_backbone(net, s.input);
    const Tensor3 out = forward_head(net, act.features, s.head);
    total += evaluate_loss(loss, out.data, s.target.values(), s.mask, out.channels, false).loss;
  }
  return total / static_cast<double>(batch.size());
}

ParameterSet gradients(const ToyNetwork& net, std::span<const Sample> batch, const LossSpec& loss,
                       double* loss_out) {
  if (batch.empty()) throw Error("empty batch");
  const auto& cfg = net.config();
  const auto& p = net.parameters();
  ParameterSet grad = zero_like(p);
  const bool backbone_frozen = net.frozen().contains("backbone");
  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;

  for (const auto& s : batch) {
    const std::size_t h = head_index(cfg, s.head);
    const BackboneActivations act = forward_backbone(net, s.input);
    const Tensor3 out = forward_head(net, act.features, s.head);
    LossValue lv = evaluate_loss(loss, out.data, s.target.values(), s.mask, out.channels, true);
    total += lv.loss;

    const std::size_t K = out.channels;
    const std::size_t F = cfg.features;
    const std::size_t P = out.plane();
    for (double& g : lv.grad) g *= inv_batch;

    auto& gw = grad[kFirstHead + 2 * h].values;
    auto& gb = grad[kFirstHead + 2 * h + 1].values;
    const auto& w = p[kFirstHead + 2 * h].values;
    const bool head_frozen = net.frozen().contains("head:" + s.head);
    const std::size_t W = out.width;
    std::vector<double> lanes(W);
    Tensor3 grad_features(F, out.height, out.width);
    for (std::size_t k = 0; k < K; ++k) {
      const double* g = lv.grad.data() + k * P;
      if (!head_frozen) {
        gb[k] += std::accumulate(g, g + P, 0.0);
        for (std::size_t f = 0; f < F; ++f) {
          const double* feat = act.features.data.data() + f * P;
          for (std::size_t i = 0; i < W; ++i) lanes[i] = 0.0;
          for (std::size_t r = 0; r < P; r += W) {
            for (std::size_t i = 0; i < W; ++i) lanes[i] += g[r + i] * feat[r + i];
          }
          gw[k * F + f] += std::accumulate(lanes.begin(), lanes.end(), 0.0);
        }
      }
      if (!backbone_frozen) {
        for (std::size_t f = 0; f < F; ++f) {
          const double wkf = w[k * F + f];
          double* gf = grad_features.data.data() + f * P;
          for (std::size_t i = 0; i < P; ++i) gf[i] += wkf * g[i];
        }
      }
    }
    if (backbone_frozen) continue;

    Tensor3 grad_hidden(F, out.height, out.width);
    conv3x3_backward(act.hidden, p[kConv2W].values, grad_features, grad[kConv2W].values,
                     grad[kConv2B].values, &grad_hidden);
    for (std::size_t i = 0; i < grad_hidden.data.size(); ++i) {
      if (!(act.pre_relu.data[i] > 0.0)) grad_hidden.data[i] = 0.0;
    }
    conv3x3_backward(s.input, p[kConv1W].values, grad_hidden, grad[kConv1W].values,
                     grad[kConv1B].values, nullptr);
  }
  if (loss_out) *loss_out = total * inv_batch;
  return grad;
}

void sgd_update(ToyNetwork& net, const ParameterSet& grad, double learning_rate) {
  auto& params = net.parameters();
  if (grad.size() != params.size()) throw Error("gradient layout does not match the network");
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (net.is_frozen(params[b].name)) continue;
    auto& v = params[b].values;
    const auto& g = grad[b].values;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= learning_rate * g[i];
  }
}

}  // namespace mdpn
