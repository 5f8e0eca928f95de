#include "mdpn/suppression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

std::vector<std::size_t> score_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

template <typename Overlap>
std::vector<std::size_t> greedy_suppress(std::span<const double> scores, double threshold,
                                         Overlap overlap) {
  if (!(threshold > 0.0) || threshold > 1.0) throw Error("NMS threshold must lie in (0, 1]");
  std::vector<std::size_t> kept;
  std::vector<bool> suppressed(scores.size(), false);
  for (std::size_t i : score_order(scores)) {
    if (suppressed[i]) continue;
    kept.push_back(i);
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (!suppressed[j] && j != i && overlap(i, j) >= threshold) suppressed[j] = true;
    }
    suppressed[i] = true;
  }
  return kept;
}

}  // namespace

OksConstants::OksConstants() {
  const std::pair<const char*, double> coco_sigmas[] = {
      {"nose", 0.026},          {"left_eye", 0.025},    {"right_eye", 0.025},
      {"left_ear", 0.035},      {"right_ear", 0.035},   {"left_shoulder", 0.079},
      {"right_shoulder", 0.079}, {"left_elbow", 0.072}, {"right_elbow", 0.072},
      {"left_wrist", 0.062},    {"right_wrist", 0.062}, {"left_hip", 0.107},
      {"right_hip", 0.107},     {"left_knee", 0.087},   {"right_knee", 0.087},
      {"left_ankle", 0.089},    {"right_ankle", 0.089}, {"head_top", 0.079},
      {"upper_neck", 0.079},    {"thorax", 0.079},      {"pelvis", 0.079},
  };
  for (const auto& [name, sigma] : coco_sigmas) k_.emplace(name, 2.0 * sigma);
}

double OksConstants::k(std::string_view joint) const {
  auto it = k_.find(canonical_joint(joint));
  if (it == k_.end()) throw Error("no OKS constant for joint '" + std::string(joint) + "'");
  return it->second;
}

void OksConstants::set(std::string_view joint, double k) {
  if (!(k > 0.0)) throw Error("OKS constants must be positive");
  k_.insert_or_assign(std::string(canonical_joint(joint)), k);
}

std::vector<double> OksConstants::for_set(const JointSet& set) const {
  std::vector<double> out;
  out.reserve(set.count());
  for (const auto& j : set.joints) out.push_back(k(j));
  return out;
}

double oks(const PersonInstance& a, const PersonInstance& b, std::span<const double> k) {
  if (a.joint_set != b.joint_set) {
    throw Error("oks: joint sets differ ('" + a.joint_set + "' vs '" + b.joint_set + "')");
  }
  if (a.keypoints.size() != b.keypoints.size() || a.keypoints.size() != k.size()) {
    throw Error("oks: keypoint counts differ");
  }
  const double area = a.reference_area();
  if (!(area > 0.0)) throw Error("oks: reference area must be positive");
  double total = 0.0;
  std::size_t shared = 0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const Keypoint& p = a.keypoints[i];
    const Keypoint& q = b.keypoints[i];
    if (!p.annotated || !q.annotated) continue;
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    total += std::exp(-(dx * dx + dy * dy) / (2.0 * area * k[i] * k[i]));
    ++shared;
  }
  return shared == 0 ? 0.0 : total / static_cast<double>(shared);
}

double oks(const PersonInstance& a, const PersonInstance& b, const OksConstants& consts,
           const JointSetRegistry& registry) {
  if (a.joint_set != b.joint_set) {
    throw Error("oks: joint sets differ ('" + a.joint_set + "' vs '" + b.joint_set + "')");
  }
  return oks(a, b, consts.for_set(registry.get(a.joint_set)));
}

std::vector<std::size_t> oks_nms(std::span<const PersonInstance> instances, double threshold,
                                 const OksConstants& consts, const JointSetRegistry& registry) {
  std::vector<double> scores;
  scores.reserve(instances.size());
  for (const auto& p : instances) scores.push_back(p.score);
  std::vector<double> k;
  if (!instances.empty()) k = consts.for_set(registry.get(instances.front().joint_set));
  return greedy_suppress(scores, threshold, [&](std::size_t ref, std::size_t other) {
    return oks(instances[ref], instances[other], k);
  });
}

double box_iou(const Box& a, const Box& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<std::size_t> box_nms(std::span<const Box> boxes, std::span<const double> scores,
                                 double threshold) {
  if (boxes.size() != scores.size()) throw Error("box_nms: boxes and scores differ in length");
  return greedy_suppress(scores, threshold, [&](std::size_t ref, std::size_t other) {
    return box_iou(boxes[ref], boxes[other]);
  });
}

PersonInstance rescore(const PersonInstance& p) {
  PersonInstance out = p;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& k : p.keypoints) {
    if (!k.annotated) continue;
    sum += k.score;
    ++n;
  }
  out.score = n == 0 ? 0.0 : p.box_score * (sum / static_cast<double>(n));
  return out;
}

std::vector<PersonInstance> apply_thresholds(std::vector<PersonInstance> instances, double box_thr,
                                             double kp_thr) {
  if (box_thr < 0.0 || kp_thr < 0.0) throw Error("thresholds must be non-negative");
  std::erase_if(instances, [&](const PersonInstance& p) { return p.score < box_thr; });
  for (auto& p : instances) {
    for (auto& k : p.keypoints) {
      if (k.score < kp_thr) k.annotated = false;
    }
  }
  return instances;
}

}  // namespace mdpn
