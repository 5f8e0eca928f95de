#include "mdpn/fusion.hpp"

#include <algorithm>
#include <vector>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

constexpr std::string_view kHeadTop = "head_top";
constexpr std::string_view kHeadBottom = "upper_neck";

const Heatmap& require_branch(const BranchOutputs& b, std::string_view branch) {
  if (!b.contains(branch)) throw Error("branch '" + std::string(branch) + "' is not present");
  return b.at(branch);
}

}  // namespace

void BranchOutputs::add(Heatmap heatmap) {
  if (heatmap.joint_set().empty()) throw Error("branch heatmap has no joint set");
  if (contains(heatmap.joint_set())) {
    throw Error("branch '" + heatmap.joint_set() + "' added twice");
  }
  if (!branches_.empty()) {
    const Heatmap& first = branches_.begin()->second;
    if (first.height() != heatmap.height() || first.width() != heatmap.width() ||
        !(first.geometry() == heatmap.geometry())) {
      throw Error("branch '" + heatmap.joint_set() + "' geometry differs from other branches");
    }
  }
  std::string key = heatmap.joint_set();
  branches_.emplace(std::move(key), std::move(heatmap));
}

bool BranchOutputs::contains(std::string_view branch) const {
  return branches_.find(branch) != branches_.end();
}

const Heatmap& BranchOutputs::at(std::string_view branch) const {
  auto it = branches_.find(branch);
  if (it == branches_.end()) throw Error("branch '" + std::string(branch) + "' is not present");
  return it->second;
}

HeadEstimate interpolate_head(const DecodedPose& pose, const HeadInterpolation& coefficients,
                              const JointSetRegistry& registry) {
  HeadEstimate out;
  const JointSet& set = registry.get(pose.joint_set);
  const auto nose_i = set.index_of("nose");
  const auto ls_i = set.index_of("left_shoulder");
  const auto rs_i = set.index_of("right_shoulder");
  if (!nose_i || !ls_i || !rs_i) return out;
  const Keypoint& nose = pose.keypoints.at(*nose_i);
  const Keypoint& ls = pose.keypoints.at(*ls_i);
  const Keypoint& rs = pose.keypoints.at(*rs_i);
  if (!nose.annotated || !ls.annotated || !rs.annotated) return out;

  const double mid_x = 0.5 * (ls.x + rs.x);
  const double mid_y = 0.5 * (ls.y + rs.y);
  const double axis_x = nose.x - mid_x;
  const double axis_y = nose.y - mid_y;
  const double score = (nose.score + ls.score + rs.score) / 3.0;
  out.head_bottom = Keypoint{mid_x + coefficients.bottom_ratio * axis_x,
                             mid_y + coefficients.bottom_ratio * axis_y, score, true};
  out.head_top = Keypoint{nose.x + coefficients.top_ratio * axis_x,
                          nose.y + coefficients.top_ratio * axis_y, score, true};
  return out;
}

DecodedPose fuse_select(const BranchOutputs& b, std::string_view branch, const JointSet& target,
                        const FusionOptions& options, const JointSetRegistry& registry) {
  const Heatmap& h = require_branch(b, branch);
  const JointSet& source = registry.get(h.joint_set());
  const DecodedPose decoded = decode(h, options.decode);
  DecodedPose out = project(decoded, mapping(source, target));

  const auto top_t = target.index_of(kHeadTop);
  const auto bottom_t = target.index_of(kHeadBottom);
  const bool need_top = top_t && !source.index_of(kHeadTop);
  const bool need_bottom = bottom_t && !source.index_of(kHeadBottom);
  if (need_top || need_bottom) {
    const HeadEstimate head = interpolate_head(decoded, options.head, registry);
    if (need_top) out.keypoints[*top_t] = head.head_top;
    if (need_bottom) out.keypoints[*bottom_t] = head.head_bottom;
  }
  return out;
}

DecodedPose fuse_head_swap(const BranchOutputs& b, std::string_view body_branch,
                           std::string_view head_branch, const JointSet& target,
                           const FusionOptions& options, const JointSetRegistry& registry) {
  const Heatmap& head_map = require_branch(b, head_branch);
  const JointSet& head_set = registry.get(head_map.joint_set());
  if (!head_set.index_of(kHeadTop)) {
    throw Error("branch '" + std::string(head_branch) + "' has no head joints");
  }
  require_branch(b, body_branch);
  DecodedPose out = fuse_select(b, body_branch, target, options, registry);
  const DecodedPose head_pose = decode(head_map, options.decode);
  for (std::string_view joint : {kHeadTop, kHeadBottom}) {
    const auto t = target.index_of(joint);
    const auto s = head_set.index_of(joint);
    if (t && s) out.keypoints[*t] = head_pose.keypoints[*s];
  }
  return out;
}

DecodedPose fuse_vote(const BranchOutputs& b, const JointSet& target, const FusionOptions& options,
                      const JointSetRegistry& registry) {
  if (b.empty()) throw Error("fuse_vote needs at least one branch");
  const Heatmap& first = b.branches().begin()->second;
  Heatmap averaged(target.count(), first.height(), first.width(), target.name, first.geometry());

  std::vector<const float*> sources;
  std::vector<double> acc(first.plane_size());
  for (std::size_t t = 0; t < target.count(); ++t) {
    sources.clear();
    for (const auto& [name, h] : b.branches()) {
      const JointSet& set = registry.get(h.joint_set());
      if (auto k = set.index_of(target.joints[t])) sources.push_back(h.channel(*k).data());
    }
    if (sources.empty()) continue;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (const float* src : sources) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += static_cast<double>(src[i]);
    }
    auto dst = averaged.channel(t);
    const double n = static_cast<double>(sources.size());
    for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i] / n);
  }
  return decode(averaged, options.decode);
}

FusionStrategy FusionStrategy::parse(std::string_view text) {
  FusionStrategy s;
  if (text == "vote") {
    s.kind = Kind::kVote;
    s.body.clear();
    s.head.clear();
    return s;
  }
  if (text.starts_with("select:") && text.size() > 7) {
    s.kind = Kind::kSelect;
    s.body = std::string(text.substr(7));
    s.head.clear();
    return s;
  }
  if (text.starts_with("head-swap:")) {
    const auto rest = text.substr(10);
    const auto comma = rest.find(',');
    if (comma != std::string_view::npos && comma > 0 && comma + 1 < rest.size()) {
      s.kind = Kind::kHeadSwap;
      s.body = std::string(rest.substr(0, comma));
      s.head = std::string(rest.substr(comma + 1));
      return s;
    }
  }
  throw ParseError("invalid fusion strategy '" + std::string(text) +
                   "' (expected select:<branch>, head-swap:<body>,<head> or vote)");
}

std::string FusionStrategy::to_string() const {
  switch (kind) {
    case Kind::kSelect:
      return "select:" + body;
    case Kind::kHeadSwap:
      return "head-swap:" + body + "," + head;
    case Kind::kVote:
      return "vote";
  }
  return {};
}

DecodedPose fuse(const BranchOutputs& b, const FusionStrategy& strategy, const JointSet& target,
                 const FusionOptions& options, const JointSetRegistry& registry) {
  switch (strategy.kind) {
    case FusionStrategy::Kind::kSelect:
      return fuse_select(b, strategy.body, target, options, registry);
    case FusionStrategy::Kind::kHeadSwap:
      return fuse_head_swap(b, strategy.body, strategy.head, target, options, registry);
    case FusionStrategy::Kind::kVote:
      return fuse_vote(b, target, options, registry);
  }
  throw Error("unknown fusion strategy");
}

}  // namespace mdpn
