#pragma once

#include <map>
#include <string>
#include <string_view>

#include "mdpn/heatmap.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {

// Heatmaps of every domain head for one person crop, keyed by joint-set name.
class BranchOutputs {
 public:
  BranchOutputs() = default;

  // Throws mdpn::Error if the branch is unnamed, already present, or its grid
  // shape or geometry differs from the branches added before.
  void add(Heatmap heatmap);

  bool contains(std::string_view branch) const;
  const Heatmap& at(std::string_view branch) const;
  const std::map<std::string, Heatmap, std::less<>>& branches() const noexcept { return branches_; }
  bool empty() const noexcept { return branches_.empty(); }

 private:
  std::map<std::string, Heatmap, std::less<>> branches_;
};

// Head joints estimated along the shoulder-midpoint -> nose axis:
//   head_bottom = mid + bottom_ratio * (nose - mid)
//   head_top    = nose + top_ratio * (nose - mid)
struct HeadInterpolation {
  double bottom_ratio = 0.5;
  double top_ratio = 1.0;
};

struct FusionOptions {
  DecodeOptions decode;
  HeadInterpolation head;
};

struct HeadEstimate {
  Keypoint head_top;
  Keypoint head_bottom;
};

// Needs nose, left_shoulder and right_shoulder annotated in `pose`;
// otherwise both results are not-annotated.
HeadEstimate interpolate_head(const DecodedPose& pose, const HeadInterpolation& coefficients = {},
                              const JointSetRegistry& registry = default_registry());

// Decodes one branch and projects it into `target`. Head joints the branch
// vocabulary lacks are interpolated from nose and shoulders.
DecodedPose fuse_select(const BranchOutputs& b, std::string_view branch, const JointSet& target,
                        const FusionOptions& options = {},
                        const JointSetRegistry& registry = default_registry());

// fuse_select(body_branch) with head_top / head_bottom replaced by the
// decode of head_branch.
DecodedPose fuse_head_swap(const BranchOutputs& b, std::string_view body_branch,
                           std::string_view head_branch, const JointSet& target,
                           const FusionOptions& options = {},
                           const JointSetRegistry& registry = default_registry());

// Averages, per target joint, the channels of every branch that has the
// joint (uniform weights), then decodes the averaged maps.
DecodedPose fuse_vote(const BranchOutputs& b, const JointSet& target,
                      const FusionOptions& options = {},
                      const JointSetRegistry& registry = default_registry());

// Textual strategy: "select:<branch>", "head-swap:<body>,<head>" or "vote".
struct FusionStrategy {
  enum class Kind { kSelect, kHeadSwap, kVote };

  Kind kind = Kind::kHeadSwap;
  std::string body = "coco";
  std::string head = "mpii";

  static FusionStrategy parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const FusionStrategy&, const FusionStrategy&) = default;
};

DecodedPose fuse(const BranchOutputs& b, const FusionStrategy& strategy, const JointSet& target,
                 const FusionOptions& options = {},
                 const JointSetRegistry& registry = default_registry());

}  // namespace mdpn
