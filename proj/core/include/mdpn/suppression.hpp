#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdpn/pose.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {

// Per-joint OKS fall-off constants k_i, keyed by canonical joint name.
// OKS term for joint i: exp(-d_i^2 / (2 * area * k_i^2)).
class OksConstants {
 public:
  // COCO constants (k = 2 * sigma_coco) for the 17 COCO joints; head_top,
  // upper_neck, thorax and pelvis use k = 2 * 0.079.
  OksConstants();

  double k(std::string_view joint) const;
  // Throws mdpn::Error unless k > 0.
  void set(std::string_view joint, double k);
  std::vector<double> for_set(const JointSet& set) const;
  const std::map<std::string, double, std::less<>>& values() const noexcept { return k_; }

 private:
  std::map<std::string, double, std::less<>> k_;
};

// OKS of b against reference a, normalised by a.reference_area(). Averages
// over joints annotated in both; 0 when there are none. Throws mdpn::Error
// when the joint sets differ.
double oks(const PersonInstance& a, const PersonInstance& b, std::span<const double> k);
double oks(const PersonInstance& a, const PersonInstance& b, const OksConstants& consts,
           const JointSetRegistry& registry = default_registry());

// Greedy OKS suppression ordered by instance score (descending, ties by
// input order). Returns kept indices in selection order.
std::vector<std::size_t> oks_nms(std::span<const PersonInstance> instances, double threshold,
                                 const OksConstants& consts,
                                 const JointSetRegistry& registry = default_registry());

double box_iou(const Box& a, const Box& b) noexcept;

// Greedy IoU suppression; same ordering rules as oks_nms.
std::vector<std::size_t> box_nms(std::span<const Box> boxes, std::span<const double> scores,
                                 double threshold);

// score := box_score * mean keypoint score over annotated joints (0 when
// nothing is annotated).
PersonInstance rescore(const PersonInstance& p);

// Drops instances with score < box_thr, then marks keypoints with
// score < kp_thr as not-annotated.
std::vector<PersonInstance> apply_thresholds(std::vector<PersonInstance> instances, double box_thr,
                                             double kp_thr);

}  // namespace mdpn
