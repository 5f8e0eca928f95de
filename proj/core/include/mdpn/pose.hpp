#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mdpn/skeleton.hpp"

namespace mdpn {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

// Axis-aligned box in image pixels, (x, y) is the top-left corner.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const noexcept { return w * h; }
  friend bool operator==(const Box&, const Box&) = default;
};

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double score = 0.0;
  bool annotated = false;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

// Keypoints of one person in one joint set, as produced by heatmap decoding.
struct DecodedPose {
  std::string joint_set;
  std::vector<Keypoint> keypoints;

  friend bool operator==(const DecodedPose&, const DecodedPose&) = default;
};

// One detected person.
struct PersonInstance {
  Box box;
  double box_score = 0.0;
  // Instance score used for ranking; equals box_score until rescored.
  double score = 0.0;
  std::vector<Keypoint> keypoints;
  std::string joint_set;
  // OKS normalisation area; box area when absent.
  std::optional<double> area;
  std::optional<int> track_id;

  double reference_area() const noexcept { return area.value_or(box.area()); }
  std::size_t annotated_count() const noexcept;

  friend bool operator==(const PersonInstance&, const PersonInstance&) = default;
};

// Re-indexes keypoints into m.to_set. Unmapped target joints are
// not-annotated with zero coordinates.
std::vector<Keypoint> project_keypoints(const std::vector<Keypoint>& keypoints,
                                        const JointMapping& m);

// Throws mdpn::Error when the instance is not tagged with m.from_set or its
// keypoint count disagrees with the mapping.
PersonInstance project(const PersonInstance& instance, const JointMapping& m);
DecodedPose project(const DecodedPose& pose, const JointMapping& m);

}  // namespace mdpn
