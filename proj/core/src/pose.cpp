#include "mdpn/pose.hpp"

#include <algorithm>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

void check_source(const std::string& tag, std::size_t count, const JointMapping& m) {
  if (tag != m.from_set) {
    throw Error("cannot project a '" + tag + "' pose with a mapping from '" + m.from_set + "'");
  }
  if (count != m.from_count) {
    throw Error("pose has " + std::to_string(count) + " keypoints but joint set '" +
                m.from_set + "' has " + std::to_string(m.from_count));
  }
}

}  // namespace

std::size_t PersonInstance::annotated_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(keypoints.begin(), keypoints.end(), [](const Keypoint& k) { return k.annotated; }));
}

std::vector<Keypoint> project_keypoints(const std::vector<Keypoint>& keypoints,
                                        const JointMapping& m) {
  std::vector<Keypoint> out(m.to_count);
  for (const auto& [from, to] : m.index_map) out[to] = keypoints.at(from);
  return out;
}

PersonInstance project(const PersonInstance& instance, const JointMapping& m) {
  check_source(instance.joint_set, instance.keypoints.size(), m);
  PersonInstance out = instance;
  out.keypoints = project_keypoints(instance.keypoints, m);
  out.joint_set = m.to_set;
  return out;
}

DecodedPose project(const DecodedPose& pose, const JointMapping& m) {
  check_source(pose.joint_set, pose.keypoints.size(), m);
  return DecodedPose{m.to_set, project_keypoints(pose.keypoints, m)};
}

}  // namespace mdpn
