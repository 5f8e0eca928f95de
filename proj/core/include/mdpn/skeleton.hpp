#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mdpn {

// Named keypoint vocabulary of one dataset (domain).
//
// Joint names are anatomical identifiers such as "left_wrist". Two names
// denote the same anatomical joint when their canonical forms agree; the only
// alias in the builtin vocabularies is PoseTrack's head_bottom == upper_neck.
struct JointSet {
  std::string name;
  std::vector<std::string> joints;
  std::vector<std::pair<std::size_t, std::size_t>> flip_pairs;

  std::size_t count() const noexcept { return joints.size(); }

  // Index of the joint anatomically equal to `joint`, if present.
  std::optional<std::size_t> index_of(std::string_view joint) const;

  // Throws mdpn::Error on duplicate names, out-of-range or repeated flip pairs.
  void validate() const;

  friend bool operator==(const JointSet&, const JointSet&) = default;
};

// head_bottom -> upper_neck; every other name maps to itself.
std::string_view canonical_joint(std::string_view joint) noexcept;

// Builtin vocabularies: "merged" (21), "coco" (17), "mpii" (16),
// "posetrack" (15). Joint order is part of the file-format contract.
// Throws mdpn::Error for unknown names.
const JointSet& builtin_joint_set(std::string_view name);
const std::vector<std::string>& builtin_joint_set_names();

struct JointMapping {
  std::string from_set;
  std::string to_set;
  std::size_t from_count = 0;
  std::size_t to_count = 0;
  // (from_index, to_index), ascending in from_index.
  std::vector<std::pair<std::size_t, std::size_t>> index_map;

  std::optional<std::size_t> target_of(std::size_t from_index) const;
};

// Pairs every joint of `from` with the anatomically equal joint of `to`.
JointMapping mapping(const JointSet& from, const JointSet& to);
JointMapping mapping(std::string_view from, std::string_view to);

// Lookup of builtin plus user-registered joint sets.
class JointSetRegistry {
 public:
  JointSetRegistry();

  // Registers (or replaces) a custom set. Builtin names cannot be replaced.
  void add(JointSet set);
  bool contains(std::string_view name) const;
  const JointSet& get(std::string_view name) const;

 private:
  std::map<std::string, JointSet, std::less<>> sets_;
};

// Registry with only the builtin sets.
const JointSetRegistry& default_registry();

// JSON description: {"name": ..., "joints": [...], "flip_pairs": [[a, b], ...]}.
void to_json(nlohmann::json& j, const JointSet& set);
void from_json(const nlohmann::json& j, JointSet& set);

}  // namespace mdpn
