#include "mdpn/skeleton.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

std::vector<std::pair<std::size_t, std::size_t>> derive_flip_pairs(
    const std::vector<std::string>& joints) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const std::string_view name = joints[i];
    if (!name.starts_with("left_")) continue;
    const std::string right = "right_" + std::string(name.substr(5));
    for (std::size_t j = 0; j < joints.size(); ++j) {
      if (joints[j] == right) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

JointSet make_set(std::string name, std::vector<std::string> joints) {
  JointSet set{std::move(name), std::move(joints), {}};
  set.flip_pairs = derive_flip_pairs(set.joints);
  set.validate();
  return set;
}

struct Builtins {
  std::vector<JointSet> sets;
  std::vector<std::string> names;

  Builtins() {
    sets.push_back(make_set(
        "merged", {"nose",           "left_eye",       "right_eye",   "left_ear",
                   "right_ear",      "left_shoulder",  "right_shoulder",
                   "left_elbow",     "right_elbow",    "left_wrist",  "right_wrist",
                   "left_hip",       "right_hip",      "left_knee",   "right_knee",
                   "left_ankle",     "right_ankle",    "head_top",    "upper_neck",
                   "thorax",         "pelvis"}));
    sets.push_back(make_set(
        "coco", {"nose",          "left_eye",       "right_eye",  "left_ear",
                 "right_ear",     "left_shoulder",  "right_shoulder",
                 "left_elbow",    "right_elbow",    "left_wrist", "right_wrist",
                 "left_hip",      "right_hip",      "left_knee",  "right_knee",
                 "left_ankle",    "right_ankle"}));
    sets.push_back(make_set(
        "mpii", {"right_ankle", "right_knee",     "right_hip",     "left_hip",
                 "left_knee",   "left_ankle",     "pelvis",        "thorax",
                 "upper_neck",  "head_top",       "right_wrist",   "right_elbow",
                 "right_shoulder", "left_shoulder", "left_elbow",  "left_wrist"}));
    sets.push_back(make_set(
        "posetrack", {"right_ankle",    "right_knee",    "right_hip",   "left_hip",
                      "left_knee",      "left_ankle",    "right_wrist", "right_elbow",
                      "right_shoulder", "left_shoulder", "left_elbow",  "left_wrist",
                      "head_bottom",    "nose",          "head_top"}));
    for (const auto& s : sets) names.push_back(s.name);
  }
};

const Builtins& builtins() {
  static const Builtins instance;
  return instance;
}

}  // namespace

std::string_view canonical_joint(std::string_view joint) noexcept {
  if (joint == "head_bottom") return "upper_neck";
  return joint;
}

std::optional<std::size_t> JointSet::index_of(std::string_view joint) const {
  const std::string_view wanted = canonical_joint(joint);
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (canonical_joint(joints[i]) == wanted) return i;
  }
  return std::nullopt;
}

void JointSet::validate() const {
  if (name.empty()) throw Error("joint set has an empty name");
  std::set<std::string_view> seen;
  for (const auto& j : joints) {
    if (j.empty()) throw Error("joint set '" + name + "' has an empty joint name");
    if (!seen.insert(canonical_joint(j)).second) {
      throw Error("joint set '" + name + "' repeats joint '" + j + "'");
    }
  }
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  std::set<std::size_t> used;
  for (const auto& [a, b] : flip_pairs) {
    if (a >= joints.size() || b >= joints.size() || a == b) {
      throw Error("joint set '" + name + "' has an invalid flip pair");
    }
    if (pairs.contains({b, a}) || !pairs.insert({a, b}).second) {
      throw Error("joint set '" + name + "' lists a flip pair twice");
    }
    if (!used.insert(a).second || !used.insert(b).second) {
      throw Error("joint set '" + name + "' uses a joint in two flip pairs");
    }
  }
}

const JointSet& builtin_joint_set(std::string_view name) {
  for (const auto& s : builtins().sets) {
    if (s.name == name) return s;
  }
  throw Error("unknown joint set '" + std::string(name) + "'");
}

const std::vector<std::string>& builtin_joint_set_names() { return builtins().names; }

std::optional<std::size_t> JointMapping::target_of(std::size_t from_index) const {
  for (const auto& [f, t] : index_map) {
    if (f == from_index) return t;
  }
  return std::nullopt;
}

JointMapping mapping(const JointSet& from, const JointSet& to) {
  JointMapping m{from.name, to.name, from.count(), to.count(), {}};
  for (std::size_t i = 0; i < from.count(); ++i) {
    if (auto j = to.index_of(from.joints[i])) m.index_map.emplace_back(i, *j);
  }
  return m;
}

JointMapping mapping(std::string_view from, std::string_view to) {
  return mapping(builtin_joint_set(from), builtin_joint_set(to));
}

JointSetRegistry::JointSetRegistry() {
  for (const auto& s : builtins().sets) sets_.emplace(s.name, s);
}

void JointSetRegistry::add(JointSet set) {
  set.validate();
  for (const auto& b : builtins().names) {
    if (b == set.name) throw Error("cannot replace builtin joint set '" + b + "'");
  }
  std::string key = set.name;
  sets_.insert_or_assign(std::move(key), std::move(set));
}

bool JointSetRegistry::contains(std::string_view name) const {
  return sets_.find(name) != sets_.end();
}

const JointSet& JointSetRegistry::get(std::string_view name) const {
  auto it = sets_.find(name);
  if (it == sets_.end()) throw Error("unknown joint set '" + std::string(name) + "'");
  return it->second;
}

const JointSetRegistry& default_registry() {
  static const JointSetRegistry registry;
  return registry;
}

void to_json(nlohmann::json& j, const JointSet& set) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& [a, b] : set.flip_pairs) pairs.push_back({a, b});
  j = nlohmann::json{{"name", set.name}, {"joints", set.joints}, {"flip_pairs", pairs}};
}

void from_json(const nlohmann::json& j, JointSet& set) {
  try {
    set.name = j.at("name").get<std::string>();
    set.joints = j.at("joints").get<std::vector<std::string>>();
    set.flip_pairs.clear();
    if (j.contains("flip_pairs")) {
      for (const auto& p : j.at("flip_pairs")) {
        if (!p.is_array() || p.size() != 2) throw ParseError("flip pair must be [a, b]");
        set.flip_pairs.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("joint set description: ") + e.what());
  }
  set.validate();
}

}  // namespace mdpn
