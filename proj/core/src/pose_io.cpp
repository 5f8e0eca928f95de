#include "mdpn/pose_io.hpp"

#include <cmath>
#include <optional>
#include <set>

#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"
#include "mdpn/heatmap_io.hpp"

namespace mdpn {
namespace {

using nlohmann::json;

// Parsing context: file name plus the frame being read.
struct Where {
  std::string file;
  std::optional<int> frame;

  [[noreturn]] void fail(const std::string& detail) const { throw ParseError(detail, file, frame); }
};

json parse_json(std::string_view text, const Where& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    where.fail(std::string("invalid JSON: ") + e.what());
  }
}

const json& field(const json& obj, const char* key, const Where& where) {
  if (!obj.is_object()) where.fail("expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) where.fail(std::string("missing key '") + key + "'");
  return *it;
}

double number(const json& v, const char* what, const Where& where) {
  if (!v.is_number()) where.fail(std::string(what) + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) where.fail(std::string(what) + " must be finite");
  return d;
}

int integer(const json& v, const char* what, const Where& where) {
  if (!v.is_number_integer()) where.fail(std::string(what) + " must be an integer");
  return v.get<int>();
}

const json& array(const json& v, const char* what, const Where& where) {
  if (!v.is_array()) where.fail(std::string(what) + " must be an array");
  return v;
}

void check_keys(const json& obj, std::initializer_list<std::string_view> allowed, const Where& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) where.fail("unknown key '" + key + "'");
  }
}

Box parse_box(const json& v, const Where& where) {
  if (!v.is_array() || v.size() != 4) where.fail("box must be [x, y, w, h]");
  Box b{number(v[0], "box", where), number(v[1], "box", where), number(v[2], "box", where),
        number(v[3], "box", where)};
  if (b.w < 0.0 || b.h < 0.0) where.fail("box width and height must be non-negative");
  return b;
}

json box_json(const Box& b) { return json::array({b.x, b.y, b.w, b.h}); }

const JointSet& joint_set_of(const json& doc, const JointSetRegistry& registry, const Where& where) {
  const json& name = field(doc, "joint_set", where);
  if (!name.is_string()) where.fail("joint_set must be a string");
  const std::string n = name.get<std::string>();
  if (!registry.contains(n)) where.fail("unknown joint set '" + n + "'");
  return registry.get(n);
}

std::vector<Keypoint> parse_keypoints(const json& obj, const JointSet& set, const Where& where) {
  const json& flat = array(field(obj, "keypoints", where), "keypoints", where);
  const std::size_t K = set.count();
  if (flat.size() != 3 * K) {
    where.fail("keypoints must hold 3 x " + std::to_string(K) + " numbers for joint set '" +
               set.name + "', got " + std::to_string(flat.size()));
  }
  std::vector<Keypoint> kps(K);
  for (std::size_t k = 0; k < K; ++k) {
    kps[k].x = number(flat[3 * k], "keypoint x", where);
    kps[k].y = number(flat[3 * k + 1], "keypoint y", where);
    kps[k].score = number(flat[3 * k + 2], "keypoint score", where);
    kps[k].annotated = true;
  }
  if (auto it = obj.find("annotated"); it != obj.end()) {
    const json& bits = array(*it, "annotated", where);
    if (bits.size() != K) where.fail("annotated must hold " + std::to_string(K) + " entries");
    for (std::size_t k = 0; k < K; ++k) {
      const int b = integer(bits[k], "annotated entry", where);
      if (b != 0 && b != 1) where.fail("annotated entries must be 0 or 1");
      kps[k].annotated = b == 1;
    }
  }
  return kps;
}

void emit_keypoints(json& obj, const std::vector<Keypoint>& kps) {
  json flat = json::array();
  json bits = json::array();
  for (const auto& k : kps) {
    flat.push_back(k.x);
    flat.push_back(k.y);
    flat.push_back(k.score);
    bits.push_back(k.annotated ? 1 : 0);
  }
  obj["keypoints"] = std::move(flat);
  obj["annotated"] = std::move(bits);
}

// Walks "frames", checking that frame indices increase strictly.
template <typename Fn>
void for_each_frame(const json& doc, Where& where, Fn&& fn) {
  const json& frames = array(field(doc, "frames", where), "frames", where);
  std::optional<int> previous;
  for (const json& f : frames) {
    where.frame.reset();
    const int index = integer(field(f, "frame_index", where), "frame_index", where);
    where.frame = index;
    if (previous && index <= *previous) where.fail("frame indices must increase strictly");
    previous = index;
    fn(f, index);
  }
  where.frame.reset();
}

PersonInstance parse_instance(const json& obj, const JointSet& set, const Where& where) {
  check_keys(obj, {"box", "box_score", "score", "keypoints", "annotated", "track_id", "area"}, where);
  PersonInstance p;
  p.joint_set = set.name;
  p.box = parse_box(field(obj, "box", where), where);
  p.box_score = number(field(obj, "box_score", where), "box_score", where);
  p.score = obj.contains("score") ? number(obj["score"], "score", where) : p.box_score;
  p.keypoints = parse_keypoints(obj, set, where);
  if (obj.contains("track_id")) p.track_id = integer(obj["track_id"], "track_id", where);
  if (obj.contains("area")) {
    p.area = number(obj["area"], "area", where);
    if (*p.area <= 0.0) where.fail("area must be positive");
  }
  return p;
}

json instance_json(const PersonInstance& p) {
  json obj = {{"box", box_json(p.box)}, {"box_score", p.box_score}, {"score", p.score}};
  emit_keypoints(obj, p.keypoints);
  if (p.track_id) obj["track_id"] = *p.track_id;
  if (p.area) obj["area"] = *p.area;
  return obj;
}

std::string finish(const json& doc) { return doc.dump() + "\n"; }

template <typename T, typename Parse>
T read_with_name(const std::filesystem::path& path, Parse&& parse) {
  std::string text;
  try {
    text = binary::read_file(path);
  } catch (const ParseError& e) {
    throw e.with_file(path.string());
  }
  return parse(text, path.string());
}

}  // namespace

PoseFile parse_pose_file(std::string_view text, std::string_view file,
                         const JointSetRegistry& registry) {
  Where where{std::string(file), std::nullopt};
  const json doc = parse_json(text, where);
  check_keys(doc, {"joint_set", "frames"}, where);
  PoseFile out;
  const JointSet& set = joint_set_of(doc, registry, where);
  out.joint_set = set.name;
  for_each_frame(doc, where, [&](const json& f, int index) {
    check_keys(f, {"frame_index", "instances"}, where);
    PredictionFrame frame;
    frame.frame_index = index;
    for (const json& inst : array(field(f, "instances", where), "instances", where)) {
      frame.instances.push_back(parse_instance(inst, set, where));
    }
    out.frames.push_back(std::move(frame));
  });
  return out;
}

GroundTruthFile parse_gt_file(std::string_view text, std::string_view file,
                              double head_size_factor, const JointSetRegistry& registry) {
  Where where{std::string(file), std::nullopt};
  const json doc = parse_json(text, where);
  check_keys(doc, {"joint_set", "frames"}, where);
  GroundTruthFile out;
  const JointSet& set = joint_set_of(doc, registry, where);
  out.joint_set = set.name;
  for_each_frame(doc, where, [&](const json& f, int index) {
    check_keys(f, {"frame_index", "people"}, where);
    GroundTruthFrame frame;
    frame.frame_index = index;
    std::set<int> ids;
    for (const json& obj : array(field(f, "people", where), "people", where)) {
      check_keys(obj, {"person_id", "head_size", "head_box", "box", "box_score", "score",
                       "keypoints", "annotated"},
                 where);
      GroundTruthPerson g;
      g.person_id = integer(field(obj, "person_id", where), "person_id", where);
      if (!ids.insert(g.person_id).second) where.fail("duplicate person_id in frame");
      if (obj.contains("head_size")) {
        g.head_size = number(obj["head_size"], "head_size", where);
      } else if (obj.contains("head_box")) {
        g.head_size = head_size_from_box(parse_box(obj["head_box"], where), head_size_factor);
      } else {
        where.fail("person needs head_size or head_box");
      }
      if (!(g.head_size > 0.0)) where.fail("head size must be positive");
      g.pose.joint_set = set.name;
      if (obj.contains("box")) g.pose.box = parse_box(obj["box"], where);
      g.pose.box_score = obj.contains("box_score") ? number(obj["box_score"], "box_score", where) : 1.0;
      g.pose.score = obj.contains("score") ? number(obj["score"], "score", where) : g.pose.box_score;
      g.pose.keypoints = parse_keypoints(obj, set, where);
      frame.people.push_back(std::move(g));
    }
    out.frames.push_back(std::move(frame));
  });
  return out;
}

BoxFile parse_box_file(std::string_view text, std::string_view file) {
  Where where{std::string(file), std::nullopt};
  const json doc = parse_json(text, where);
  check_keys(doc, {"frames"}, where);
  BoxFile out;
  for_each_frame(doc, where, [&](const json& f, int index) {
    check_keys(f, {"frame_index", "boxes"}, where);
    BoxFrame frame;
    frame.frame_index = index;
    for (const json& b : array(field(f, "boxes", where), "boxes", where)) {
      check_keys(b, {"box", "score"}, where);
      frame.boxes.push_back(
          {parse_box(field(b, "box", where), where), number(field(b, "score", where), "score", where)});
    }
    out.frames.push_back(std::move(frame));
  });
  return out;
}

std::string emit_pose_file(const PoseFile& f) {
  json frames = json::array();
  for (const auto& fr : f.frames) {
    json instances = json::array();
    for (const auto& p : fr.instances) instances.push_back(instance_json(p));
    frames.push_back({{"frame_index", fr.frame_index}, {"instances", std::move(instances)}});
  }
  return finish({{"joint_set", f.joint_set}, {"frames", std::move(frames)}});
}

std::string emit_gt_file(const GroundTruthFile& f) {
  json frames = json::array();
  for (const auto& fr : f.frames) {
    json people = json::array();
    for (const auto& g : fr.people) {
      json obj = {{"person_id", g.person_id},
                  {"head_size", g.head_size},
                  {"box", box_json(g.pose.box)},
                  {"box_score", g.pose.box_score},
                  {"score", g.pose.score}};
      emit_keypoints(obj, g.pose.keypoints);
      people.push_back(std::move(obj));
    }
    frames.push_back({{"frame_index", fr.frame_index}, {"people", std::move(people)}});
  }
  return finish({{"joint_set", f.joint_set}, {"frames", std::move(frames)}});
}

std::string emit_box_file(const BoxFile& f) {
  json frames = json::array();
  for (const auto& fr : f.frames) {
    json boxes = json::array();
    for (const auto& b : fr.boxes) boxes.push_back({{"box", box_json(b.box)}, {"score", b.score}});
    frames.push_back({{"frame_index", fr.frame_index}, {"boxes", std::move(boxes)}});
  }
  return finish({{"frames", std::move(frames)}});
}

PoseFile read_pose_file(const std::filesystem::path& path, const JointSetRegistry& registry) {
  return read_with_name<PoseFile>(path, [&](std::string_view text, const std::string& name) {
    return parse_pose_file(text, name, registry);
  });
}

GroundTruthFile read_gt_file(const std::filesystem::path& path, double head_size_factor,
                             const JointSetRegistry& registry) {
  return read_with_name<GroundTruthFile>(path, [&](std::string_view text, const std::string& name) {
    return parse_gt_file(text, name, head_size_factor, registry);
  });
}

BoxFile read_box_file(const std::filesystem::path& path) {
  return read_with_name<BoxFile>(
      path, [&](std::string_view text, const std::string& name) { return parse_box_file(text, name); });
}

}  // namespace mdpn
