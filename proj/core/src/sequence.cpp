#include "mdpn/sequence.hpp"

#include <array>
#include <cmath>
#include <string>

#include <nlohmann/json.hpp>

#include "mdpn/error.hpp"
#include "mdpn/heatmap_io.hpp"
#include "mdpn/random.hpp"

namespace mdpn {
namespace {

// Frontal pose in box-relative coordinates, merged joint order. The
// person's left side appears on the image right.
constexpr std::array<Point, 21> kPose = {{
    {0.50, 0.10}, {0.54, 0.08}, {0.46, 0.08}, {0.58, 0.09}, {0.42, 0.09},  // face
    {0.68, 0.22}, {0.32, 0.22}, {0.76, 0.38}, {0.24, 0.38}, {0.80, 0.52}, {0.20, 0.52},
    {0.62, 0.55}, {0.38, 0.55}, {0.63, 0.75}, {0.37, 0.75}, {0.64, 0.95}, {0.36, 0.95},
    {0.50, 0.01}, {0.50, 0.17}, {0.50, 0.22}, {0.50, 0.55},
}};

constexpr Box kPersonBox{0.0, 0.0, 100.0, 200.0};
constexpr double kHeadBoxDiagonal = 31.24;  // 20 x 24 px head box

// Image keypoints of a person whose box is `box` at time t (arms swing).
std::array<Point, 21> pose_at(const Box& box, int t, double phase) {
  std::array<Point, 21> out{};
  const JointSet& merged = builtin_joint_set("merged");
  for (std::size_t j = 0; j < kPose.size(); ++j) {
    Point p = kPose[j];
    const std::string& name = merged.joints[j];
    if (name.ends_with("wrist") || name.ends_with("elbow")) {
      const double swing = (name.ends_with("wrist") ? 0.04 : 0.02) * std::sin(0.7 * t + phase);
      p.y += name.starts_with("left") ? swing : -swing;
    }
    out[j] = {box.x + p.x * box.w, box.y + p.y * box.h};
  }
  return out;
}

// Crop with the heatmap aspect ratio around a detection box.
HeatmapGeometry crop_for(const Box& box, std::size_t H, std::size_t W) {
  const double aspect = static_cast<double>(H) / static_cast<double>(W);
  double w = box.w, h = box.h;
  if (h / w > aspect) {
    w = h / aspect;
  } else {
    h = w * aspect;
  }
  HeatmapGeometry g;
  g.crop = Box{box.x + box.w / 2 - w / 2, box.y + box.h / 2 - h / 2, w, h};
  g.stride_x = w / static_cast<double>(W);
  g.stride_y = h / static_cast<double>(H);
  return g;
}

struct Detection {
  Box box;
  double box_score = 1.0;
  std::array<Point, 21> joints{};
  // Peak amplitude per merged joint.
  std::array<double, 21> amplitude{};
};

CropInput render_crop(const Detection& d, const SequenceOptions& o, Rng& rng) {
  CropInput crop;
  crop.box = d.box;
  crop.box_score = d.box_score;
  const HeatmapGeometry g = crop_for(d.box, o.heatmap_height, o.heatmap_width);
  const double sigma = o.render_sigma / g.stride_x;
  const JointSet& merged = builtin_joint_set("merged");
  for (const std::string branch : {"coco", "mpii", "posetrack"}) {
    const JointSet& set = builtin_joint_set(branch);
    const JointMapping m = mapping(merged, set);
    std::vector<std::optional<GridPoint>> pts(set.count());
    std::vector<double> amp(set.count(), 0.0);
    for (const auto& [from, to] : m.index_map) {
      pts[to] = image_to_grid(g, d.joints[from]);
      amp[to] = d.amplitude[from];
    }
    TargetMaps t = render_target(pts, sigma, o.heatmap_height, o.heatmap_width);
    Heatmap h = std::move(t.heatmap);
    for (std::size_t k = 0; k < set.count(); ++k) {
      for (float& v : h.channel(k)) v = static_cast<float>(amp[k] * v + o.noise * rng.normal());
    }
    h.set_joint_set(branch);
    h.set_geometry(g);
    crop.flipped.emplace(branch, mirror(h, set.flip_pairs));
    crop.branches.add(std::move(h));
  }
  return crop;
}

}  // namespace

Sequence make_sequence(const SequenceOptions& o) {
  if (o.frames < 8) throw Error("the golden sequence needs at least 8 frames");
  Rng rng(derive_seed(o.seed, "sequence"));
  Sequence seq;
  seq.ground_truth.joint_set = "posetrack";
  const JointSet& merged = builtin_joint_set("merged");
  const JointSet& pt = builtin_joint_set("posetrack");
  const JointMapping to_pt = mapping(merged, pt);
  const std::size_t left_wrist = *merged.index_of("left_wrist");
  const std::size_t left_elbow = *merged.index_of("left_elbow");

  for (int t = 0; t < o.frames; ++t) {
    std::vector<Detection> dets;
    GroundTruthFrame gt;
    gt.frame_index = t;
    for (int person = 0; person < 2; ++person) {
      Box box = kPersonBox;
      box.x = person == 0 ? 60.0 + 12.0 * t : 400.0 - 12.0 * t;
      box.y = person == 0 ? 80.0 : 90.0;
      Detection d;
      d.box = box;
      d.box_score = person == 0 ? 0.95 : 0.9;
      d.joints = pose_at(box, t, person * 1.5);
      d.amplitude.fill(1.0);
      const bool occluded = person == 1 && t >= 3 && t <= 6;
      if (occluded) d.amplitude[left_wrist] = d.amplitude[left_elbow] = 0.2;
      dets.push_back(d);

      GroundTruthPerson g;
      g.person_id = person;
      g.head_size = 0.6 * kHeadBoxDiagonal;
      g.pose.joint_set = pt.name;
      g.pose.box = box;
      g.pose.box_score = 1.0;
      g.pose.score = 1.0;
      g.pose.keypoints.assign(pt.count(), Keypoint{});
      for (const auto& [from, to] : to_pt.index_map) {
        const bool hidden = occluded && (from == left_wrist || from == left_elbow);
        g.pose.keypoints[to] = Keypoint{d.joints[from].x, d.joints[from].y, 1.0, !hidden};
      }
      gt.people.push_back(std::move(g));
    }
    if (t == 2) {
      Detection low;
      low.box = Box{250.0, 300.0, 60.0, 120.0};
      low.box_score = 0.25;
      low.joints = pose_at(low.box, t, 0.0);
      low.amplitude.fill(0.6);
      dets.push_back(low);
    }
    if (t == 4) {
      Detection dup = dets[0];
      dup.box.x += 6.0;
      dup.box.y += 4.0;
      dup.box_score = 0.75;
      dets.push_back(dup);
    }
    if (t == 6) {
      Detection ghost;
      ghost.box = Box{520.0, 60.0, 100.0, 200.0};
      ghost.box_score = 0.9;
      ghost.joints = pose_at(ghost.box, t, 0.5);
      ghost.amplitude.fill(1.0);
      dets.push_back(ghost);
    }

    FrameInput in;
    in.frame_index = t;
    BoxFrame boxes;
    boxes.frame_index = t;
    for (const auto& d : dets) {
      in.crops.push_back(render_crop(d, o, rng));
      boxes.boxes.push_back({d.box, d.box_score});
    }
    if (t == 0) {
      // A second, looser box around person 0 from the detector.
      boxes.boxes.push_back({Box{dets[0].box.x - 5.0, dets[0].box.y - 8.0, 108.0, 212.0}, 0.6});
    }
    seq.frames.push_back(std::move(in));
    seq.boxes.frames.push_back(std::move(boxes));
    seq.ground_truth.frames.push_back(std::move(gt));
  }
  return seq;
}

void write_sequence(const Sequence& seq, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "heatmaps");
  nlohmann::json frames = nlohmann::json::array();
  for (const auto& f : seq.frames) {
    nlohmann::json instances = nlohmann::json::array();
    for (std::size_t i = 0; i < f.crops.size(); ++i) {
      const CropInput& c = f.crops[i];
      nlohmann::json heatmaps = nlohmann::json::object();
      nlohmann::json flipped = nlohmann::json::object();
      const std::string stem = "f" + std::to_string(f.frame_index) + "_i" + std::to_string(i) + "_";
      for (const auto& [branch, h] : c.branches.branches()) {
        const std::string name = "heatmaps/" + stem + branch + ".pkhm";
        write_heatmap_file(dir / name, h);
        heatmaps[branch] = name;
      }
      for (const auto& [branch, h] : c.flipped) {
        const std::string name = "heatmaps/" + stem + branch + "_flip.pkhm";
        write_heatmap_file(dir / name, h);
        flipped[branch] = name;
      }
      instances.push_back({{"box", {c.box.x, c.box.y, c.box.w, c.box.h}},
                           {"box_score", c.box_score},
                           {"heatmaps", heatmaps},
                           {"flipped", flipped}});
    }
    frames.push_back({{"frame_index", f.frame_index}, {"instances", instances}});
  }
  binary::write_file(dir / "manifest.json", nlohmann::json{{"frames", frames}}.dump(1) + "\n");
  binary::write_file(dir / "gt.json", emit_gt_file(seq.ground_truth));
  binary::write_file(dir / "boxes.json", emit_box_file(seq.boxes));
}

}  // namespace mdpn
