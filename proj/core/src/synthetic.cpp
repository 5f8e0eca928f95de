#include "mdpn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdpn/error.hpp"
#include "mdpn/skeleton.hpp"

namespace mdpn {
namespace {

// Merged joint indices.
enum : std::size_t {
  kNose, kLeftEye, kRightEye, kLeftEar, kRightEar, kLeftShoulder, kRightShoulder,
  kLeftElbow, kRightElbow, kLeftWrist, kRightWrist, kLeftHip, kRightHip, kLeftKnee,
  kRightKnee, kLeftAnkle, kRightAnkle, kHeadTop, kUpperNeck, kThorax, kPelvis,
};

GridPoint along(GridPoint from, double angle, double length) {
  return {from.x + length * std::cos(angle), from.y + length * std::sin(angle)};
}

GridPoint offset_by(GridPoint p, GridPoint dir, double amount) {
  return {p.x + dir.x * amount, p.y + dir.y * amount};
}

Figure figure_at_origin(Rng& rng) {
  constexpr double kPi = 3.14159265358979323846;
  const double scale = rng.uniform(0.75, 1.0);
  const double spine = -kPi / 2 + rng.uniform(-0.25, 0.25);
  const GridPoint up{std::cos(spine), std::sin(spine)};
  const GridPoint side{-up.y, up.x};  // toward the figure's left joints
  const double down = spine + kPi;
  const double facing = rng.uniform(-1.0, 1.0);

  Figure f{};
  f[kPelvis] = {0.0, 0.0};
  f[kThorax] = along(f[kPelvis], spine, 8.0 * scale);
  f[kUpperNeck] = along(f[kThorax], spine, 2.5 * scale);
  const double tilt = spine + rng.uniform(-0.2, 0.2);
  f[kHeadTop] = along(f[kUpperNeck], tilt, 4.5 * scale);
  const GridPoint head_mid = along(f[kUpperNeck], tilt, 2.2 * scale);
  f[kNose] = offset_by(head_mid, side, 0.8 * scale * facing);
  const GridPoint eye_base = along(f[kNose], tilt, 0.9 * scale);
  f[kLeftEye] = offset_by(eye_base, side, 0.8 * scale);
  f[kRightEye] = offset_by(eye_base, side, -0.8 * scale);
  f[kLeftEar] = offset_by(head_mid, side, 1.7 * scale);
  f[kRightEar] = offset_by(head_mid, side, -1.7 * scale);

  f[kLeftShoulder] = offset_by(f[kThorax], side, 3.5 * scale);
  f[kRightShoulder] = offset_by(f[kThorax], side, -3.5 * scale);
  f[kLeftHip] = offset_by(f[kPelvis], side, 2.2 * scale);
  f[kRightHip] = offset_by(f[kPelvis], side, -2.2 * scale);

  for (int s = 0; s < 2; ++s) {
    const std::size_t shoulder = s == 0 ? kLeftShoulder : kRightShoulder;
    const std::size_t elbow = s == 0 ? kLeftElbow : kRightElbow;
    const std::size_t wrist = s == 0 ? kLeftWrist : kRightWrist;
    const std::size_t hip = s == 0 ? kLeftHip : kRightHip;
    const std::size_t knee = s == 0 ? kLeftKnee : kRightKnee;
    const std::size_t ankle = s == 0 ? kLeftAnkle : kRightAnkle;
    // Rotation sign that swings a limb from "down" toward its own side.
    const double outward = s == 0 ? -1.0 : 1.0;
    const double arm = down + outward * rng.uniform(-0.3, 1.4);
    f[elbow] = along(f[shoulder], arm, 5.0 * scale);
    f[wrist] = along(f[elbow], arm + outward * rng.uniform(-0.4, 1.6), 4.5 * scale);
    const double leg = down + outward * rng.uniform(-0.15, 0.45);
    f[knee] = along(f[hip], leg, 6.0 * scale);
    f[ankle] = along(f[knee], leg + outward * rng.uniform(-0.6, 0.3), 6.0 * scale);
  }
  return f;
}

// Each joint is drawn as a signed 3x3 stamp: the centre is always bright,
// the eight neighbours follow a per-joint sign code, so a 3x3 filter can tell
// joints apart regardless of domain contrast.
constexpr std::array<std::uint8_t, kMergedJoints> kJointCode = {
    0x0f, 0x33, 0x55, 0x3c, 0x5a, 0x66, 0x99, 0x69, 0x96, 0xa5, 0xc3,
    0x1e, 0x2d, 0x4b, 0x78, 0x87, 0xb4, 0xd2, 0xe1, 0x17, 0xe8};

double stamp(std::uint8_t code, double dx, double dy) {
  constexpr double kWidth = 0.45;
  double v = 0.0;
  int bit = 0;
  for (int oy = -1; oy <= 1; ++oy) {
    for (int ox = -1; ox <= 1; ++ox) {
      double sign = 1.0;
      if (ox != 0 || oy != 0) {
        sign = (code >> bit) & 1U ? 0.6 : -0.6;
        ++bit;
      }
      const double ex = dx - ox, ey = dy - oy;
      v += sign * std::exp(-(ex * ex + ey * ey) / (2.0 * kWidth * kWidth));
    }
  }
  return v;
}

}  // namespace

const std::vector<std::pair<std::size_t, std::size_t>>& figure_bones() {
  static const std::vector<std::pair<std::size_t, std::size_t>> bones = {
      {kPelvis, kThorax},          {kThorax, kUpperNeck},       {kUpperNeck, kHeadTop},
      {kThorax, kLeftShoulder},    {kThorax, kRightShoulder},   {kLeftShoulder, kLeftElbow},
      {kLeftElbow, kLeftWrist},    {kRightShoulder, kRightElbow}, {kRightElbow, kRightWrist},
      {kPelvis, kLeftHip},         {kPelvis, kRightHip},        {kLeftHip, kLeftKnee},
      {kLeftKnee, kLeftAnkle},     {kRightHip, kRightKnee},     {kRightKnee, kRightAnkle},
  };
  return bones;
}

Figure sample_figure(Rng& rng, std::size_t height, std::size_t width, double margin) {
  const double W = static_cast<double>(width);
  const double H = static_cast<double>(height);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Figure f = figure_at_origin(rng);
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const auto& p : f) {
      min_x = std::min(min_x, p.x);
      max_x = std::max(max_x, p.x);
      min_y = std::min(min_y, p.y);
      max_y = std::max(max_y, p.y);
    }
    const double lo_x = margin - min_x, hi_x = W - 1.0 - margin - max_x;
    const double lo_y = margin - min_y, hi_y = H - 1.0 - margin - max_y;
    if (lo_x > hi_x || lo_y > hi_y) continue;
    const double tx = rng.uniform(lo_x, hi_x);
    const double ty = rng.uniform(lo_y, hi_y);
    for (auto& p : f) {
      p.x += tx;
      p.y += ty;
    }
    return f;
  }
  throw Error("grid too small for the synthetic figure");
}

Tensor3 render_figure(const Figure& figure, std::span<const Distractor> clutter,
                      std::size_t channels, std::size_t height, std::size_t width) {
  Tensor3 out(channels, height, width);
  constexpr double kLimbWidth = 0.6;
  constexpr double kLimbLevel = 0.25;
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const double px = static_cast<double>(x);
      const double py = static_cast<double>(y);
      double limb = 0.0;
      for (const auto& [a, b] : figure_bones()) {
        const GridPoint p = figure[a];
        const GridPoint q = figure[b];
        const double vx = q.x - p.x, vy = q.y - p.y;
        const double len2 = vx * vx + vy * vy;
        double t = len2 > 0.0 ? ((px - p.x) * vx + (py - p.y) * vy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double dx = px - (p.x + t * vx), dy = py - (p.y + t * vy);
        limb = std::max(limb, std::exp(-(dx * dx + dy * dy) / (2.0 * kLimbWidth * kLimbWidth)));
      }
      double v = kLimbLevel * limb;
      for (std::size_t j = 0; j < kMergedJoints; ++j) {
        const double dx = px - figure[j].x, dy = py - figure[j].y;
        if (dx * dx + dy * dy < 9.0) v += stamp(kJointCode[j], dx, dy);
      }
      for (const auto& d : clutter) {
        const double dx = px - d.at.x, dy = py - d.at.y;
        if (dx * dx + dy * dy < 9.0) v += stamp(d.code, dx, dy);
      }
      for (std::size_t c = 0; c < channels; ++c) out.at(c, y, x) = v;
    }
  }
  return out;
}

std::vector<Distractor> sample_clutter(Rng& rng, const Figure& figure, std::size_t count,
                                       std::size_t height, std::size_t width) {
  std::vector<Distractor> out;
  for (int attempt = 0; out.size() < count && attempt < 200; ++attempt) {
    Distractor d;
    d.at = {rng.uniform(0.0, static_cast<double>(width) - 1.0),
            rng.uniform(0.0, static_cast<double>(height) - 1.0)};
    d.code = static_cast<std::uint8_t>(rng.index(256));
    if (std::find(kJointCode.begin(), kJointCode.end(), d.code) != kJointCode.end()) continue;
    // Keep distractors off the figure's joints so targets stay unambiguous.
    bool clear = true;
    for (const auto& j : figure) {
      const double dx = j.x - d.at.x, dy = j.y - d.at.y;
      clear = clear && dx * dx + dy * dy >= 9.0;
    }
    if (clear) out.push_back(d);
  }
  return out;
}

std::vector<Sample> gen_synthetic(const DomainSpec& domain, std::size_t n, std::uint64_t seed,
                                  const SyntheticConfig& config) {
  if (n < 1) throw Error("gen_synthetic needs n >= 1");
  if (domain.clip_length < 1) throw Error("clip_length must be >= 1");
  const JointSet& set = builtin_joint_set(domain.name);
  const JointSet& merged = builtin_joint_set("merged");
  const JointMapping to_domain = mapping(merged, set);

  Rng latent(derive_seed(seed, "latent"));
  Rng render(derive_seed(seed, "render:" + domain.name));
  std::vector<Sample> out;
  out.reserve(n);
  Figure base{};
  std::vector<Distractor> clutter;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % domain.clip_length == 0) {
      base = sample_figure(latent, config.height, config.width);
      clutter = sample_clutter(latent, base, domain.clutter, config.height, config.width);
    }
    Figure figure = base;
    if (domain.clip_length > 1) {
      // Frames of one clip: the same person, slightly moved.
      for (auto& p : figure) {
        p.x += domain.frame_jitter * latent.normal();
        p.y += domain.frame_jitter * latent.normal();
      }
    }
    Sample s;
    s.domain = domain.name;
    s.head = domain.name;
    s.input = render_figure(figure, clutter, config.channels, config.height, config.width);
    for (double& v : s.input.data) v = domain.contrast * v + domain.noise * render.normal();

    std::vector<std::optional<GridPoint>> keypoints(set.count());
    for (const auto& [m, d] : to_domain.index_map) {
      keypoints[d] = GridPoint{figure[m].x + domain.offset.x, figure[m].y + domain.offset.y};
    }
    TargetMaps target = render_target(keypoints, config.target_sigma, config.height, config.width);
    for (std::size_t k = 0; k < keypoints.size(); ++k) {
      if (!target.mask[k]) keypoints[k].reset();
    }
    s.target = std::move(target.heatmap);
    s.target.set_joint_set(domain.name);
    HeatmapGeometry g;
    g.crop = Box{0.0, 0.0, static_cast<double>(config.width), static_cast<double>(config.height)};
    s.target.set_geometry(g);
    s.mask = std::move(target.mask);
    s.keypoints = std::move(keypoints);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<DomainSpec> default_domains() {
  return {
      DomainSpec{"coco", 1.0, 0.05, {0.0, 0.0}, 6, 1},
      DomainSpec{"mpii", 0.8, 0.10, {0.0, 1.0}, 6, 1},
      DomainSpec{"posetrack", 0.6, 0.20, {1.0, 0.0}, 6, 20},
  };
}

}  // namespace mdpn
