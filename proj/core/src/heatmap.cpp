#include "mdpn/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdpn/error.hpp"

namespace mdpn {
namespace {

void check_geometry(const HeatmapGeometry& g) {
  if (!(g.stride_x > 0.0) || !(g.stride_y > 0.0)) {
    throw Error("heatmap geometry strides must be positive");
  }
}

// Half-sample symmetric reflection into [0, n): ... 1 0 | 0 1 ... n-1 | n-1 n-2 ...
std::size_t reflect_index(long i, long n) {
  const long period = 2 * n;
  long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - 1 - m);
}

std::vector<std::size_t> channel_permutation(std::size_t channels, const FlipPairs& pairs) {
  std::vector<std::size_t> perm(channels);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  for (const auto& [a, b] : pairs) {
    if (a >= channels || b >= channels) throw Error("flip pair index out of range");
    perm[a] = b;
    perm[b] = a;
  }
  return perm;
}

}  // namespace

Heatmap::Heatmap(std::size_t channels, std::size_t height, std::size_t width,
                 std::string joint_set, HeatmapGeometry geometry)
    : channels_(channels),
      height_(height),
      width_(width),
      joint_set_(std::move(joint_set)),
      geometry_(geometry),
      values_(channels * height * width, 0.0f) {
  if (height < 3 || width < 3) throw Error("heatmap grids must be at least 3x3");
  check_geometry(geometry_);
}

std::span<float> Heatmap::channel(std::size_t k) {
  return std::span<float>(values_).subspan(k * plane_size(), plane_size());
}

std::span<const float> Heatmap::channel(std::size_t k) const {
  return std::span<const float>(values_).subspan(k * plane_size(), plane_size());
}

void Heatmap::set_geometry(const HeatmapGeometry& geometry) {
  check_geometry(geometry);
  geometry_ = geometry;
}

GridPoint image_to_grid(const HeatmapGeometry& g, Point p) noexcept {
  return {(p.x - g.crop.x) / g.stride_x - 0.5, (p.y - g.crop.y) / g.stride_y - 0.5};
}

Point grid_to_image(const HeatmapGeometry& g, GridPoint p) noexcept {
  return {g.crop.x + (p.x + 0.5) * g.stride_x, g.crop.y + (p.y + 0.5) * g.stride_y};
}

TargetMaps render_target(std::span<const std::optional<GridPoint>> joints, double sigma,
                         std::size_t height, std::size_t width) {
  if (!(sigma > 0.0)) throw Error("target sigma must be positive");
  TargetMaps out{Heatmap(joints.size(), height, width), std::vector<unsigned char>(joints.size(), 0)};
  const double inv = 1.0 / (2.0 * sigma * sigma);
  const double max_x = static_cast<double>(width) - 0.5;
  const double max_y = static_cast<double>(height) - 0.5;
  for (std::size_t k = 0; k < joints.size(); ++k) {
    const auto& j = joints[k];
    if (!j || !std::isfinite(j->x) || !std::isfinite(j->y)) continue;
    if (j->x < -0.5 || j->x >= max_x || j->y < -0.5 || j->y >= max_y) continue;
    out.mask[k] = 1;
    for (std::size_t y = 0; y < height; ++y) {
      const double dy = static_cast<double>(y) - j->y;
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = static_cast<double>(x) - j->x;
        out.heatmap.at(k, y, x) = static_cast<float>(std::exp(-(dx * dx + dy * dy) * inv));
      }
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) return {1.0};
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> taps(static_cast<std::size_t>(2 * radius + 1));
  double total = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double v = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    taps[static_cast<std::size_t>(i + radius)] = v;
    total += v;
  }
  for (double& t : taps) t /= total;
  return taps;
}

Heatmap smooth(const Heatmap& h, double sigma_filter) {
  if (sigma_filter < 0.0) throw Error("smoothing sigma must be non-negative");
  if (sigma_filter == 0.0) return h;
  const std::vector<double> taps = gaussian_kernel(sigma_filter);
  const long radius = static_cast<long>(taps.size() / 2);
  const long H = static_cast<long>(h.height());
  const long W = static_cast<long>(h.width());

  Heatmap out = h;
  std::vector<double> rows(h.plane_size());
  for (std::size_t k = 0; k < h.channels(); ++k) {
    const auto src = h.channel(k);
    for (long y = 0; y < H; ++y) {
      for (long x = 0; x < W; ++x) {
        double acc = 0.0;
        for (long t = -radius; t <= radius; ++t) {
          acc += taps[static_cast<std::size_t>(t + radius)] *
                 src[static_cast<std::size_t>(y * W) + reflect_index(x + t, W)];
        }
        rows[static_cast<std::size_t>(y * W + x)] = acc;
      }
    }
    auto dst = out.channel(k);
    for (long y = 0; y < H; ++y) {
      for (long x = 0; x < W; ++x) {
        double acc = 0.0;
        for (long t = -radius; t <= radius; ++t) {
          acc += taps[static_cast<std::size_t>(t + radius)] *
                 rows[reflect_index(y + t, H) * static_cast<std::size_t>(W) + static_cast<std::size_t>(x)];
        }
        dst[static_cast<std::size_t>(y * W + x)] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

Heatmap unmirror(const Heatmap& flipped, const FlipPairs& flip_pairs) {
  const auto perm = channel_permutation(flipped.channels(), flip_pairs);
  const std::size_t W = flipped.width();
  Heatmap out = flipped;
  for (std::size_t k = 0; k < flipped.channels(); ++k) {
    for (std::size_t y = 0; y < flipped.height(); ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        // reversed[x] = src[W-1-x]; shifted[x] = reversed[x-1] (x >= 1).
        const std::size_t rx = x == 0 ? 0 : x - 1;
        out.at(k, y, x) = flipped.at(perm[k], y, W - 1 - rx);
      }
    }
  }
  return out;
}

Heatmap mirror(const Heatmap& h, const FlipPairs& flip_pairs) {
  const auto perm = channel_permutation(h.channels(), flip_pairs);
  const std::size_t W = h.width();
  Heatmap out = h;
  for (std::size_t k = 0; k < h.channels(); ++k) {
    for (std::size_t y = 0; y < h.height(); ++y) {
      for (std::size_t x = 0; x < W; ++x) {
        // shifted[x] = src[x+1] (x < W-1); mirrored[x] = shifted[W-1-x].
        const std::size_t sx = W - 1 - x;
        out.at(k, y, x) = h.at(perm[k], y, sx + 1 < W ? sx + 1 : sx);
      }
    }
  }
  return out;
}

Heatmap flip_merge(const Heatmap& h, const Heatmap& flipped, const FlipPairs& flip_pairs) {
  if (!h.same_shape(flipped)) throw Error("flip_merge: heatmap shapes differ");
  const Heatmap restored = unmirror(flipped, flip_pairs);
  Heatmap out = h;
  auto dst = out.values();
  const auto a = h.values();
  const auto b = restored.values();
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] = static_cast<float>((static_cast<double>(a[i]) + static_cast<double>(b[i])) * 0.5);
  }
  return out;
}

DecodedPose decode(const Heatmap& h, const DecodeOptions& options) {
  const Heatmap s = smooth(h, options.smooth_sigma);
  const std::size_t H = s.height();
  const std::size_t W = s.width();
  DecodedPose pose{h.joint_set(), std::vector<Keypoint>(h.channels())};
  for (std::size_t k = 0; k < s.channels(); ++k) {
    const auto c = s.channel(k);
    const auto best = static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    const float peak = c[best];
    if (!(peak > 0.0f)) continue;
    const std::size_t px = best % W;
    const std::size_t py = best / W;
    double shift_x = 0.0;
    double shift_y = 0.0;
    if (options.quarter_offset) {
      if (px > 0 && px + 1 < W) {
        const float right = c[py * W + px + 1];
        const float left = c[py * W + px - 1];
        if (right > left) shift_x = 0.25;
        if (left > right) shift_x = -0.25;
      }
      if (py > 0 && py + 1 < H) {
        const float down = c[(py + 1) * W + px];
        const float up = c[(py - 1) * W + px];
        if (down > up) shift_y = 0.25;
        if (up > down) shift_y = -0.25;
      }
    }
    const Point p = grid_to_image(
        s.geometry(), {static_cast<double>(px) + shift_x, static_cast<double>(py) + shift_y});
    pose.keypoints[k] = Keypoint{p.x, p.y, static_cast<double>(peak), true};
  }
  return pose;
}

}  // namespace mdpn
