#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mdpn/pose.hpp"

namespace mdpn {

// Links heatmap cells to image pixels: cell (px, py) has its centre at
// crop.x + (px + 0.5) * stride_x, crop.y + (py + 0.5) * stride_y.
struct HeatmapGeometry {
  Box crop{0.0, 0.0, 1.0, 1.0};
  double stride_x = 1.0;
  double stride_y = 1.0;

  friend bool operator==(const HeatmapGeometry&, const HeatmapGeometry&) = default;
};

// Per-joint score grids, K x H x W, row-major, float32 payload.
class Heatmap {
 public:
  Heatmap() = default;
  // Zero-filled. Throws mdpn::Error if height or width is below 3 or the
  // geometry strides are not positive.
  Heatmap(std::size_t channels, std::size_t height, std::size_t width,
          std::string joint_set = {}, HeatmapGeometry geometry = {});

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }

  float& at(std::size_t k, std::size_t y, std::size_t x) {
    return values_[(k * height_ + y) * width_ + x];
  }
  float at(std::size_t k, std::size_t y, std::size_t x) const {
    return values_[(k * height_ + y) * width_ + x];
  }

  std::span<float> channel(std::size_t k);
  std::span<const float> channel(std::size_t k) const;
  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }

  const std::string& joint_set() const noexcept { return joint_set_; }
  void set_joint_set(std::string name) { joint_set_ = std::move(name); }
  const HeatmapGeometry& geometry() const noexcept { return geometry_; }
  void set_geometry(const HeatmapGeometry& geometry);

  bool same_shape(const Heatmap& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }

  friend bool operator==(const Heatmap&, const Heatmap&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::string joint_set_;
  HeatmapGeometry geometry_;
  std::vector<float> values_;
};

// Grid coordinates: integer values are cell centres.
struct GridPoint {
  double x = 0.0;
  double y = 0.0;
};

GridPoint image_to_grid(const HeatmapGeometry& g, Point p) noexcept;
Point grid_to_image(const HeatmapGeometry& g, GridPoint p) noexcept;

struct TargetMaps {
  Heatmap heatmap;
  // 1 where the joint is annotated and inside the grid.
  std::vector<unsigned char> mask;
};

// Gaussian targets exp(-d^2 / (2 sigma^2)) per joint. Missing joints and
// joints outside the grid extent produce an all-zero channel with mask 0.
TargetMaps render_target(std::span<const std::optional<GridPoint>> joints, double sigma,
                         std::size_t height, std::size_t width);

// Normalised 1-D Gaussian taps for offsets -r..r, r = ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);

// Per-channel separable Gaussian filter with half-sample symmetric
// (reflect) borders. sigma_filter == 0 returns the input unchanged.
Heatmap smooth(const Heatmap& h, double sigma_filter);

using FlipPairs = std::vector<std::pair<std::size_t, std::size_t>>;

// Maps a heatmap predicted on a horizontally mirrored input back into the
// unmirrored frame: reverse W, shift one cell toward +x, swap paired channels.
Heatmap unmirror(const Heatmap& flipped, const FlipPairs& flip_pairs);

// Inverse of unmirror on columns 1..W-1; synthesises what a flip-equivariant
// network would output for the mirrored input.
Heatmap mirror(const Heatmap& h, const FlipPairs& flip_pairs);

// (h + unmirror(flipped)) / 2. Throws mdpn::Error on shape mismatch.
Heatmap flip_merge(const Heatmap& h, const Heatmap& flipped, const FlipPairs& flip_pairs);

struct DecodeOptions {
  double smooth_sigma = 1.0;
  bool quarter_offset = true;
};

// Argmax decoding with optional quarter-cell refinement toward the larger
// axis neighbour. A channel whose maximum is not positive decodes as
// not-annotated.
DecodedPose decode(const Heatmap& h, const DecodeOptions& options = {});

}  // namespace mdpn
