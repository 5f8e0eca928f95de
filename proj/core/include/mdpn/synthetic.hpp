#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mdpn/random.hpp"
#include "mdpn/toy_network.hpp"

namespace mdpn {

// Rendering style of one synthetic domain.
struct DomainSpec {
  std::string name;  // builtin joint-set name: coco, mpii or posetrack
  double contrast = 1.0;
  double noise = 0.05;
  // Systematic annotation offset added to every target keypoint (grid cells).
  GridPoint offset;
  // Joint-like distractor stamps per image.
  std::size_t clutter = 6;
  // Consecutive samples sharing one person and one background, like frames
  // of a video; 1 = independent images.
  std::size_t clip_length = 1;
  // Per-joint position noise between frames of a clip (grid cells).
  double frame_jitter = 0.3;
};

struct SyntheticConfig {
  std::size_t channels = 1;
  std::size_t height = 32;
  std::size_t width = 24;
  double target_sigma = 2.0;
};

inline constexpr std::size_t kMergedJoints = 21;

// Latent articulated figure, merged joint order, grid coordinates.
using Figure = std::array<GridPoint, kMergedJoints>;

// Random upright stick figure that fits inside the grid with `margin` cells
// to spare on each side.
Figure sample_figure(Rng& rng, std::size_t height, std::size_t width, double margin = 1.0);

// Parent-child joint pairs (merged indices) drawn as limbs.
const std::vector<std::pair<std::size_t, std::size_t>>& figure_bones();

// Background stamp with a non-joint code.
struct Distractor {
  GridPoint at;
  std::uint8_t code = 0;
};

// Clean rendering: faint limbs plus a signed 3x3 stamp per joint whose sign
// pattern encodes the joint identity.
Tensor3 render_figure(const Figure& figure, std::span<const Distractor> clutter,
                      std::size_t channels, std::size_t height, std::size_t width);

// Up to `count` distractors placed away from the figure's joints.
std::vector<Distractor> sample_clutter(Rng& rng, const Figure& figure, std::size_t count,
                                       std::size_t height, std::size_t width);

// n samples of one domain. Figures and clutter depend only on `seed` and the
// clip length, so domains generated with the same seed and clip length share
// them; contrast, noise and offsets are domain specific.
std::vector<Sample> gen_synthetic(const DomainSpec& domain, std::size_t n, std::uint64_t seed,
                                  const SyntheticConfig& config = {});

// Defaults for the three builtin domains; coco is the large generic one.
std::vector<DomainSpec> default_domains();

}  // namespace mdpn
