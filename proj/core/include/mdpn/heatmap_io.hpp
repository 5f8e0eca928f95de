#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "mdpn/heatmap.hpp"

namespace mdpn {

// Binary heatmap container, little-endian:
//   "PKHM" | version u32 | K u32 | H u32 | W u32 |
//   crop x, y, w, h f64 | stride_x, stride_y f64 |
//   joint-set name length u32 | name bytes | K*H*W f32 row-major.
inline constexpr std::uint32_t kHeatmapFormatVersion = 1;

std::string serialize_heatmap(const Heatmap& h);
// Throws mdpn::ParseError on bad magic, unsupported version, truncation or
// trailing bytes.
Heatmap parse_heatmap(std::string_view bytes);

void write_heatmap_file(const std::filesystem::path& path, const Heatmap& h);
Heatmap read_heatmap_file(const std::filesystem::path& path);

// Shared little-endian helpers, also used by the parameter checkpoint format.
namespace binary {

void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32();
  float f32();
  double f64();
  std::string_view take(std::size_t n);
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace binary
}  // namespace mdpn
