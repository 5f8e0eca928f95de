#include "mdpn/heatmap_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>

#include "mdpn/error.hpp"

namespace mdpn {
namespace binary {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::string_view Reader::take(std::size_t n) {
  if (remaining() < n) throw ParseError("truncated binary payload");
  const auto view = bytes_.substr(pos_, n);
  pos_ += n;
  return view;
}

std::uint32_t Reader::u32() {
  const auto b = take(4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
  return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

double Reader::f64() {
  const auto b = take(8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
  return std::bit_cast<double>(v);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file", path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace binary

namespace {
constexpr std::string_view kMagic = "PKHM";
}

std::string serialize_heatmap(const Heatmap& h) {
  std::string out;
  out.reserve(64 + h.joint_set().size() + 4 * h.values().size());
  out.append(kMagic);
  binary::put_u32(out, kHeatmapFormatVersion);
  binary::put_u32(out, static_cast<std::uint32_t>(h.channels()));
  binary::put_u32(out, static_cast<std::uint32_t>(h.height()));
  binary::put_u32(out, static_cast<std::uint32_t>(h.width()));
  const auto& g = h.geometry();
  for (double v : {g.crop.x, g.crop.y, g.crop.w, g.crop.h, g.stride_x, g.stride_y}) {
    binary::put_f64(out, v);
  }
  binary::put_u32(out, static_cast<std::uint32_t>(h.joint_set().size()));
  out.append(h.joint_set());
  for (float v : h.values()) binary::put_f32(out, v);
  return out;
}

Heatmap parse_heatmap(std::string_view bytes) {
  binary::Reader r(bytes);
  if (bytes.size() < kMagic.size() || r.take(kMagic.size()) != kMagic) {
    throw ParseError("not a heatmap file (bad magic)");
  }
  const std::uint32_t version = r.u32();
  if (version != kHeatmapFormatVersion) {
    throw ParseError("unsupported heatmap format version " + std::to_string(version));
  }
  const std::size_t K = r.u32();
  const std::size_t H = r.u32();
  const std::size_t W = r.u32();
  HeatmapGeometry g;
  g.crop.x = r.f64();
  g.crop.y = r.f64();
  g.crop.w = r.f64();
  g.crop.h = r.f64();
  g.stride_x = r.f64();
  g.stride_y = r.f64();
  const std::size_t name_len = r.u32();
  std::string name(r.take(name_len));
  if (r.remaining() != 4 * K * H * W) {
    throw ParseError(r.remaining() < 4 * K * H * W ? "truncated heatmap payload"
                                                   : "trailing bytes after heatmap payload");
  }
  Heatmap h = [&] {
    try {
      return Heatmap(K, H, W, std::move(name), g);
    } catch (const Error& e) {
      throw ParseError(e.what());
    }
  }();
  for (float& v : h.values()) {
    v = r.f32();
    if (!std::isfinite(v)) throw ParseError("heatmap contains non-finite values");
  }
  return h;
}

void write_heatmap_file(const std::filesystem::path& path, const Heatmap& h) {
  binary::write_file(path, serialize_heatmap(h));
}

Heatmap read_heatmap_file(const std::filesystem::path& path) {
  try {
    return parse_heatmap(binary::read_file(path));
  } catch (const ParseError& e) {
    throw e.with_file(path.string());
  }
}

}  // namespace mdpn
