#include "mdpn/error.hpp"

#include <utility>

namespace mdpn {
namespace {

std::string format_message(const std::string& detail, const std::string& file,
                           std::optional<int> frame) {
  std::string out;
  if (!file.empty()) out += file + ": ";
  if (frame) out += "frame " + std::to_string(*frame) + ": ";
  return out + detail;
}

}  // namespace

ParseError::ParseError(std::string detail, std::string file, std::optional<int> frame)
    : Error(format_message(detail, file, frame)),
      detail_(std::move(detail)),
      file_(std::move(file)),
      frame_(frame) {}

ParseError ParseError::with_file(std::string file) const {
  return ParseError(detail_, std::move(file), frame_);
}

}  // namespace mdpn
