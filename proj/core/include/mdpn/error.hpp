#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace mdpn {

// Base for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or configuration. Carries the file and, where known,
// the frame index at which parsing failed.
class ParseError : public Error {
 public:
  explicit ParseError(std::string detail, std::string file = {},
                      std::optional<int> frame = std::nullopt);

  const std::string& detail() const noexcept { return detail_; }
  const std::string& file() const noexcept { return file_; }
  std::optional<int> frame() const noexcept { return frame_; }

  ParseError with_file(std::string file) const;

 private:
  std::string detail_;
  std::string file_;
  std::optional<int> frame_;
};

}  // namespace mdpn
