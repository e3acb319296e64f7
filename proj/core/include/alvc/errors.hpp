#pragma once

#include <stdexcept>
#include <string>

namespace alvc {

// Exit-code mapping used by the CLI: ConfigError -> 2, BitstreamError -> 3,
// IoError -> 4.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};

struct BitstreamError : std::runtime_error {
  explicit BitstreamError(const std::string& m) : std::runtime_error(m) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error(m) {}
};

}  // namespace alvc
