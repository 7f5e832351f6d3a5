#pragma once

#include <stdexcept>
#include <string>

namespace koopman {

// Exit-code mapping used by the CLI: usage_error -> 2,
// divergence_error -> 3, protocol_error -> 4.

struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct shape_error : usage_error {
  explicit shape_error(const std::string& msg) : usage_error(msg) {}
};

struct divergence_error : std::runtime_error {
  explicit divergence_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct protocol_error : std::runtime_error {
  explicit protocol_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace koopman
