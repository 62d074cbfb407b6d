#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace adjmc {

// Raised when a Monte Carlo run has to abort: a state coordinate or a bleed
// value went non-finite, or an oracle threw mid-path.  Carries enough context
// to reproduce the offending step with the same seed.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(std::int64_t path, std::int64_t step, const std::string& what_arg)
      : std::runtime_error("path " + std::to_string(path) + ", step " + std::to_string(step) +
                           ": " + what_arg),
        path_(path),
        step_(step) {}

  std::int64_t path() const noexcept { return path_; }
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t path_;
  std::int64_t step_;
};

}  // namespace adjmc
