#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rescuesim {

using Bytes = std::vector<std::uint8_t>;
using NodeId = std::uint32_t;
using Height = std::uint64_t;
using Round = std::uint32_t;

/// Simulated time in microseconds. Integer so event ordering is exact.
using SimTime = std::int64_t;

constexpr SimTime kMicrosPerSecond = 1'000'000;

constexpr SimTime seconds_to_sim(double s) {
  return static_cast<SimTime>(s * static_cast<double>(kMicrosPerSecond) + (s >= 0 ? 0.5 : -0.5));
}

constexpr double sim_to_seconds(SimTime t) {
  return static_cast<double>(t) / static_cast<double>(kMicrosPerSecond);
}

/// Raised for malformed or out-of-range configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a harness-level invariant (safety, fault-model bound) is falsified.
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace rescuesim
