#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace xsense {

/// Root of all randomness in a run. Child seeds are derived by name so that
/// adding a component never perturbs the streams of existing ones.
struct RngSeed {
  std::uint64_t value = 0;

  RngSeed derive(std::string_view component) const;
  RngSeed derive(std::uint64_t index) const;

  std::mt19937_64 engine() const { return std::mt19937_64{value}; }

  bool operator==(const RngSeed&) const = default;
};

}  // namespace xsense
