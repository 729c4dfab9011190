#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ppil {

struct PropertyResult {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Randomized invariant checks over every module.
std::vector<PropertyResult> run_property_suite(std::uint64_t seed = 0);

}  // namespace ppil
