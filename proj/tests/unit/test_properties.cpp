#include "helpers.hpp"

#include "ppil/properties.hpp"

#include <set>

using namespace ppil;

TEST_SUITE("properties") {
  TEST_CASE("randomized invariant suite") {
    for (std::uint64_t seed : {0u, 1u}) {
      const auto results = run_property_suite(seed);
      CHECK(results.size() >= 10);
      std::set<std::string> modules;
      for (const auto& r : results) {
        INFO(r.module, "/", r.name, ": ", r.detail);
        CHECK(r.passed);
        modules.insert(r.module);
      }
      CHECK(modules.size() >= 5);
    }
  }
}
