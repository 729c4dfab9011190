#pragma once

#include "ppil/common.hpp"
#include "ppil/io.hpp"

#include "doctest.h"

#include <string>

namespace testing_util {

inline const ppil::io::Json& derived() {
  static const ppil::io::Json j = ppil::io::read_json_file(std::string(PPIL_FIXTURE_DIR) + "/derived_values.json");
  return j;
}

inline ppil::Vector vec(std::initializer_list<double> xs) {
  ppil::Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline double max_abs_diff(const ppil::Vector& a, const ppil::Vector& b) {
  REQUIRE(a.size() == b.size());
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testing_util
