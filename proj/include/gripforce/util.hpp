// Copyright 2026 The gripforce Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRIPFORCE_UTIL_HPP_
#define GRIPFORCE_UTIL_HPP_

#include <stdexcept>
#include <string>

namespace gripforce {

// Two-sided linear interpolation. Unlike a + u*(b - a) this form hits both
// endpoints exactly in floating point, and at u = 0.5 it is the correctly
// rounded arithmetic mean of a and b.
inline double lerp(double a, double b, double u) {
  return (1.0 - u) * a + u * b;
}

// Closed interval with inclusive bounds. Used for parameter ranges.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

inline void check_interval(const Interval& iv, const std::string& name) {
  if (!(iv.lo <= iv.hi)) {
    throw std::invalid_argument(name + ": interval lo must be <= hi");
  }
}

}  // namespace gripforce

#endif  // GRIPFORCE_UTIL_HPP_
