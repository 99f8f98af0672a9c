// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

#include <cmath>

namespace hsbnn {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kLn2Pi = 1.8378770664093454836;   // ln(2*pi)
inline constexpr double kLn2PiE = 2.8378770664093454836;  // ln(2*pi*e)
inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kLnGammaHalf = 0.57236494292470008707;  // ln Gamma(1/2)

// Digamma via upward recurrence into the asymptotic regime.  Absolute
// error below 1e-13 for x > 0.
inline double digamma(double x) {
  double result = 0.0;
  while (x < 10.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // ln x - 1/(2x) - sum B_{2n} / (2n x^{2n})
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
                    inv2 * (1.0 / 120.0 -
                            inv2 * (1.0 / 252.0 -
                                    inv2 * (1.0 / 240.0 -
                                            inv2 * (1.0 / 132.0 -
                                                    inv2 * (691.0 / 32760.0))))));
  return result;
}

// Standard normal CDF.
inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / 1.4142135623730950488);
}

}  // namespace hsbnn
