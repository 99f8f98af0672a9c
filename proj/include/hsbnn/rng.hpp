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
#include <cstdint>
#include <string_view>

namespace hsbnn {

// xoshiro256++ with splitmix64 seeding.  Every consumer derives its own
// named substream from the run seed, so e.g. evaluation draws can change
// without perturbing training draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) { seed_state(seed); }

  RngStream(std::uint64_t seed, std::string_view stream_name) {
    // FNV-1a over the stream name, folded into the seed.
    std::uint64_t h = 1469598103934665603ull;
    for (char c : stream_name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    seed_state(seed ^ h);
  }

  RngStream substream(std::string_view name) const {
    RngStream r(base_seed_, name);
    return r;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  // Standard normal via Marsaglia's polar method; one draw is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  double cauchy() {
    // tan of a uniform angle; avoids the +-pi/2 endpoints.
    const double u = uniform_pos();
    return std::tan(3.14159265358979323846 * (u - 0.5));
  }

  double half_cauchy(double scale) { return scale * std::fabs(cauchy()); }

  // Marsaglia-Tsang; `rate` is the exponential-decay parameter of the
  // density x^{shape-1} exp(-rate x).
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v / rate;
      }
    }
  }

  // Inverse gamma with density proportional to v^{-shape-1} exp(-rate/v).
  double inv_gamma(double shape, double rate) { return 1.0 / gamma(shape, rate); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  void seed_state(std::uint64_t seed) {
    base_seed_ = seed;
    std::uint64_t z = seed;
    for (auto& s : s_) {
      z += 0x9e3779b97f4a7c15ull;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ull;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebull;
      s = t ^ (t >> 31);
    }
  }

  std::uint64_t s_[4] = {};
  std::uint64_t base_seed_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hsbnn
