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

#include <vector>

#include "hsbnn/matrix.hpp"
#include "hsbnn/network.hpp"
#include "hsbnn/rng.hpp"

namespace hsbnn {

// Every standard-normal draw one objective evaluation consumes, generated
// up front in a fixed layout.  The same bundle drives the value and the
// gradient, so the sampled objective is a deterministic function of
// (parameters, noise, batch).
struct NoiseBundle {
  int S = 0;  // Monte-Carlo samples
  int B = 0;  // batch points

  // Per sample: [eps_c, eps_gamma, then per hidden layer: eps_upsilon,
  // eps_scale[0..K_l)].
  int scale_stride = 0;
  std::vector<int> layer_scale_off;

  // Per (sample, point): [per hidden layer: eps_u[0..K_l), then
  // eps_out[0..K_out)].
  int unit_stride = 0;
  std::vector<int> layer_unit_off;
  int out_off = 0;

  Vecd scale;  // S * scale_stride
  Vecd unit;   // S * B * unit_stride

  double eps_c(int s) const { return scale[s * scale_stride]; }
  double eps_gamma(int s) const { return scale[s * scale_stride + 1]; }
  double eps_upsilon(int s, int l) const {
    return scale[s * scale_stride + layer_scale_off[l]];
  }
  double eps_scale(int s, int l, int k) const {
    return scale[s * scale_stride + layer_scale_off[l] + 1 + k];
  }
  const double* eps_u(int s, int b, int l) const {
    return unit.data() + (static_cast<std::size_t>(s) * B + b) * unit_stride +
           layer_unit_off[l];
  }
  const double* eps_out(int s, int b) const {
    return unit.data() + (static_cast<std::size_t>(s) * B + b) * unit_stride + out_off;
  }
};

inline NoiseBundle make_noise(const NetworkSpec& spec, int S, int B, RngStream& rng) {
  NoiseBundle n;
  n.S = S;
  n.B = B;
  int off = 2;
  int uoff = 0;
  for (int l = 0; l < spec.hidden_layer_count(); ++l) {
    n.layer_scale_off.push_back(off);
    off += 1 + spec.hidden_width(l);
    n.layer_unit_off.push_back(uoff);
    uoff += spec.hidden_width(l);
  }
  n.out_off = uoff;
  n.scale_stride = off;
  n.unit_stride = uoff + spec.output_dim();
  n.scale.resize(static_cast<std::size_t>(S) * n.scale_stride);
  n.unit.resize(static_cast<std::size_t>(S) * B * n.unit_stride);
  for (double& v : n.scale) v = rng.normal();
  for (double& v : n.unit) v = rng.normal();
  return n;
}

}  // namespace hsbnn
