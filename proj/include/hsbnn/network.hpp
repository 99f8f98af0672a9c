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

#include <span>
#include <string>
#include <vector>

#include "hsbnn/matrix.hpp"

namespace hsbnn {

enum class Nonlinearity { relu, tanh };
enum class PriorKind {
  regularized_horseshoe,  // unit/layer scales with weight-decay cap c
  horseshoe,              // same without the cap (c -> infinity path)
  gaussian,               // N(0,1) on every weight, no scale hierarchy
};
enum class Likelihood { gaussian_with_gamma_precision };

struct NetworkSpec {
  // [D, K_1, ..., K_{L-1}, K_L]; K_L is the output width.
  std::vector<int> layer_widths;
  Nonlinearity nonlinearity = Nonlinearity::relu;
  PriorKind prior = PriorKind::regularized_horseshoe;
  Likelihood likelihood = Likelihood::gaussian_with_gamma_precision;
  double b0 = 1.0;        // unit-scale half-Cauchy scale
  double bg = 1e-5;       // layer-scale half-Cauchy scale
  double b_kappa = 5.0;   // output-scale half-Cauchy scale
  double c_a = 2.0;       // inverse-gamma prior on c^2
  double c_b = 6.0;
  double gamma_a = 6.0;   // gamma prior on the noise precision
  double gamma_b = 6.0;

  int input_dim() const { return layer_widths.front(); }
  int output_dim() const { return layer_widths.back(); }
  int hidden_layer_count() const { return static_cast<int>(layer_widths.size()) - 2; }
  int hidden_width(int l) const { return layer_widths[l + 1]; }
  // Rows of the weight matrix into hidden layer l, bias included.
  int fan_in(int l) const { return layer_widths[l] + 1; }

  void validate() const;
};

// One draw of every latent the forward function consumes.  Squared scales
// are stored; the horseshoe auxiliaries live in AuxValues.
struct SampledWeights {
  std::vector<Matd> beta;   // per hidden layer, (K_{l-1}+1) x K_l
  std::vector<Vecd> tau2;   // per hidden layer, squared unit scales
  Vecd upsilon2;            // per hidden layer, squared layer scale
  Matd w_out;               // (K_{L-1}+1) x K_L
  double kappa2 = 1.0;
  double c2 = 1.0;
  double gamma = 1.0;       // observation precision
};

struct AuxValues {
  std::vector<Vecd> lambda;  // per hidden layer, per unit
  Vecd vartheta;             // per hidden layer
  double rho_kappa = 1.0;
};

// tilde-tau^2 = c^2 tau^2 / (c^2 + tau^2 upsilon^2); strictly increasing in
// tau^2 and bounded by min(tau^2, c^2 / upsilon^2).
template <class T>
T regularized_scale_core(const T& tau2, const T& upsilon2, const T& c2) {
  return c2 * tau2 / (c2 + tau2 * upsilon2);
}

double regularized_scale(double tau2, double upsilon2, double c2);

// Column k of the result is sqrt(tilde-tau_k^2 * upsilon^2) * beta[:, k].
// For the plain horseshoe pass c2 <= 0 semantics are not used; callers use
// `regularized` to select the scale map.
Matd assemble_weights(const Matd& beta, std::span<const double> tau2, double upsilon2,
                      double c2, bool regularized);

// Deterministic forward pass; bias handled by appending 1 to each layer
// input, no nonlinearity on the output layer.
Vecd forward(const NetworkSpec& spec, const SampledWeights& w, std::span<const double> x);

// Log of the joint density of data and latents at one configuration.
// The batch log-likelihood is rescaled by total_n / batch_size.
double log_joint(const NetworkSpec& spec, const SampledWeights& w, const AuxValues& aux,
                 const Matd& X, std::span<const double> y, double total_n);

std::string to_string(PriorKind p);
std::string to_string(Nonlinearity n);

}  // namespace hsbnn
