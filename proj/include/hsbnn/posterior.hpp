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
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hsbnn/matrix.hpp"
#include "hsbnn/network.hpp"
#include "hsbnn/rng.hpp"
#include "hsbnn/scalar_dist.hpp"

namespace hsbnn {

enum class Family { factorized, factorized_tied, semi_structured, structured };

std::string to_string(Family f);
Family family_from_string(const std::string& s);

// Positivity map for every variance-like parameter.  Stored values are
// unconstrained; the floor keeps optimization away from zero variance.
inline constexpr double kPositiveFloor = 1e-8;

template <class T>
T positive(const T& u) {
  using std::exp;
  return exp(u) + kPositiveFloor;
}

inline double to_positive(double u) { return std::exp(u) + kPositiveFloor; }
inline double from_positive(double s) {
  return std::log(std::max(s - kPositiveFloor, 1e-300));
}

// (mu, sigma) of the log of a positive variate, sigma stored unconstrained.
struct LogNormalPosterior {
  double mu = 0.0;
  double u_sigma = 0.0;

  LogNormalParams params() const { return {mu, to_positive(u_sigma)}; }
};

// --- the four per-layer families -------------------------------------------

// Independent Gaussian per non-centered weight plus independent log-normal
// squared unit scales.
struct FactorizedLayer {
  Matd mu;       // (K_{l-1}+1) x K_l
  Matd u_sigma;  // same shape
  std::vector<LogNormalPosterior> tau2;
};

// Weight variances pinned to one.
struct TiedLayer {
  Matd mu;
  std::vector<LogNormalPosterior> tau2;
};

// Matrix normal over the weights only; scales stay independent.
struct SemiStructuredLayer {
  Matd M;      // (K_{l-1}+1) x K_l
  Vecd u_psi;  // rows
  Vecd h;      // rows
  Vecd u_V;    // units
  std::vector<LogNormalPosterior> tau2;
};

// Joint matrix normal over [beta; nu^T] with nu_k = ln tau_k, so the last
// row of M carries the log unit scales.
struct StructuredLayer {
  Matd M;      // (K_{l-1}+2) x K_l
  Vecd u_psi;  // rows = K_{l-1}+2
  Vecd h;
  Vecd u_V;    // units
};

using LayerPosterior =
    std::variant<FactorizedLayer, TiedLayer, SemiStructuredLayer, StructuredLayer>;

Family family_of(const LayerPosterior& lp);

// Full variational state.  Auxiliary inverse-gamma factors are updated by
// fixed points, never by gradients, and are therefore kept as plain values.
struct GlobalPosteriors {
  PriorKind prior = PriorKind::regularized_horseshoe;
  std::vector<LayerPosterior> layers;
  std::vector<LogNormalPosterior> upsilon2;  // empty in gaussian mode
  Matd out_mu, out_u_sigma;
  LogNormalPosterior kappa2, c2, gamma;

  std::vector<std::vector<InvGammaParams>> lambda;  // per layer, per unit
  std::vector<InvGammaParams> vartheta;             // per layer
  InvGammaParams rho_kappa;
};

// --- flat parameter indexing -----------------------------------------------

// Stable coordinates for every gradient-trained parameter.  Blocks are
// column-major where they mirror a matrix, so a unit's incident weight
// vector is one contiguous slice.
struct LayerIndex {
  Family family = Family::factorized;
  int in_dim = 0;  // beta rows (bias included)
  int units = 0;
  int m_rows = 0;  // mean-matrix rows: in_dim, or in_dim+1 for structured
  int mu0 = -1;
  int us0 = -1;                      // factorized only
  int psi0 = -1, h0 = -1, V0 = -1;   // semi-structured / structured
  int tau_mu0 = -1, tau_us0 = -1;    // all but structured
  int ups_mu = -1, ups_us = -1;      // non-gaussian
};

struct IndexMap {
  PriorKind prior = PriorKind::regularized_horseshoe;
  int P = 0;
  int gamma_mu = -1, gamma_us = -1;
  int c2_mu = -1, c2_us = -1;        // regularized horseshoe only
  int kappa_mu = -1, kappa_us = -1;  // non-gaussian only
  std::vector<LayerIndex> layers;
  int out_mu0 = -1, out_us0 = -1;
  int out_rows = 0, out_cols = 0;
};

IndexMap build_index_map(const NetworkSpec& spec, const std::vector<Family>& families);

Vecd flatten(const GlobalPosteriors& q, const IndexMap& ix);
void unflatten(std::span<const double> p, const IndexMap& ix, GlobalPosteriors& q);

// Human-readable coordinate name for fault diagnostics.
std::string param_name(const IndexMap& ix, int i);

// Marginal of ln tau_k^2 (and friends) read off the flat vector; for the
// structured family this is the exact log-normal marginal implied by the
// joint matrix normal: mu = 2 M[last, k], sigma = 2 sqrt(V_k U_last,last).
LogNormalParams tau2_marginal(const IndexMap& ix, std::span<const double> p, int l, int k);
LogNormalParams upsilon2_marginal(const IndexMap& ix, std::span<const double> p, int l);
LogNormalParams kappa2_marginal(const IndexMap& ix, std::span<const double> p);
LogNormalParams c2_marginal(const IndexMap& ix, std::span<const double> p);
LogNormalParams gamma_marginal(const IndexMap& ix, std::span<const double> p);

// Fresh state per the initialization scheme; auxiliaries start at (1, 1)
// until the first fixed-point sweep.
GlobalPosteriors init_posteriors(const NetworkSpec& spec, Family family, RngStream& rng);

std::vector<Family> families_of(const GlobalPosteriors& q);

}  // namespace hsbnn
