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
#include <stdexcept>

#include "hsbnn/special.hpp"

namespace hsbnn {

// Parameters of exp(N(mu, sigma^2)).  Used for every positive scalar
// factor of the posterior: squared unit scales, squared layer scales,
// the squared output scale, the weight-decay scale and the noise
// precision.
struct LogNormalParams {
  double mu = 0.0;
  double sigma = 1.0;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
      throw std::invalid_argument("LogNormalParams: sigma must be a positive finite real");
    }
  }
};

// Density proportional to v^{-shape-1} exp(-rate/v).
struct InvGammaParams {
  double shape = 1.0;
  double rate = 1.0;

  void validate() const {
    if (!(shape > 0.0) || !(rate > 0.0)) {
      throw std::invalid_argument("InvGammaParams: shape and rate must be positive");
    }
  }
};

struct GammaParams {
  double shape = 1.0;
  double rate = 1.0;

  void validate() const {
    if (!(shape > 0.0) || !(rate > 0.0)) {
      throw std::invalid_argument("GammaParams: shape and rate must be positive");
    }
  }
};

// ---------------------------------------------------------------------------
// Templated cores.  The same formulas are evaluated on plain doubles and on
// reverse-mode variables, so everything that is differentiated lives here.
// ---------------------------------------------------------------------------

// exp(mu + sigma * eps)
template <class T>
T lognormal_sample_core(const T& mu, const T& sigma, double eps) {
  using std::exp;
  return exp(mu + sigma * eps);
}

// Entropy of exp(N(mu, sigma^2)):  mu + 0.5 * ln(2 pi e sigma^2)
template <class T>
T lognormal_entropy_core(const T& mu, const T& sigma) {
  using std::log;
  return mu + 0.5 * kLn2PiE + log(sigma);
}

// E[1/X] for ln X ~ N(mu, sigma^2):  exp(-mu + sigma^2 / 2)
template <class T>
T lognormal_mean_inverse_core(const T& mu, const T& sigma) {
  using std::exp;
  return exp(-mu + 0.5 * sigma * sigma);
}

// E_q[ln InvGamma(X | 1/2, 1/L)] with X log-normal and L inverse-gamma,
// X independent of L under q.  mean_log_l = E[ln L], mean_inv_l = E[1/L]
// are constants of the auxiliary factor.
template <class T>
T cross_lognormal_invgamma_core(const T& mu, const T& sigma, double mean_log_l,
                                double mean_inv_l) {
  return -0.5 * mean_log_l - kLnGammaHalf - 1.5 * mu -
         mean_inv_l * lognormal_mean_inverse_core(mu, sigma);
}

// E_q[ln InvGamma(X | a, b)] for X log-normal with constant a, b.
template <class T>
T e_ln_invgamma_lognormal_core(const T& mu, const T& sigma, double a, double b) {
  return a * std::log(b) - std::lgamma(a) - (a + 1.0) * mu -
         b * lognormal_mean_inverse_core(mu, sigma);
}

// E_q[ln Gamma(X | a, b)] for X log-normal.
template <class T>
T e_ln_gamma_lognormal_core(const T& mu, const T& sigma, double a, double b) {
  using std::exp;
  return a * std::log(b) - std::lgamma(a) + (a - 1.0) * mu -
         b * exp(mu + 0.5 * sigma * sigma);
}

// ---------------------------------------------------------------------------
// Double-typed surface.
// ---------------------------------------------------------------------------

inline double lognormal_sample(const LogNormalParams& p, double eps) {
  return lognormal_sample_core(p.mu, p.sigma, eps);
}

inline double lognormal_entropy(const LogNormalParams& p) {
  return lognormal_entropy_core(p.mu, p.sigma);
}

inline double lognormal_mean_inverse(const LogNormalParams& p) {
  return lognormal_mean_inverse_core(p.mu, p.sigma);
}

struct InvGammaMoments {
  double mean_inverse;  // E[1/V] = shape / rate
  double mean_log;      // E[ln V] = ln(rate) - digamma(shape)
  double entropy;
};

inline InvGammaMoments invgamma_moments(const InvGammaParams& p) {
  InvGammaMoments m;
  m.mean_inverse = p.shape / p.rate;
  m.mean_log = std::log(p.rate) - digamma(p.shape);
  m.entropy = p.shape + std::log(p.rate) + std::lgamma(p.shape) -
              (1.0 + p.shape) * digamma(p.shape);
  return m;
}

inline double cross_term_lognormal_invgamma(const LogNormalParams& x,
                                            const InvGammaParams& lam) {
  const InvGammaMoments m = invgamma_moments(lam);
  return cross_lognormal_invgamma_core(x.mu, x.sigma, m.mean_log, m.mean_inverse);
}

// E_q[ln InvGamma(L | 1/2, 1/b^2)] for the auxiliary factor itself; constant
// with respect to every gradient-trained parameter.
inline double e_ln_invgamma_prior_on_aux(const InvGammaParams& lam, double b) {
  const InvGammaMoments m = invgamma_moments(lam);
  return -std::log(b * b) * 0.5 - kLnGammaHalf - 1.5 * m.mean_log -
         (1.0 / (b * b)) * m.mean_inverse;
}

// P(X * Y < threshold) for independent log-normals X, Y parameterized by the
// distribution of their logs.  The product is log-normal again.
inline double lognormal_product_cdf(const LogNormalParams& a, const LogNormalParams& b,
                                    double threshold) {
  if (!(threshold > 0.0)) {
    throw std::invalid_argument("lognormal_product_cdf: threshold must be positive");
  }
  const double m = a.mu + b.mu;
  const double s = std::sqrt(a.sigma * a.sigma + b.sigma * b.sigma);
  return normal_cdf((std::log(threshold) - m) / s);
}

// Log densities used by the joint model evaluation and by test oracles.
inline double invgamma_logpdf(double v, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) - (shape + 1.0) * std::log(v) -
         rate / v;
}

inline double gamma_logpdf(double v, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(v) -
         rate * v;
}

inline double normal_logpdf(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLn2Pi + std::log(var) + d * d / var);
}

inline double lognormal_logpdf(double v, const LogNormalParams& p) {
  const double lv = std::log(v);
  return normal_logpdf(lv, p.mu, p.sigma * p.sigma) - lv;
}

}  // namespace hsbnn
