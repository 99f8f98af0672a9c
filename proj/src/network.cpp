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

#include "hsbnn/network.hpp"

#include <cmath>
#include <stdexcept>

#include "hsbnn/scalar_dist.hpp"

namespace hsbnn {

void NetworkSpec::validate() const {
  if (layer_widths.size() < 3) {
    throw std::invalid_argument("NetworkSpec: need at least one hidden layer");
  }
  for (int w : layer_widths) {
    if (w < 1) throw std::invalid_argument("NetworkSpec: layer widths must be positive");
  }
  for (double s : {b0, bg, b_kappa, c_a, c_b, gamma_a, gamma_b}) {
    if (!(s > 0.0)) throw std::invalid_argument("NetworkSpec: scales must be positive");
  }
}

double regularized_scale(double tau2, double upsilon2, double c2) {
  return regularized_scale_core(tau2, upsilon2, c2);
}

Matd assemble_weights(const Matd& beta, std::span<const double> tau2, double upsilon2,
                      double c2, bool regularized) {
  if (tau2.size() != beta.cols()) {
    throw std::invalid_argument("assemble_weights: one tau^2 per unit required");
  }
  Matd w(beta.rows(), beta.cols());
  for (std::size_t k = 0; k < beta.cols(); ++k) {
    const double t2 = regularized ? regularized_scale(tau2[k], upsilon2, c2) : tau2[k];
    const double s = std::sqrt(t2 * upsilon2);
    for (std::size_t i = 0; i < beta.rows(); ++i) {
      w(i, k) = s * beta(i, k);
    }
  }
  return w;
}

namespace {

Vecd apply_layer(const Matd& w, std::span<const double> in) {
  if (in.size() + 1 != w.rows()) {
    throw std::invalid_argument("forward: input length mismatch");
  }
  Vecd out(w.cols());
  for (std::size_t k = 0; k < w.cols(); ++k) {
    double acc = w(in.size(), k);  // bias row
    for (std::size_t i = 0; i < in.size(); ++i) acc += w(i, k) * in[i];
    out[k] = acc;
  }
  return out;
}

}  // namespace

Vecd forward(const NetworkSpec& spec, const SampledWeights& w, std::span<const double> x) {
  Vecd z(x.begin(), x.end());
  const bool regularized = spec.prior == PriorKind::regularized_horseshoe;
  for (int l = 0; l < spec.hidden_layer_count(); ++l) {
    Vecd u;
    if (spec.prior == PriorKind::gaussian) {
      u = apply_layer(w.beta[l], z);
    } else {
      const Matd wl = assemble_weights(w.beta[l], w.tau2[l], w.upsilon2[l], w.c2, regularized);
      u = apply_layer(wl, z);
    }
    for (double& v : u) {
      v = spec.nonlinearity == Nonlinearity::relu ? (v > 0.0 ? v : 0.0) : std::tanh(v);
    }
    z = std::move(u);
  }
  return apply_layer(w.w_out, z);
}

double log_joint(const NetworkSpec& spec, const SampledWeights& w, const AuxValues& aux,
                 const Matd& X, std::span<const double> y, double total_n) {
  if (spec.output_dim() != 1) {
    throw std::invalid_argument("log_joint: single-output likelihood only");
  }
  double lp = 0.0;

  if (spec.prior == PriorKind::gaussian) {
    for (const Matd& b : w.beta) {
      for (double v : b.data()) lp += normal_logpdf(v, 0.0, 1.0);
    }
    for (double v : w.w_out.data()) lp += normal_logpdf(v, 0.0, 1.0);
  } else {
    if (spec.prior == PriorKind::regularized_horseshoe) {
      lp += invgamma_logpdf(w.c2, spec.c_a, spec.c_b);
    }
    // r(kappa, rho | b_kappa)
    lp += invgamma_logpdf(w.kappa2, 0.5, 1.0 / aux.rho_kappa);
    lp += invgamma_logpdf(aux.rho_kappa, 0.5, 1.0 / (spec.b_kappa * spec.b_kappa));
    for (double v : w.w_out.data()) lp += normal_logpdf(v, 0.0, w.kappa2);

    for (int l = 0; l < spec.hidden_layer_count(); ++l) {
      lp += invgamma_logpdf(w.upsilon2[l], 0.5, 1.0 / aux.vartheta[l]);
      lp += invgamma_logpdf(aux.vartheta[l], 0.5, 1.0 / (spec.bg * spec.bg));
      for (std::size_t k = 0; k < w.tau2[l].size(); ++k) {
        lp += invgamma_logpdf(w.tau2[l][k], 0.5, 1.0 / aux.lambda[l][k]);
        lp += invgamma_logpdf(aux.lambda[l][k], 0.5, 1.0 / (spec.b0 * spec.b0));
      }
      for (double v : w.beta[l].data()) lp += normal_logpdf(v, 0.0, 1.0);
    }
  }

  lp += gamma_logpdf(w.gamma, spec.gamma_a, spec.gamma_b);

  double ll = 0.0;
  for (std::size_t n = 0; n < X.cols(); ++n) {
    const Vecd f = forward(spec, w, X.col(n));
    ll += normal_logpdf(y[n], f[0], 1.0 / w.gamma);
  }
  lp += (total_n / static_cast<double>(X.cols())) * ll;
  if (!std::isfinite(lp)) {
    throw std::runtime_error("log_joint: non-finite result");
  }
  return lp;
}

std::string to_string(PriorKind p) {
  switch (p) {
    case PriorKind::regularized_horseshoe: return "regularized_horseshoe";
    case PriorKind::horseshoe: return "horseshoe";
    case PriorKind::gaussian: return "gaussian";
  }
  return "?";
}

std::string to_string(Nonlinearity n) {
  return n == Nonlinearity::relu ? "relu" : "tanh";
}

}  // namespace hsbnn
