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

#include "hsbnn/posterior.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace hsbnn {

std::string to_string(Family f) {
  switch (f) {
    case Family::factorized: return "factorized";
    case Family::factorized_tied: return "factorized_tied";
    case Family::semi_structured: return "semi_structured";
    case Family::structured: return "structured";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  if (s == "factorized") return Family::factorized;
  if (s == "factorized_tied" || s == "tied") return Family::factorized_tied;
  if (s == "semi_structured" || s == "semi-structured") return Family::semi_structured;
  if (s == "structured") return Family::structured;
  throw std::invalid_argument("unknown family: " + s);
}

Family family_of(const LayerPosterior& lp) {
  return static_cast<Family>(lp.index());
}

std::vector<Family> families_of(const GlobalPosteriors& q) {
  std::vector<Family> fams;
  fams.reserve(q.layers.size());
  for (const auto& l : q.layers) fams.push_back(family_of(l));
  return fams;
}

IndexMap build_index_map(const NetworkSpec& spec, const std::vector<Family>& families) {
  spec.validate();
  if (families.size() != static_cast<std::size_t>(spec.hidden_layer_count())) {
    throw std::invalid_argument("build_index_map: one family per hidden layer required");
  }
  IndexMap ix;
  ix.prior = spec.prior;
  int p = 0;
  ix.gamma_mu = p++;
  ix.gamma_us = p++;
  if (spec.prior == PriorKind::regularized_horseshoe) {
    ix.c2_mu = p++;
    ix.c2_us = p++;
  }
  if (spec.prior != PriorKind::gaussian) {
    ix.kappa_mu = p++;
    ix.kappa_us = p++;
  }
  for (int l = 0; l < spec.hidden_layer_count(); ++l) {
    LayerIndex li;
    li.family = spec.prior == PriorKind::gaussian ? Family::factorized : families[l];
    li.in_dim = spec.fan_in(l);
    li.units = spec.hidden_width(l);
    li.m_rows = li.family == Family::structured ? li.in_dim + 1 : li.in_dim;
    if (spec.prior != PriorKind::gaussian) {
      li.ups_mu = p++;
      li.ups_us = p++;
    }
    li.mu0 = p;
    p += li.m_rows * li.units;
    if (li.family == Family::factorized) {
      li.us0 = p;
      p += li.in_dim * li.units;
    }
    if (li.family == Family::semi_structured || li.family == Family::structured) {
      li.psi0 = p;
      p += li.m_rows;
      li.h0 = p;
      p += li.m_rows;
      li.V0 = p;
      p += li.units;
    }
    if (li.family != Family::structured && spec.prior != PriorKind::gaussian) {
      li.tau_mu0 = p;
      p += li.units;
      li.tau_us0 = p;
      p += li.units;
    }
    ix.layers.push_back(li);
  }
  ix.out_rows = spec.layer_widths[spec.layer_widths.size() - 2] + 1;
  ix.out_cols = spec.output_dim();
  ix.out_mu0 = p;
  p += ix.out_rows * ix.out_cols;
  ix.out_us0 = p;
  p += ix.out_rows * ix.out_cols;
  ix.P = p;
  return ix;
}

namespace {

template <class Src>
void copy_block(const Src& src, Vecd& dst, int off) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[off + i] = src[i];
}

template <class Dst>
void load_block(std::span<const double> src, int off, Dst& dst) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[off + i];
}

}  // namespace

Vecd flatten(const GlobalPosteriors& q, const IndexMap& ix) {
  Vecd p(ix.P, 0.0);
  p[ix.gamma_mu] = q.gamma.mu;
  p[ix.gamma_us] = q.gamma.u_sigma;
  if (ix.c2_mu >= 0) {
    p[ix.c2_mu] = q.c2.mu;
    p[ix.c2_us] = q.c2.u_sigma;
  }
  if (ix.kappa_mu >= 0) {
    p[ix.kappa_mu] = q.kappa2.mu;
    p[ix.kappa_us] = q.kappa2.u_sigma;
  }
  for (std::size_t l = 0; l < ix.layers.size(); ++l) {
    const LayerIndex& li = ix.layers[l];
    if (li.ups_mu >= 0) {
      p[li.ups_mu] = q.upsilon2[l].mu;
      p[li.ups_us] = q.upsilon2[l].u_sigma;
    }
    std::visit(
        [&](const auto& layer) {
          using L = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<L, FactorizedLayer>) {
            copy_block(layer.mu.data(), p, li.mu0);
            copy_block(layer.u_sigma.data(), p, li.us0);
          } else if constexpr (std::is_same_v<L, TiedLayer>) {
            copy_block(layer.mu.data(), p, li.mu0);
          } else {
            copy_block(layer.M.data(), p, li.mu0);
            copy_block(layer.u_psi, p, li.psi0);
            copy_block(layer.h, p, li.h0);
            copy_block(layer.u_V, p, li.V0);
          }
          if constexpr (!std::is_same_v<L, StructuredLayer>) {
            if (li.tau_mu0 >= 0) {
              for (int k = 0; k < li.units; ++k) {
                p[li.tau_mu0 + k] = layer.tau2[k].mu;
                p[li.tau_us0 + k] = layer.tau2[k].u_sigma;
              }
            }
          }
        },
        q.layers[l]);
  }
  copy_block(q.out_mu.data(), p, ix.out_mu0);
  copy_block(q.out_u_sigma.data(), p, ix.out_us0);
  return p;
}

void unflatten(std::span<const double> p, const IndexMap& ix, GlobalPosteriors& q) {
  if (p.size() != static_cast<std::size_t>(ix.P)) {
    throw std::invalid_argument("unflatten: parameter vector length mismatch");
  }
  q.gamma.mu = p[ix.gamma_mu];
  q.gamma.u_sigma = p[ix.gamma_us];
  if (ix.c2_mu >= 0) {
    q.c2.mu = p[ix.c2_mu];
    q.c2.u_sigma = p[ix.c2_us];
  }
  if (ix.kappa_mu >= 0) {
    q.kappa2.mu = p[ix.kappa_mu];
    q.kappa2.u_sigma = p[ix.kappa_us];
  }
  for (std::size_t l = 0; l < ix.layers.size(); ++l) {
    const LayerIndex& li = ix.layers[l];
    if (li.ups_mu >= 0) {
      q.upsilon2[l].mu = p[li.ups_mu];
      q.upsilon2[l].u_sigma = p[li.ups_us];
    }
    std::visit(
        [&](auto& layer) {
          using L = std::decay_t<decltype(layer)>;
          if constexpr (std::is_same_v<L, FactorizedLayer>) {
            load_block(p, li.mu0, layer.mu.data());
            load_block(p, li.us0, layer.u_sigma.data());
          } else if constexpr (std::is_same_v<L, TiedLayer>) {
            load_block(p, li.mu0, layer.mu.data());
          } else {
            load_block(p, li.mu0, layer.M.data());
            load_block(p, li.psi0, layer.u_psi);
            load_block(p, li.h0, layer.h);
            load_block(p, li.V0, layer.u_V);
          }
          if constexpr (!std::is_same_v<L, StructuredLayer>) {
            if (li.tau_mu0 >= 0) {
              for (int k = 0; k < li.units; ++k) {
                layer.tau2[k].mu = p[li.tau_mu0 + k];
                layer.tau2[k].u_sigma = p[li.tau_us0 + k];
              }
            }
          }
        },
        q.layers[l]);
  }
  load_block(p, ix.out_mu0, q.out_mu.data());
  load_block(p, ix.out_us0, q.out_u_sigma.data());
}

std::string param_name(const IndexMap& ix, int i) {
  char buf[96];
  auto fmt = [&](const char* f, auto... args) {
    std::snprintf(buf, sizeof(buf), f, args...);
    return std::string(buf);
  };
  if (i == ix.gamma_mu) return "gamma.mu";
  if (i == ix.gamma_us) return "gamma.u_sigma";
  if (i == ix.c2_mu) return "c2.mu";
  if (i == ix.c2_us) return "c2.u_sigma";
  if (i == ix.kappa_mu) return "kappa2.mu";
  if (i == ix.kappa_us) return "kappa2.u_sigma";
  for (std::size_t l = 0; l < ix.layers.size(); ++l) {
    const LayerIndex& li = ix.layers[l];
    if (i == li.ups_mu) return fmt("layer%zu.upsilon2.mu", l);
    if (i == li.ups_us) return fmt("layer%zu.upsilon2.u_sigma", l);
    if (i >= li.mu0 && i < li.mu0 + li.m_rows * li.units) {
      const int o = i - li.mu0;
      return fmt("layer%zu.mean[%d,%d]", l, o % li.m_rows, o / li.m_rows);
    }
    if (li.us0 >= 0 && i >= li.us0 && i < li.us0 + li.in_dim * li.units) {
      const int o = i - li.us0;
      return fmt("layer%zu.u_sigma[%d,%d]", l, o % li.in_dim, o / li.in_dim);
    }
    if (li.psi0 >= 0 && i >= li.psi0 && i < li.psi0 + li.m_rows) {
      return fmt("layer%zu.u_psi[%d]", l, i - li.psi0);
    }
    if (li.h0 >= 0 && i >= li.h0 && i < li.h0 + li.m_rows) {
      return fmt("layer%zu.h[%d]", l, i - li.h0);
    }
    if (li.V0 >= 0 && i >= li.V0 && i < li.V0 + li.units) {
      return fmt("layer%zu.u_V[%d]", l, i - li.V0);
    }
    if (li.tau_mu0 >= 0 && i >= li.tau_mu0 && i < li.tau_mu0 + li.units) {
      return fmt("layer%zu.tau2[%d].mu", l, i - li.tau_mu0);
    }
    if (li.tau_us0 >= 0 && i >= li.tau_us0 && i < li.tau_us0 + li.units) {
      return fmt("layer%zu.tau2[%d].u_sigma", l, i - li.tau_us0);
    }
  }
  if (i >= ix.out_mu0 && i < ix.out_mu0 + ix.out_rows * ix.out_cols) {
    const int o = i - ix.out_mu0;
    return fmt("out.mu[%d,%d]", o % ix.out_rows, o / ix.out_rows);
  }
  if (i >= ix.out_us0 && i < ix.out_us0 + ix.out_rows * ix.out_cols) {
    const int o = i - ix.out_us0;
    return fmt("out.u_sigma[%d,%d]", o % ix.out_rows, o / ix.out_rows);
  }
  return fmt("param[%d]", i);
}

LogNormalParams tau2_marginal(const IndexMap& ix, std::span<const double> p, int l, int k) {
  const LayerIndex& li = ix.layers[l];
  if (li.family == Family::structured) {
    const double mu = 2.0 * p[li.mu0 + k * li.m_rows + (li.m_rows - 1)];
    const double psi_nu = to_positive(p[li.psi0 + li.m_rows - 1]);
    const double h_nu = p[li.h0 + li.m_rows - 1];
    const double vk = to_positive(p[li.V0 + k]);
    const double sigma = 2.0 * std::sqrt(vk * (psi_nu + h_nu * h_nu));
    return {mu, sigma};
  }
  return {p[li.tau_mu0 + k], to_positive(p[li.tau_us0 + k])};
}

LogNormalParams upsilon2_marginal(const IndexMap& ix, std::span<const double> p, int l) {
  const LayerIndex& li = ix.layers[l];
  return {p[li.ups_mu], to_positive(p[li.ups_us])};
}

LogNormalParams kappa2_marginal(const IndexMap& ix, std::span<const double> p) {
  return {p[ix.kappa_mu], to_positive(p[ix.kappa_us])};
}

LogNormalParams c2_marginal(const IndexMap& ix, std::span<const double> p) {
  return {p[ix.c2_mu], to_positive(p[ix.c2_us])};
}

LogNormalParams gamma_marginal(const IndexMap& ix, std::span<const double> p) {
  return {p[ix.gamma_mu], to_positive(p[ix.gamma_us])};
}

namespace {

constexpr double kInitLnScale2 = -4.6051701859880914;  // ln(1e-2)
constexpr double kInitScaleStd = 0.1;

void init_mean_matrix(Matd& m, double fan_in, RngStream& rng) {
  const double s = 1.0 / std::sqrt(fan_in);
  for (double& v : m.data()) v = s * rng.normal();
}

}  // namespace

GlobalPosteriors init_posteriors(const NetworkSpec& spec, Family family, RngStream& rng) {
  spec.validate();
  GlobalPosteriors q;
  q.prior = spec.prior;
  const int H = spec.hidden_layer_count();
  const double u_sigma_init = from_positive(kInitScaleStd);

  for (int l = 0; l < H; ++l) {
    const int in_dim = spec.fan_in(l);
    const int units = spec.hidden_width(l);
    const Family fam = spec.prior == PriorKind::gaussian ? Family::factorized : family;

    std::vector<LogNormalPosterior> tau2(units);
    for (auto& t : tau2) t = {kInitLnScale2, u_sigma_init};

    switch (fam) {
      case Family::factorized: {
        FactorizedLayer layer;
        layer.mu = Matd(in_dim, units);
        init_mean_matrix(layer.mu, in_dim, rng);
        layer.u_sigma = Matd(in_dim, units, u_sigma_init);
        layer.tau2 = std::move(tau2);
        q.layers.emplace_back(std::move(layer));
        break;
      }
      case Family::factorized_tied: {
        TiedLayer layer;
        layer.mu = Matd(in_dim, units);
        init_mean_matrix(layer.mu, in_dim, rng);
        layer.tau2 = std::move(tau2);
        q.layers.emplace_back(std::move(layer));
        break;
      }
      case Family::semi_structured:
      case Family::structured: {
        const bool structured = fam == Family::structured;
        const int m = structured ? in_dim + 1 : in_dim;
        Matd M(m, units);
        init_mean_matrix(M, in_dim, rng);
        if (structured) {
          for (int k = 0; k < units; ++k) M(m - 1, k) = 0.5 * kInitLnScale2;
        }
        Vecd u_psi(m, from_positive(1.0 / m));
        Vecd h(m);
        double hn = 0.0;
        for (double& v : h) {
          v = rng.normal();
          hn += v * v;
        }
        hn = std::sqrt(hn);
        for (double& v : h) v *= 0.01 / hn;
        Vecd u_V(units, from_positive(1.0 / units));
        if (structured) {
          q.layers.emplace_back(StructuredLayer{std::move(M), std::move(u_psi),
                                                std::move(h), std::move(u_V)});
        } else {
          q.layers.emplace_back(SemiStructuredLayer{std::move(M), std::move(u_psi),
                                                    std::move(h), std::move(u_V),
                                                    std::move(tau2)});
        }
        break;
      }
    }

    if (spec.prior != PriorKind::gaussian) {
      q.upsilon2.push_back({kInitLnScale2, u_sigma_init});
      q.lambda.emplace_back(units, InvGammaParams{1.0, 1.0});
      q.vartheta.push_back({1.0, 1.0});
    }
  }

  const int out_in = spec.layer_widths[spec.layer_widths.size() - 2] + 1;
  q.out_mu = Matd(out_in, spec.output_dim());
  init_mean_matrix(q.out_mu, out_in, rng);
  q.out_u_sigma = Matd(out_in, spec.output_dim(), u_sigma_init);

  q.gamma = {std::log(spec.gamma_a / spec.gamma_b), u_sigma_init};
  if (spec.prior == PriorKind::regularized_horseshoe) {
    const double c2_mean = spec.c_a > 1.0 ? spec.c_b / (spec.c_a - 1.0) : spec.c_b;
    q.c2 = {std::log(c2_mean), u_sigma_init};
  }
  if (spec.prior != PriorKind::gaussian) {
    // Half-Cauchy has no mean; start the squared output scale at the prior
    // median b_kappa^2.
    q.kappa2 = {2.0 * std::log(spec.b_kappa), u_sigma_init};
    q.rho_kappa = {1.0, 1.0};
  }
  return q;
}

}  // namespace hsbnn
