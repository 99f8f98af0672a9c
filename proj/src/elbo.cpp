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

#include "hsbnn/elbo.hpp"

#include <cmath>

#include "hsbnn/detail/elbo_core.hpp"

namespace hsbnn {

namespace {

// Fixed chunk width: the chunk decomposition (and therefore every floating
// point reduction order) is independent of the thread count.
constexpr int kChunkPoints = 16;

int chunk_count(int n) { return (n + kChunkPoints - 1) / kChunkPoints; }

double chunk_loglik_value(const NetworkSpec& spec, const IndexMap& ix,
                          std::span<const double> p, detail::Workspace<double>& ws,
                          const DataBatch& batch, const NoiseBundle& noise, int s_count,
                          int begin, int end) {
  double acc = 0.0;
  for (int b = begin; b < end; ++b) {
    const int col = batch.rows[b];
    for (int s = 0; s < s_count; ++s) {
      acc += detail::point_loglik<double>(spec, ix, p, ws, s, b, batch.X->col(col),
                                          (*batch.y)[col], noise);
    }
  }
  return acc;
}

}  // namespace

double elbo_estimate(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                     const GlobalPosteriors& aux_source, const DataBatch& batch,
                     const NoiseBundle& noise, const ElboOptions& opt) {
  const detail::AuxConstants aux = detail::make_aux_constants(spec, aux_source);
  const std::span<const double> p(params);

  double analytic = 0.0;
  if (!opt.likelihood_only) {
    analytic = detail::elbo_analytic<double>(spec, ix, p, aux);
  }

  const int B = static_cast<int>(batch.rows.size());
  if (B == 0) return analytic;

  detail::Workspace<double> ws;
  detail::build_workspace<double>(spec, ix, p, noise, opt.mc_samples, ws);

  const int C = chunk_count(B);
  Vecd partial(C, 0.0);
  if (opt.parallel) {
#pragma omp parallel
    {
      detail::Workspace<double> local = ws;  // scratch buffers are per thread
#pragma omp for schedule(dynamic)
      for (int c = 0; c < C; ++c) {
        partial[c] = chunk_loglik_value(spec, ix, p, local, batch, noise, opt.mc_samples,
                                        c * kChunkPoints,
                                        std::min(B, (c + 1) * kChunkPoints));
      }
    }
  } else {
    for (int c = 0; c < C; ++c) {
      partial[c] = chunk_loglik_value(spec, ix, p, ws, batch, noise, opt.mc_samples,
                                      c * kChunkPoints, std::min(B, (c + 1) * kChunkPoints));
    }
  }
  double lik = 0.0;
  for (double v : partial) lik += v;
  const double scale = batch.total_n / (static_cast<double>(B) * opt.mc_samples);
  return analytic + scale * lik;
}

double elbo_estimate_serial(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                            const GlobalPosteriors& aux_source, const DataBatch& batch,
                            const NoiseBundle& noise, const ElboOptions& opt) {
  const detail::AuxConstants aux = detail::make_aux_constants(spec, aux_source);
  const std::span<const double> p(params);
  double total = 0.0;
  if (!opt.likelihood_only) {
    total = detail::elbo_analytic<double>(spec, ix, p, aux);
  }
  const int B = static_cast<int>(batch.rows.size());
  if (B == 0) return total;
  detail::Workspace<double> ws;
  detail::build_workspace<double>(spec, ix, p, noise, opt.mc_samples, ws);
  const double scale = batch.total_n / (static_cast<double>(B) * opt.mc_samples);
  double lik = 0.0;
  for (int b = 0; b < B; ++b) {
    const int col = batch.rows[b];
    for (int s = 0; s < opt.mc_samples; ++s) {
      lik += detail::point_loglik<double>(spec, ix, p, ws, s, b, batch.X->col(col),
                                          (*batch.y)[col], noise);
    }
  }
  return total + scale * lik;
}

namespace {

using ad::Tape;
using ad::Var;

// Tape storage is reused across iterations within each thread.
Tape& thread_tape() {
  thread_local Tape t;
  return t;
}

void grad_chunk(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                const detail::AuxConstants& aux, const DataBatch& batch,
                const NoiseBundle& noise, const ElboOptions& opt, int begin, int end,
                bool with_analytic, double lik_seed, double& value_out, Vecd& grad_out) {
  Tape& tape = thread_tape();
  ad::ScopedTape guard(&tape);
  tape.reset(params);

  std::vector<Var> leaves(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) leaves[i] = tape.leaf(static_cast<int>(i));
  const std::span<const Var> p(leaves);

  double value = 0.0;
  if (with_analytic && !opt.likelihood_only) {
    const Var a = detail::elbo_analytic<Var>(spec, ix, p, aux);
    value += a.v;
    tape.backward(a, 1.0, grad_out);
    tape.reset(params);
    for (std::size_t i = 0; i < params.size(); ++i) leaves[i] = tape.leaf(static_cast<int>(i));
  }

  if (begin < end) {
    detail::Workspace<Var> ws;
    detail::build_workspace<Var>(spec, ix, p, noise, opt.mc_samples, ws);
    std::vector<Var> logliks;
    logliks.reserve(static_cast<std::size_t>(end - begin) * opt.mc_samples);
    for (int b = begin; b < end; ++b) {
      const int col = batch.rows[b];
      for (int s = 0; s < opt.mc_samples; ++s) {
        logliks.push_back(detail::point_loglik<Var>(spec, ix, p, ws, s, b,
                                                    batch.X->col(col), (*batch.y)[col],
                                                    noise));
      }
    }
    const Var root = ad::sum(std::span<const Var>(logliks));
    value += lik_seed * root.v;
    tape.backward(root, lik_seed, grad_out);
  }
  value_out = value;
}

}  // namespace

ElboResult grad_elbo(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                     const GlobalPosteriors& aux_source, const DataBatch& batch,
                     const NoiseBundle& noise, const ElboOptions& opt) {
  const detail::AuxConstants aux = detail::make_aux_constants(spec, aux_source);
  const int B = static_cast<int>(batch.rows.size());
  const int P = ix.P;
  const double lik_seed =
      B > 0 ? batch.total_n / (static_cast<double>(B) * opt.mc_samples) : 0.0;

  ElboResult out;
  out.grad.assign(P, 0.0);

  if (!opt.parallel) {
    double v = 0.0;
    grad_chunk(spec, ix, params, aux, batch, noise, opt, 0, B, true, lik_seed, v,
               out.grad);
    out.value = v;
  } else {
    const int C = B > 0 ? chunk_count(B) : 0;
    std::vector<Vecd> grads(C + 1, Vecd(P, 0.0));
    Vecd values(C + 1, 0.0);
    // Chunk C is the analytic part; chunks [0, C) cover the batch.
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c <= C; ++c) {
      if (c == C) {
        grad_chunk(spec, ix, params, aux, batch, noise, opt, 0, 0, true, lik_seed,
                   values[c], grads[c]);
      } else {
        grad_chunk(spec, ix, params, aux, batch, noise, opt, c * kChunkPoints,
                   std::min(B, (c + 1) * kChunkPoints), false, lik_seed, values[c],
                   grads[c]);
      }
    }
    double v = values[C];
    for (int c = 0; c < C; ++c) v += values[c];
    out.value = v;
    for (int c = 0; c <= C; ++c) {
      for (int i = 0; i < P; ++i) out.grad[i] += grads[c][i];
    }
  }

  if (!std::isfinite(out.value)) {
    throw TrainingFault("non-finite objective value", -1);
  }
  for (int i = 0; i < P; ++i) {
    if (!std::isfinite(out.grad[i])) {
      throw TrainingFault("non-finite gradient at " + param_name(ix, i), i);
    }
  }
  return out;
}

FiniteDiffReport finite_diff_check(const NetworkSpec& spec, const IndexMap& ix,
                                   const Vecd& params, const GlobalPosteriors& aux_source,
                                   const DataBatch& batch, const NoiseBundle& noise,
                                   const ElboOptions& opt, double step, double rel_tol,
                                   double abs_tol) {
  if (!(step > 0.0)) throw std::invalid_argument("finite_diff_check: step must be positive");
  const ElboResult res = grad_elbo(spec, ix, params, aux_source, batch, noise, opt);

  FiniteDiffReport rep;
  rep.n_checked = ix.P;
  double rel_sum = 0.0;
  Vecd perturbed = params;
  for (int i = 0; i < ix.P; ++i) {
    const double save = perturbed[i];
    perturbed[i] = save + step;
    const double up = elbo_estimate_serial(spec, ix, perturbed, aux_source, batch, noise, opt);
    perturbed[i] = save - step;
    const double dn = elbo_estimate_serial(spec, ix, perturbed, aux_source, batch, noise, opt);
    perturbed[i] = save;
    const double fd = (up - dn) / (2.0 * step);
    const double err = std::fabs(res.grad[i] - fd);
    const double rel = err / std::max(std::fabs(fd), 1e-12);
    rep.max_err = std::max(rep.max_err, err);
    rep.max_rel = std::max(rep.max_rel, rel);
    rel_sum += rel;
    if (err > std::max(abs_tol, rel_tol * std::fabs(fd))) {
      rep.failing.push_back(i);
    }
  }
  rep.mean_rel = ix.P > 0 ? rel_sum / ix.P : 0.0;
  return rep;
}

}  // namespace hsbnn
