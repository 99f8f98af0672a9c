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

#include <cstdint>
#include <span>
#include <vector>

#include "hsbnn/dataset.hpp"
#include "hsbnn/elbo.hpp"
#include "hsbnn/posterior.hpp"

namespace hsbnn {

struct TrainConfig {
  double learning_rate = 0.005;
  int batch_size = 128;
  int iterations = 2000;
  int mc_samples = 1;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool unit_norm_projection = true;
  std::uint64_t seed = 0;
  bool parallel = true;

  void validate() const;
};

struct AdamState {
  Vecd m, v;
  long t = 0;
};

// One bias-corrected ascent step.  With a mask, only flagged coordinates
// move (their moments alone are advanced).
void adam_step(AdamState& st, const TrainConfig& cfg, std::span<const double> grad,
               Vecd& params, const std::vector<char>* mask = nullptr);

// Coordinate-ascent optimum of the auxiliary factor tied to a log-normal
// posterior over a squared scale: InvGamma(1, E[1/scale^2] + 1/b^2).
InvGammaParams fixed_point_update_aux(const LogNormalParams& scale_posterior, double b);

// The terms of the objective that depend on one auxiliary factor, as a
// function of that factor's parameters.  The fixed point maximizes this.
double restricted_aux_objective(const InvGammaParams& q, const LogNormalParams& scale_posterior,
                                double b);

// Refreshes every auxiliary factor from the current scale posteriors.
void fixed_point_sweep(const NetworkSpec& spec, const IndexMap& ix,
                       std::span<const double> params, GlobalPosteriors& q);

// Rescales each layer's psi, V and h vectors to unit Euclidean norm.
void project_unit_norms(const IndexMap& ix, Vecd& params);

struct TrainState {
  NetworkSpec spec;
  IndexMap ix;
  GlobalPosteriors q;       // aux factors live here; flat params are authoritative
  Vecd params;
  AdamState adam;
  long iter = 0;
  Vecd elbo_trace;

  // Pushes the flat parameters back into the posterior containers.
  void sync_posteriors() { unflatten(params, ix, q); }
};

TrainState init_train_state(const NetworkSpec& spec, Family family, const TrainConfig& cfg);

// Adam ascent on the reparameterized objective, then fixed-point updates,
// then the optional norm projection.
void train_step(TrainState& st, const TrainConfig& cfg, const DataBatch& batch,
                const NoiseBundle& noise);

TrainState train(const NetworkSpec& spec, Family family, const TrainConfig& cfg,
                 const Dataset& data);

// Continues training an existing state (dataset rows are all used when
// batch_size >= n, otherwise reshuffled per epoch).
void train_loop(TrainState& st, const TrainConfig& cfg, const Dataset& data);

// Mask selecting weight-mean coordinates only (non-centered means and
// output means); everything else frozen.
std::vector<char> mean_parameter_mask(const IndexMap& ix);

}  // namespace hsbnn
