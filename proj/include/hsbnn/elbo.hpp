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
#include <stdexcept>
#include <string>
#include <vector>

#include "hsbnn/matrix.hpp"
#include "hsbnn/network.hpp"
#include "hsbnn/noise.hpp"
#include "hsbnn/posterior.hpp"

namespace hsbnn {

struct DataBatch {
  const Matd* X = nullptr;  // D x N, one column per point
  const Vecd* y = nullptr;
  std::vector<int> rows;    // column indices forming the batch
  double total_n = 0.0;     // dataset size for the likelihood rescaling
};

struct ElboOptions {
  int mc_samples = 1;
  bool parallel = true;
  bool likelihood_only = false;  // drop the analytic terms (used by tests)
};

struct ElboResult {
  double value = 0.0;
  Vecd grad;
};

class TrainingFault : public std::runtime_error {
 public:
  TrainingFault(const std::string& what, int param_index)
      : std::runtime_error(what), param_index(param_index) {}
  int param_index = -1;
};

// Monte-Carlo objective estimate.  Deterministic given the noise bundle;
// with `parallel` the batch is split into fixed chunks whose partial sums
// are reduced in index order, so the result does not depend on the number
// of threads.
double elbo_estimate(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                     const GlobalPosteriors& aux_source, const DataBatch& batch,
                     const NoiseBundle& noise, const ElboOptions& opt);

// Straight-line single-pass reference used to validate the chunked kernel.
double elbo_estimate_serial(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                            const GlobalPosteriors& aux_source, const DataBatch& batch,
                            const NoiseBundle& noise, const ElboOptions& opt);

// Value and exact gradient of the sampled objective with respect to every
// flat parameter coordinate (reverse mode).
ElboResult grad_elbo(const NetworkSpec& spec, const IndexMap& ix, const Vecd& params,
                     const GlobalPosteriors& aux_source, const DataBatch& batch,
                     const NoiseBundle& noise, const ElboOptions& opt);

struct FiniteDiffReport {
  double max_err = 0.0;       // worst |ad - fd| over coordinates
  double max_rel = 0.0;       // worst error relative to the tolerance rule
  double mean_rel = 0.0;
  std::vector<int> failing;   // coordinates violating the tolerance
  int n_checked = 0;
  bool ok(  ) const { return failing.empty(); }
};

// Central differences of the frozen-noise objective against grad_elbo.
// A coordinate fails when |ad - fd| > max(abs_tol, rel_tol * |fd|).
FiniteDiffReport finite_diff_check(const NetworkSpec& spec, const IndexMap& ix,
                                   const Vecd& params, const GlobalPosteriors& aux_source,
                                   const DataBatch& batch, const NoiseBundle& noise,
                                   const ElboOptions& opt, double step, double rel_tol,
                                   double abs_tol);

}  // namespace hsbnn
