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

#include "hsbnn/lowrank.hpp"

#include <cmath>
#include <stdexcept>

#include "hsbnn/ad.hpp"

namespace hsbnn {

void DiagRankOne::validate() const {
  if (psi.size() != h.size()) {
    throw std::invalid_argument("DiagRankOne: psi and h must have equal length");
  }
  for (double p : psi) {
    if (!(p > 0.0)) throw std::invalid_argument("DiagRankOne: psi entries must be positive");
  }
}

void MatrixNormalStructured::validate() const {
  U.validate();
  if (U.dim() != M.rows()) {
    throw std::invalid_argument("MatrixNormalStructured: U dimension must match rows of M");
  }
  if (V.size() != M.cols()) {
    throw std::invalid_argument("MatrixNormalStructured: V length must match cols of M");
  }
  for (double v : V) {
    if (!(v > 0.0)) throw std::invalid_argument("MatrixNormalStructured: V entries must be positive");
  }
}

double quad_form(const DiagRankOne& U, std::span<const double> a) {
  if (a.size() != U.dim()) {
    throw std::invalid_argument("quad_form: vector length must match U dimension");
  }
  double diag = 0.0;
  double ha = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diag += U.psi[i] * a[i] * a[i];
    ha += U.h[i] * a[i];
  }
  return diag + ha * ha;
}

double logdet(const DiagRankOne& U) {
  return logdet_core<double>(U.psi, U.h);
}

double mn_entropy(const MatrixNormalStructured& q) {
  return mn_entropy_core<double>(q.U.psi, q.U.h, q.V);
}

Matd mn_sample(const MatrixNormalStructured& q, const Matd& E, std::span<const double> e0) {
  const std::size_t m = q.rows();
  const std::size_t n = q.cols();
  if (E.rows() != m || E.cols() != n || e0.size() != n) {
    throw std::invalid_argument("mn_sample: noise dimensions must match the distribution");
  }
  Matd out(m, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double sv = std::sqrt(q.V[j]);
    for (std::size_t i = 0; i < m; ++i) {
      out(i, j) = q.M(i, j) + (std::sqrt(q.U.psi[i]) * E(i, j) + q.U.h[i] * e0[j]) * sv;
    }
  }
  return out;
}

ConditionedRows condition_on_last_row(const MatrixNormalStructured& q,
                                      std::span<const double> nu) {
  const std::size_t m = q.rows();
  const std::size_t n = q.cols();
  if (m < 2) {
    throw std::invalid_argument("condition_on_last_row: need at least two rows");
  }
  if (nu.size() != n) {
    throw std::invalid_argument("condition_on_last_row: nu length must match cols");
  }
  const double psi_nu = q.U.psi[m - 1];
  const double h_nu = q.U.h[m - 1];
  const double denom = psi_nu + h_nu * h_nu;
  const double shrink = std::sqrt(psi_nu / denom);

  ConditionedRows out;
  out.U.psi.assign(q.U.psi.begin(), q.U.psi.end() - 1);
  out.U.h.resize(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) out.U.h[i] = q.U.h[i] * shrink;

  out.M = Matd(m - 1, n);
  for (std::size_t j = 0; j < n; ++j) {
    const double gain = h_nu * (nu[j] - q.M(m - 1, j)) / denom;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      out.M(i, j) = q.M(i, j) + q.U.h[i] * gain;
    }
  }
  return out;
}

}  // namespace hsbnn
