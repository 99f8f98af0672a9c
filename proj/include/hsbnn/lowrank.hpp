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
#include <vector>

#include "hsbnn/matrix.hpp"
#include "hsbnn/special.hpp"

namespace hsbnn {

// U = diag(psi) + h h^T, symmetric positive definite by construction.
// The library never materializes U densely; quadratic forms and
// determinants stay O(m).
struct DiagRankOne {
  Vecd psi;  // strictly positive diagonal
  Vecd h;    // rank-one factor

  std::size_t dim() const { return psi.size(); }
  void validate() const;
};

// MN(M, U, V) with diagonal column covariance V.  Columns are
// independent; column j has covariance V[j] * U.
struct MatrixNormalStructured {
  Matd M;
  DiagRankOne U;   // rows() x rows()
  Vecd V;          // cols(), strictly positive

  std::size_t rows() const { return M.rows(); }
  std::size_t cols() const { return M.cols(); }
  void validate() const;
};

// a^T U a = sum_i psi_i a_i^2 + (h . a)^2
double quad_form(const DiagRankOne& U, std::span<const double> a);

// ln|U| via the matrix determinant lemma:
// ln(1 + sum_i h_i^2 / psi_i) + sum_i ln psi_i
double logdet(const DiagRankOne& U);

// Entropy of MN(M, U, V):  (mn/2) ln(2 pi e) + (m/2) sum_j ln V_j + (n/2) ln|U|
double mn_entropy(const MatrixNormalStructured& q);

// Exact sampler: M + (diag(sqrt psi) E + h e0^T) diag(sqrt V).
// E is rows x cols of standard normals, e0 is cols standard normals.
Matd mn_sample(const MatrixNormalStructured& q, const Matd& E, std::span<const double> e0);

// Conditional of the first m-1 rows given that the last row equals nu.
// The result is MN(M_cond, U_cond, V) with
//   U_cond = diag(psi_beta) + s h_beta h_beta^T,  s = psi_m / (psi_m + h_m^2),
// folded back into diag-plus-rank-one form via h_cond = sqrt(s) h_beta, and
//   M_cond[., j] = M[., j] + h_beta * h_m (nu_j - M[m, j]) / (psi_m + h_m^2).
struct ConditionedRows {
  Matd M;
  DiagRankOne U;
};
ConditionedRows condition_on_last_row(const MatrixNormalStructured& q,
                                      std::span<const double> nu);

// --- templated cores shared with the reverse-mode evaluation ---------------

template <class T>
T logdet_core(std::span<const T> psi, std::span<const T> h) {
  using std::log;
  T sum_ln = log(psi[0]);
  T ratio = square(h[0]) / psi[0];
  for (std::size_t i = 1; i < psi.size(); ++i) {
    sum_ln = sum_ln + log(psi[i]);
    ratio = ratio + square(h[i]) / psi[i];
  }
  return log(1.0 + ratio) + sum_ln;
}

template <class T>
T mn_entropy_core(std::span<const T> psi, std::span<const T> h, std::span<const T> V) {
  using std::log;
  const double m = static_cast<double>(psi.size());
  const double n = static_cast<double>(V.size());
  T sum_ln_v = log(V[0]);
  for (std::size_t j = 1; j < V.size(); ++j) sum_ln_v = sum_ln_v + log(V[j]);
  return 0.5 * m * n * kLn2PiE + 0.5 * m * sum_ln_v +
         0.5 * n * logdet_core(psi, h);
}

}  // namespace hsbnn
