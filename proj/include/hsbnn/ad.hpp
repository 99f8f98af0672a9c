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
#include <cstdint>
#include <span>
#include <vector>

// Reverse-mode tape over scalars.  The objective is built from a small
// primitive set (arithmetic, exp, log, sqrt, tanh, relu) plus fused
// reductions for the inner products that dominate the workload.  Nodes
// store their argument list in one flat (index, partial) array, so a
// length-n dot product is a single node with 2n arguments instead of
// 2n-1 nodes.

namespace hsbnn::ad {

class Tape;

inline Tape*& active_tape() {
  thread_local Tape* t = nullptr;
  return t;
}

struct Var {
  std::int32_t idx = -1;
  double v = 0.0;
};

class Tape {
 public:
  // Leaves occupy indices [0, n) and carry the values in `leaves`.
  void reset(std::span<const double> leaves) {
    n_leaves_ = static_cast<std::int32_t>(leaves.size());
    val_.assign(leaves.begin(), leaves.end());
    arg_off_.clear();
    arg_off_.push_back(0);
    arg_idx_.clear();
    arg_pd_.clear();
  }

  std::int32_t n_leaves() const { return n_leaves_; }
  std::size_t size() const { return val_.size(); }

  Var leaf(std::int32_t i) const { return {i, val_[i]}; }

  Var constant(double v) {
    val_.push_back(v);
    arg_off_.push_back(static_cast<std::uint32_t>(arg_idx_.size()));
    return {static_cast<std::int32_t>(val_.size() - 1), v};
  }

  Var record1(double v, std::int32_t p0, double d0) {
    arg_idx_.push_back(static_cast<std::uint32_t>(p0));
    arg_pd_.push_back(d0);
    return finish(v);
  }

  Var record2(double v, std::int32_t p0, double d0, std::int32_t p1, double d1) {
    arg_idx_.push_back(static_cast<std::uint32_t>(p0));
    arg_pd_.push_back(d0);
    arg_idx_.push_back(static_cast<std::uint32_t>(p1));
    arg_pd_.push_back(d1);
    return finish(v);
  }

  // Begin an n-ary node; push (idx, partial) pairs, then call finish.
  void push_arg(std::int32_t p, double d) {
    arg_idx_.push_back(static_cast<std::uint32_t>(p));
    arg_pd_.push_back(d);
  }

  Var finish(double v) {
    val_.push_back(v);
    arg_off_.push_back(static_cast<std::uint32_t>(arg_idx_.size()));
    return {static_cast<std::int32_t>(val_.size() - 1), v};
  }

  // Accumulates seed * d(root)/d(leaf_j) into leaf_grad[j].
  void backward(Var root, double seed, std::span<double> leaf_grad) {
    adj_.assign(val_.size(), 0.0);
    adj_[static_cast<std::size_t>(root.idx)] = seed;
    for (std::int32_t i = root.idx; i >= n_leaves_; --i) {
      const double a = adj_[static_cast<std::size_t>(i)];
      if (a == 0.0) continue;
      const std::uint32_t b = arg_off_[static_cast<std::size_t>(i - n_leaves_)];
      const std::uint32_t e = arg_off_[static_cast<std::size_t>(i - n_leaves_) + 1];
      for (std::uint32_t t = b; t < e; ++t) {
        adj_[arg_idx_[t]] += a * arg_pd_[t];
      }
    }
    for (std::int32_t j = 0; j < n_leaves_; ++j) {
      leaf_grad[static_cast<std::size_t>(j)] += adj_[static_cast<std::size_t>(j)];
    }
  }

 private:
  std::int32_t n_leaves_ = 0;
  std::vector<double> val_;
  std::vector<std::uint32_t> arg_off_;  // per non-leaf node, prefix offsets
  std::vector<std::uint32_t> arg_idx_;
  std::vector<double> arg_pd_;
  std::vector<double> adj_;
};

struct ScopedTape {
  explicit ScopedTape(Tape* t) : prev(active_tape()) { active_tape() = t; }
  ~ScopedTape() { active_tape() = prev; }
  Tape* prev;
};

// --- arithmetic -----------------------------------------------------------

inline Var operator+(Var a, Var b) {
  return active_tape()->record2(a.v + b.v, a.idx, 1.0, b.idx, 1.0);
}
inline Var operator+(Var a, double c) {
  return active_tape()->record1(a.v + c, a.idx, 1.0);
}
inline Var operator+(double c, Var a) { return a + c; }

inline Var operator-(Var a, Var b) {
  return active_tape()->record2(a.v - b.v, a.idx, 1.0, b.idx, -1.0);
}
inline Var operator-(Var a, double c) {
  return active_tape()->record1(a.v - c, a.idx, 1.0);
}
inline Var operator-(double c, Var a) {
  return active_tape()->record1(c - a.v, a.idx, -1.0);
}
inline Var operator-(Var a) {
  return active_tape()->record1(-a.v, a.idx, -1.0);
}

inline Var operator*(Var a, Var b) {
  return active_tape()->record2(a.v * b.v, a.idx, b.v, b.idx, a.v);
}
inline Var operator*(Var a, double c) {
  return active_tape()->record1(a.v * c, a.idx, c);
}
inline Var operator*(double c, Var a) { return a * c; }

inline Var operator/(Var a, Var b) {
  const double v = a.v / b.v;
  return active_tape()->record2(v, a.idx, 1.0 / b.v, b.idx, -v / b.v);
}
inline Var operator/(Var a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, Var b) {
  const double v = c / b.v;
  return active_tape()->record1(v, b.idx, -v / b.v);
}

inline Var& operator+=(Var& a, Var b) { return a = a + b; }
inline Var& operator+=(Var& a, double c) { return a = a + c; }

// --- transcendental -------------------------------------------------------

inline Var exp(Var a) {
  const double v = std::exp(a.v);
  return active_tape()->record1(v, a.idx, v);
}

inline Var log(Var a) {
  return active_tape()->record1(std::log(a.v), a.idx, 1.0 / a.v);
}

inline Var sqrt(Var a) {
  const double v = std::sqrt(a.v);
  return active_tape()->record1(v, a.idx, 0.5 / v);
}

inline Var tanh(Var a) {
  const double v = std::tanh(a.v);
  return active_tape()->record1(v, a.idx, 1.0 - v * v);
}

inline Var relu(Var a) {
  return a.v > 0.0 ? active_tape()->record1(a.v, a.idx, 1.0)
                   : active_tape()->record1(0.0, a.idx, 0.0);
}

inline Var square(Var a) {
  return active_tape()->record1(a.v * a.v, a.idx, 2.0 * a.v);
}

// --- fused reductions -----------------------------------------------------

// sum_i x_i * y_i
inline Var dot(std::span<const Var> x, std::span<const Var> y) {
  Tape* t = active_tape();
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v += x[i].v * y[i].v;
    t->push_arg(x[i].idx, y[i].v);
    t->push_arg(y[i].idx, x[i].v);
  }
  return t->finish(v);
}

// sum_i x_i * w_i with constant weights
inline Var dot(std::span<const Var> x, std::span<const double> w) {
  Tape* t = active_tape();
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    v += x[i].v * w[i];
    t->push_arg(x[i].idx, w[i]);
  }
  return t->finish(v);
}

// sum_i x_i * y_i^2
inline Var dot_sq(std::span<const Var> x, std::span<const Var> y) {
  Tape* t = active_tape();
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double y2 = y[i].v * y[i].v;
    v += x[i].v * y2;
    t->push_arg(x[i].idx, y2);
    t->push_arg(y[i].idx, 2.0 * x[i].v * y[i].v);
  }
  return t->finish(v);
}

// sum_i x_i * w_i^2 with constant weights
inline Var dot_sq(std::span<const Var> x, std::span<const double> w) {
  Tape* t = active_tape();
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w2 = w[i] * w[i];
    v += x[i].v * w2;
    t->push_arg(x[i].idx, w2);
  }
  return t->finish(v);
}

// sum_i x_i^2
inline Var sum_sq(std::span<const Var> x) {
  Tape* t = active_tape();
  double v = 0.0;
  for (const Var& xi : x) {
    v += xi.v * xi.v;
    t->push_arg(xi.idx, 2.0 * xi.v);
  }
  return t->finish(v);
}

inline Var sum(std::span<const Var> x) {
  Tape* t = active_tape();
  double v = 0.0;
  for (const Var& xi : x) {
    v += xi.v;
    t->push_arg(xi.idx, 1.0);
  }
  return t->finish(v);
}

inline double value_of(Var x) { return x.v; }

}  // namespace hsbnn::ad

namespace hsbnn {

// Double counterparts so that code templated on the scalar type resolves the
// same names for the plain evaluation path.

inline double relu(double x) { return x > 0.0 ? x : 0.0; }
inline double square(double x) { return x * x; }
inline double value_of(double x) { return x; }

inline double dot(std::span<const double> x, std::span<const double> y) {
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += x[i] * y[i];
  return v;
}

inline double dot_sq(std::span<const double> x, std::span<const double> y) {
  double v = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) v += x[i] * y[i] * y[i];
  return v;
}

inline double sum_sq(std::span<const double> x) {
  double v = 0.0;
  for (double xi : x) v += xi * xi;
  return v;
}

inline double sum(std::span<const double> x) {
  double v = 0.0;
  for (double xi : x) v += xi;
  return v;
}

// Records a constant on the active tape for the reverse-mode path; identity
// for the plain path.
template <class T>
T make_const(double v) {
  if constexpr (std::is_same_v<T, ad::Var>) {
    return ad::active_tape()->constant(v);
  } else {
    return v;
  }
}

}  // namespace hsbnn
