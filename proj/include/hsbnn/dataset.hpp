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

#include <string>
#include <vector>

#include "hsbnn/matrix.hpp"
#include "hsbnn/rng.hpp"

namespace hsbnn {

// Numeric regression table; one column of X per observation, last table
// column is the target.
struct Dataset {
  Matd X;  // D x N
  Vecd y;  // N
  int n() const { return static_cast<int>(y.size()); }
  int dim() const { return static_cast<int>(X.rows()); }
};

// Train-split statistics used to map features and target to zero mean and
// unit variance and back.  Constant feature columns are dropped.
struct Standardizer {
  Vecd x_mean, x_std;            // over kept columns
  std::vector<int> kept;         // raw feature indices that survived
  std::vector<int> dropped;      // constant columns, logged by the caller
  double y_mean = 0.0, y_std = 1.0;

  double destandardize_y(double ys) const { return ys * y_std + y_mean; }
  double standardize_y(double yr) const { return (yr - y_mean) / y_std; }
};

struct SplitIndices {
  std::vector<int> train, test;
};

// Parses a comma- or whitespace-delimited numeric table.  Throws
// std::runtime_error naming the offending row and column on bad cells.
Dataset load_table(const std::string& path, bool header);
Dataset parse_table(const std::string& text, bool header);

SplitIndices random_split(int n, double train_fraction, RngStream& rng);

// Fits on the given rows only; refuses a constant target.
Standardizer fit_standardizer(const Dataset& data, const std::vector<int>& rows);

// Returns the selected rows with features/target standardized.
Dataset apply_standardizer(const Standardizer& s, const Dataset& data,
                           const std::vector<int>& rows);

// y = sin(x) + eps on a uniform interval.
Dataset toy_sine(int n, std::uint64_t seed, double noise_std = 0.1, double x_min = -4.0,
                 double x_max = 4.0);

// Teacher with three tanh units; used by the compression experiments.
Dataset toy_teacher(int n, std::uint64_t seed, double noise_std = 0.05, double x_min = -3.0,
                    double x_max = 3.0);

}  // namespace hsbnn
