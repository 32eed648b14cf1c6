// Copyright 2026 The cohere Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <utility>

#include "cohere/numerics.hpp"

namespace cohere {

// Columns whose norms are within this distance of 1 count as unit-norm.
inline constexpr double kUnitNormTol = 1e-8;

// An m x M synthesis matrix whose columns are the frame elements. Construction
// validates: finite entries, no (near) zero column, m <= M and rank m.
class Frame {
 public:
  explicit Frame(DenseMatrix matrix);

  const DenseMatrix& matrix() const noexcept { return matrix_; }
  Index dim() const noexcept { return matrix_.rows(); }
  Index size() const noexcept { return matrix_.cols(); }
  bool unit_norm() const noexcept { return unit_norm_; }

  Vector column_norms() const { return matrix_.colwise().norm().transpose(); }

  // Same frame with every column scaled to unit length.
  Frame normalized() const;

 private:
  DenseMatrix matrix_;
  bool unit_norm_ = false;
};

// I.i.d. N(0,1) entries from mt19937_64(seed), filled column by column, then
// column-normalized. Bit-identical for a given (m, M, seed) on one platform.
Frame random_gaussian_frame(Index m, Index M, std::uint64_t seed);

struct Coherence {
  double value = 0.0;
  // Lexicographically smallest pair attaining the maximum.
  std::pair<Index, Index> pair{0, 1};
};

Coherence coherence(const Frame& phi);

// sqrt((M - m) / (m (M - 1))).
double welch_bound(Index m, Index M);

struct FrameReport {
  double coherence = 0.0;
  double welch_bound = 0.0;
  double frame_potential = 0.0;     // ||Phi^T Phi||_F^2
  double potential_minimum = 0.0;   // M^2/m, the unit-norm lower bound
  bool potential_bound_holds = true;
  double tight_constant = 0.0;      // A in ||Phi Phi^T - A I||_F
  double tight_defect = 0.0;
  bool equiangular = false;
  double lower_frame_bound = 0.0;   // extreme eigenvalues of Phi Phi^T
  double upper_frame_bound = 0.0;
  bool unit_norm = false;
};

FrameReport frame_report(const Frame& phi);

// Strict upper bound 1/2 (1 + 1/mu) on uniquely recoverable sparsity.
double recovery_bound(double mu);

struct RipEstimate {
  double delta = 0.0;            // (k - 1) mu
  bool below_threshold = false;  // delta < sqrt(2) - 1
};

RipEstimate rip_constant_estimate(double mu, Index k);

struct UnitNormMapping {
  bool unit_norm = false;
  double direct_residual = 0.0;  // max_i | ||G phi_i|| - 1 |
  double eigen_residual = 0.0;   // max_i | <lambda - 1, (<phi_i, e_j>^2)_j> |
};

// Checks whether G maps Phi to a unit-norm frame, both directly and through
// the eigen-decomposition of G^T G. Throws kSingularG when
// sigma_min(G) <= 1e-10 sigma_max(G), kInvalidArgument when the two tests
// disagree.
UnitNormMapping verify_unit_norm_mapping(const DenseMatrix& g, const Frame& phi);

// Frames used throughout the tests and examples.
namespace frames {
// Three unit vectors at 120 degrees in R^2.
Frame mercedes_benz();
// {(1,1,0), (1,-1,0), (0,1,1), (0,1,-1)} / sqrt(2) in R^3.
Frame sign_pattern_3x4();
Frame orthonormal_basis(Index m);
}  // namespace frames

}  // namespace cohere
