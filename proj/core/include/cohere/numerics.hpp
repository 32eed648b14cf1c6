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

#include <Eigen/Dense>

namespace cohere {

using Index = Eigen::Index;
// Dense row/column storage for frames, preconditioners and Gram matrices.
using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numerics {

// Relative tolerances are scaled by ||A||_F with this absolute floor.
inline constexpr double kNormFloor = 1e-14;

struct SymEig {
  Vector values;        // descending
  DenseMatrix vectors;  // columns are orthonormal eigenvectors
};

struct Svd {
  DenseMatrix u;           // rows x rows, orthogonal
  Vector singular_values;  // min(rows, cols), descending, nonnegative
  DenseMatrix v;           // cols x cols, orthogonal
};

// Throws kNonFinite if any entry is NaN/Inf and kInvalidShape for empty input.
void require_finite(const DenseMatrix& a, const char* what);

bool is_symmetric(const DenseMatrix& a, double rel_tol = 1e-12);

// Lower-triangular L with L L^T = A. Throws kNotPositiveDefinite when a pivot
// falls to or below 1e-14 * ||A||_F.
DenseMatrix cholesky(const DenseMatrix& a);

SymEig sym_eig(const DenseMatrix& a);

Svd svd(const DenseMatrix& a);

// Singular values only, descending.
Vector singular_values(const DenseMatrix& a);

// Number of singular values above rel_tol * sigma_1.
Index numerical_rank(const DenseMatrix& a, double rel_tol);

// Minimizer of ||Ax - b||_2 for full column rank A; throws kRankDeficient
// when sigma_min < 1e-12 * sigma_1.
Vector least_squares(const DenseMatrix& a, const Vector& b);

// Orthonormal basis (columns) for the orthogonal complement of range(A).
DenseMatrix range_complement(const DenseMatrix& a, double rel_tol);

}  // namespace numerics
}  // namespace cohere
