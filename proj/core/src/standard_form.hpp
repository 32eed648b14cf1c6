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

#include <vector>

#include "cohere/numerics.hpp"

namespace cohere::conic::detail {

// Block standard form
//     min <C, x>  s.t.  A x = b,  x in S^{n_1}_+ x ... x R^{n}_+
// with A stored as a dense matrix over the PSD blocks (svec coordinates) and
// the "shared" nonnegative variables, plus a list of "private" nonnegative
// variables that each appear in exactly one row.
struct StandardForm {
  Index rows = 0;
  Index equality_rows = 0;  // rows [0, equality_rows) carry no private variable

  std::vector<Index> block_dims;
  std::vector<Index> block_cols;  // first column of each block in u
  Index shared_col0 = 0;
  std::vector<Index> shared_vars;  // nonneg index of shared column k

  DenseMatrix u;  // rows x (sum svec dims + shared count)

  Index nonneg = 0;
  std::vector<Index> priv_vars;
  std::vector<Index> priv_rows;
  std::vector<double> priv_coefs;

  Vector b;
  std::vector<DenseMatrix> c_blocks;
  Vector c_nonneg;

  Index columns() const { return u.cols(); }
  Index degree() const;  // barrier parameter nu

  Vector apply(const std::vector<DenseMatrix>& x, const Vector& v) const;
  void apply_transpose(const Vector& y, std::vector<DenseMatrix>& x, Vector& v) const;
};

// Solves (U K U^T + diag(delta)) dy = r where K is block diagonal SPD and
// delta vanishes exactly on the equality rows. Factorized once per
// interior-point iteration and reused for predictor and corrector.
class SchurSystem {
 public:
  // Returns false when a factorization breaks down beyond repair.
  bool factor(const StandardForm& sf, const std::vector<DenseMatrix>& k_blocks,
              const Vector& shared_scale, const Vector& delta);
  Vector solve(const Vector& r) const;

 private:
  Vector solve_once(const Vector& r) const;
  Vector multiply(const Vector& y) const;

  static constexpr double kDirectRatio = 1e-2;
  static constexpr std::size_t kMaxDirect = 1024;

  Index rows_ = 0;
  std::vector<Index> b_rows_;  // factored directly
  std::vector<Index> a_rows_;  // eliminated through the Woodbury identity
  DenseMatrix ut_b_, ut_a_;    // rows of U K^{1/2}
  Vector delta_b_, delta_a_;
  Eigen::LLT<DenseMatrix> h_;
  Eigen::LLT<DenseMatrix> se_;
};

}  // namespace cohere::conic::detail
