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

#include <optional>
#include <string_view>
#include <vector>

#include "cohere/numerics.hpp"

namespace cohere::conic {

// Symmetric-matrix vectorization with sqrt(2) on off-diagonal entries, so
// that <A, B> = svec(A) . svec(B). Entries are ordered column by column over
// the lower triangle.
Index svec_dim(Index n);
Vector svec(const DenseMatrix& a);
DenseMatrix smat(const Eigen::Ref<const Vector>& v, Index n);

// What a constraint row encodes when it comes from a frame problem. The
// solver itself treats all rows alike; the tag drives reporting and the
// optimality-condition residuals.
enum class RowKind { kUnitNorm, kUpper, kLower, kNormalization, kOther };

struct RowTag {
  RowKind kind = RowKind::kOther;
  Index i = -1;
  Index j = -1;
};

struct SlackTerm {
  Index row = 0;
  Index slack = 0;
  double coeff = 0.0;
};

// t2 I <= X <= t1 I. With scale_free set, the bounds hold for s X' where
// X = s X' for some s > 0, i.e. only kappa(X) <= t1/t2 is imposed.
struct EigenvalueBounds {
  double upper = 1.0;
  double lower = 1.0;
  bool scale_free = false;
};

// minimize q over X >= 0 (psd_dim x psd_dim), q >= 0 and slacks >= 0
// subject to, for every row k,
//     <A_k, X> + q_coeffs(k) q + sum_l d_kl slack_l = rhs(k).
// Row k of x_coeffs holds svec(A_k), or diag(A_k) when diagonal_x is set
// (X restricted to nonnegative diagonal matrices: the LP case). psd_dim may
// be 0 for pure LPs over q and the slacks.
struct ConicProblem {
  Index psd_dim = 0;
  bool diagonal_x = false;
  Index slack_count = 0;
  DenseMatrix x_coeffs;
  Vector q_coeffs;
  std::vector<SlackTerm> slack_terms;
  Vector rhs;
  std::vector<RowTag> tags;
  std::optional<EigenvalueBounds> eig_bounds;

  Index rows() const { return rhs.size(); }
  Index coeff_dim() const { return diagonal_x ? psd_dim : svec_dim(psd_dim); }
  // A_k as a symmetric psd_dim x psd_dim matrix.
  DenseMatrix coefficient_matrix(Index row) const;
  // Throws kInvalidArgument / kInvalidBounds on inconsistent data.
  void validate() const;
};

struct SolverSettings {
  double gap_tol = 1e-7;
  double feas_tol = 1e-7;
  int max_iter = 200;
  double step_fraction = 0.98;
  bool verbose = false;
};

enum class Status { kOptimal, kMaxIter, kNumericalFailure };
std::string_view to_string(Status s);

struct IterationLog {
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double primal_step = 0.0;
  double dual_step = 0.0;
  double min_x_eig = 0.0;      // smallest eigenvalue over all PSD blocks
  double min_nonneg = 0.0;     // smallest q / slack / diagonal entry
};

struct ConicSolution {
  DenseMatrix x;        // psd_dim x psd_dim (diagonal in LP mode)
  double q = 0.0;
  Vector slacks;
  // Multipliers in the sign convention where z_k >= 0 on rows carrying a
  // +1 slack and free on pure equality rows (z = -y for the usual dual y).
  Vector duals;
  DenseMatrix s;        // dual matrix of X >= 0 (of X - t2 I >= 0 with bounds)
  DenseMatrix s_upper;  // dual matrix of t1 I - X >= 0; empty without bounds
  Vector slack_duals;
  double q_dual = 0.0;
  double gap = 0.0;     // <X, S> + sum of nonnegative complementarity products
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_infeasibility = 0.0;  // relative, on the original rows
  double dual_infeasibility = 0.0;
  Status status = Status::kNumericalFailure;
  int iterations = 0;
  std::vector<Index> dropped_rows;
  std::vector<IterationLog> history;
};

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings = {});

// Residuals of the first-order optimality conditions for problems built from
// frames:
//   stationarity:  || X (sum_k z_k A_k) ||_F  (block complementarity with bounds)
//   upper:         max |z_k p_k| over kUpper rows
//   lower:         max |z_k q_k| over kLower rows
//   normalization: | q (1 + sum_k z_k c_k) |
//   duality:       | q + sum over kUnitNorm rows of z_k |
struct KktResiduals {
  double stationarity = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double normalization = 0.0;
  double duality = 0.0;

  double max() const;
};

KktResiduals kkt_residuals(const ConicProblem& problem, const ConicSolution& solution);

}  // namespace cohere::conic
