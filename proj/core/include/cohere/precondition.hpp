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
#include <utility>
#include <vector>

#include "cohere/conic.hpp"
#include "cohere/frames.hpp"

namespace cohere {

using IndexPair = std::pair<Index, Index>;

// Pairs (i, j), i < j, whose Gram entry sits at +q (plus) or -q (minus).
struct ActiveSets {
  std::vector<IndexPair> plus;
  std::vector<IndexPair> minus;

  std::size_t size() const { return plus.size() + minus.size(); }
};

inline constexpr double kActiveTol = 1e-6;
inline constexpr double kSingularEig = 1e-9;

struct PreconditionResult {
  DenseMatrix x;  // G^T G
  DenseMatrix g;  // upper triangular
  double q = 0.0;
  double coherence_before = 0.0;
  double verified_coherence = 0.0;  // mu(G Phi), recomputed
  double welch_bound = 0.0;
  Vector duals;
  ActiveSets active;
  double kappa = 1.0;        // condition number of G
  double x_min_eig = 0.0;
  bool jittered = false;
  bool near_singular = false;
  std::optional<double> kappa_limit;  // t1 / t2 when eigenvalue bounds were imposed
  conic::Status status = conic::Status::kNumericalFailure;
  int iterations = 0;
  double gap = 0.0;
  conic::ConicSolution solution;
};

// Row layout: M unit-norm rows, then for each pair i < j (lexicographic) an
// upper row <phi'_ij, X> + p_ij - q = 0 and a lower row -<phi'_ij, X> + q_ij - q = 0.
// Slack 2k is p_ij and slack 2k + 1 is q_ij for the k-th pair.
conic::ConicProblem build_c1(const Frame& phi);
conic::ConicProblem build_c2(const Frame& phi, double t1, double t2, bool scale_free = false);

PreconditionResult solve_coherence(const Frame& phi, const conic::SolverSettings& settings = {});
// Coherence minimization with t2 I <= X <= t1 I. With scale_free the bound is
// imposed on X / s for a free scale s > 0, i.e. only kappa(X) <= t1 / t2 binds.
PreconditionResult solve_bounded(const Frame& phi, double t1, double t2, bool scale_free = false,
                                 const conic::SolverSettings& settings = {});
PreconditionResult diagonal_lp(const Frame& phi, const conic::SolverSettings& settings = {});

Index squared_span_dimension(const Frame& phi);

struct Factor {
  DenseMatrix g;
  double min_eig = 0.0;
  bool jittered = false;
};

Factor extract_preconditioner(const DenseMatrix& x);

Frame nearest_tight_frame(const Frame& psi, double alpha);

struct TightPreconditioner {
  DenseMatrix g1;
  Frame frame;  // G1 Phi
};

TightPreconditioner compose_tight_preconditioner(const DenseMatrix& g, const Frame& phi);

ActiveSets active_sets(const Frame& phi, const DenseMatrix& x, double q, double tau = kActiveTol);

}  // namespace cohere
