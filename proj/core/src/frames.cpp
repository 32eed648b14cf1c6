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

#include "cohere/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "cohere/error.hpp"

namespace cohere {

Frame::Frame(DenseMatrix matrix) : matrix_(std::move(matrix)) {
  numerics::require_finite(matrix_, "frame");
  const Index m = matrix_.rows();
  const Index M = matrix_.cols();
  if (m > M) {
    throw Error(ErrorCode::kInvalidShape,
                "frame needs m <= M, got " + std::to_string(m) + "x" + std::to_string(M));
  }
  const Vector norms = column_norms();
  for (Index i = 0; i < M; ++i) {
    if (!(norms(i) > 1e-12)) {
      throw Error(ErrorCode::kInvalidArgument, "frame column " + std::to_string(i) + " is zero");
    }
  }
  if (numerics::numerical_rank(matrix_, 1e-12) < m) {
    throw Error(ErrorCode::kRankDeficient, "frame does not span R^m");
  }
  unit_norm_ = ((norms.array() - 1.0).abs() <= kUnitNormTol).all();
}

Frame Frame::normalized() const {
  DenseMatrix n = matrix_;
  n.array().rowwise() /= column_norms().transpose().array();
  return Frame(std::move(n));
}

Frame random_gaussian_frame(Index m, Index M, std::uint64_t seed) {
  if (m < 1 || m > M) {
    throw Error(ErrorCode::kInvalidShape,
                "random frame needs 1 <= m <= M, got " + std::to_string(m) + "x" +
                    std::to_string(M));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix a(m, M);
  for (Index j = 0; j < M; ++j) {
    for (Index i = 0; i < m; ++i) a(i, j) = normal(rng);
    a.col(j) /= a.col(j).norm();
  }
  return Frame(std::move(a));
}

Coherence coherence(const Frame& phi) {
  const Index M = phi.size();
  if (M < 2) throw Error(ErrorCode::kSingleColumn, "coherence needs at least two columns");
  const Vector norms = phi.column_norms();
  const DenseMatrix gram = phi.matrix().transpose() * phi.matrix();
  Coherence c{-1.0, {0, 1}};
  for (Index i = 0; i < M; ++i) {
    for (Index j = i + 1; j < M; ++j) {
      const double v = std::abs(gram(i, j)) / (norms(i) * norms(j));
      if (v > c.value) c = {v, {i, j}};
    }
  }
  c.value = std::min(c.value, 1.0);
  return c;
}

double welch_bound(Index m, Index M) {
  if (m < 1 || M < 2 || M < m) {
    throw Error(ErrorCode::kInvalidShape, "welch bound needs M >= m >= 1 and M >= 2");
  }
  const double md = static_cast<double>(m);
  const double Md = static_cast<double>(M);
  return std::sqrt((Md - md) / (md * (Md - 1.0)));
}

FrameReport frame_report(const Frame& phi) {
  const Index m = phi.dim();
  const Index M = phi.size();
  const DenseMatrix& a = phi.matrix();
  FrameReport r;
  r.unit_norm = phi.unit_norm();
  if (M >= 2) {
    r.coherence = coherence(phi).value;
    r.welch_bound = welch_bound(m, M);
  }
  const DenseMatrix gram = a.transpose() * a;
  r.frame_potential = gram.squaredNorm();
  const double Md = static_cast<double>(M);
  r.potential_minimum = Md * Md / static_cast<double>(m);
  // For unit-norm frames FP >= M^2/m with equality exactly at UNTFs.
  r.potential_bound_holds = !r.unit_norm || r.frame_potential >= r.potential_minimum - 1e-6;

  const DenseMatrix op = a * a.transpose();
  r.tight_constant = r.unit_norm ? Md / static_cast<double>(m) : op.trace() / static_cast<double>(m);
  r.tight_defect = (op - r.tight_constant * DenseMatrix::Identity(m, m)).norm();
  const numerics::SymEig eig = numerics::sym_eig(0.5 * (op + op.transpose()));
  r.upper_frame_bound = eig.values(0);
  r.lower_frame_bound = eig.values(m - 1);

  if (M >= 2) {
    const Vector norms = phi.column_norms();
    double lo = 2.0;
    double hi = -1.0;
    for (Index i = 0; i < M; ++i) {
      for (Index j = i + 1; j < M; ++j) {
        const double v = std::abs(gram(i, j)) / (norms(i) * norms(j));
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    r.equiangular = hi - lo <= 1e-8;
  }
  return r;
}

double recovery_bound(double mu) {
  if (!(mu <= 1.0) || mu < 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "coherence must lie in (0, 1]");
  }
  if (mu == 0.0) {
    throw Error(ErrorCode::kZeroCoherence, "recovery bound is unbounded for zero coherence");
  }
  return 0.5 * (1.0 + 1.0 / mu);
}

RipEstimate rip_constant_estimate(double mu, Index k) {
  if (k < 1 || mu < 0.0 || mu > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "rip estimate needs k >= 1 and mu in [0, 1]");
  }
  const double delta = static_cast<double>(k - 1) * mu;
  return {delta, delta < std::numbers::sqrt2 - 1.0};
}

UnitNormMapping verify_unit_norm_mapping(const DenseMatrix& g, const Frame& phi) {
  numerics::require_finite(g, "preconditioner");
  const Index m = phi.dim();
  if (g.rows() != m || g.cols() != m) {
    throw Error(ErrorCode::kDimensionMismatch, "G must be m x m");
  }
  const Vector s = numerics::singular_values(g);
  if (!(s(m - 1) > 1e-10 * s(0))) {
    throw Error(ErrorCode::kSingularG, "preconditioner is singular");
  }
  UnitNormMapping out;
  const DenseMatrix gphi = g * phi.matrix();
  out.direct_residual = (gphi.colwise().norm().array() - 1.0).abs().maxCoeff();

  const numerics::SymEig eig = numerics::sym_eig(g.transpose() * g);
  const Vector shifted = eig.values.array() - 1.0;
  // w_i = (<phi_i, e_j>^2)_j; ||G phi_i||^2 - ||phi_i||^2 = <lambda - 1, w_i>.
  const DenseMatrix w = (eig.vectors.transpose() * phi.matrix()).array().square();
  const Vector proj = w.transpose() * shifted;
  const Vector norm_gap = phi.column_norms().array().square() - 1.0;
  out.eigen_residual = (proj + norm_gap).cwiseAbs().maxCoeff();

  out.unit_norm = out.direct_residual <= kUnitNormTol;
  const bool eigen_says = out.eigen_residual <= 2.0 * kUnitNormTol;
  // ||G phi||^2 - 1 = (||G phi|| - 1)(||G phi|| + 1), so the two residuals
  // differ by a factor near 2 on the boundary; compare with a 4x band.
  const bool ambiguous = out.direct_residual > 0.25 * kUnitNormTol &&
                         out.direct_residual < 4.0 * kUnitNormTol;
  if (!ambiguous && eigen_says != out.unit_norm) {
    throw Error(ErrorCode::kInvalidArgument,
                "direct and eigen unit-norm tests disagree");
  }
  return out;
}

namespace frames {

Frame mercedes_benz() {
  DenseMatrix a(2, 3);
  for (Index k = 0; k < 3; ++k) {
    const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / 3.0;
    a(0, k) = std::cos(t);
    a(1, k) = std::sin(t);
  }
  return Frame(std::move(a));
}

Frame sign_pattern_3x4() {
  DenseMatrix a(3, 4);
  a << 1, 1, 0, 0,
       1, -1, 1, 1,
       0, 0, 1, -1;
  a /= std::numbers::sqrt2;
  return Frame(std::move(a));
}

Frame orthonormal_basis(Index m) { return Frame(DenseMatrix::Identity(m, m)); }

}  // namespace frames
}  // namespace cohere
