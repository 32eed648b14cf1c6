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

#include "cohere/precondition.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cohere/error.hpp"

namespace cohere {

namespace {

using conic::ConicProblem;
using conic::RowKind;

const DenseMatrix& unit_columns(const Frame& phi, std::optional<Frame>& holder) {
  if (phi.unit_norm()) return phi.matrix();
  warn("frame columns are not unit norm; normalizing");
  holder = phi.normalized();
  return holder->matrix();
}

// svec of (a b^T + b a^T) / 2.
Vector svec_sym_outer(const Vector& a, const Vector& b) {
  const Index n = a.size();
  Vector v(conic::svec_dim(n));
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    v(p++) = a(j) * b(j);
    for (Index i = j + 1; i < n; ++i) {
      v(p++) = std::numbers::sqrt2 * 0.5 * (a(i) * b(j) + a(j) * b(i));
    }
  }
  return v;
}

ConicProblem build_pairs(const DenseMatrix& f, bool diagonal) {
  const Index m = f.rows();
  const Index n = f.cols();
  if (n < 2) throw Error(ErrorCode::kInvalidShape, "need at least two frame elements");
  const Index pairs = n * (n - 1) / 2;
  ConicProblem pb;
  pb.psd_dim = m;
  pb.diagonal_x = diagonal;
  pb.slack_count = 2 * pairs;
  const Index rows = n + 2 * pairs;
  pb.x_coeffs.resize(rows, pb.coeff_dim());
  pb.q_coeffs = Vector::Zero(rows);
  pb.rhs = Vector::Zero(rows);
  pb.tags.resize(rows);
  auto coeff = [&](const Vector& a, const Vector& b) -> Vector {
    if (diagonal) return a.cwiseProduct(b);
    return svec_sym_outer(a, b);
  };
  for (Index i = 0; i < n; ++i) {
    const Vector phi_i = f.col(i);
    pb.x_coeffs.row(i) = coeff(phi_i, phi_i).transpose();
    pb.rhs(i) = 1.0;
    pb.tags[i] = {RowKind::kUnitNorm, i, i};
  }
  Index row = n;
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j, ++k) {
      const Vector c = coeff(f.col(i), f.col(j));
      pb.x_coeffs.row(row) = c.transpose();
      pb.q_coeffs(row) = -1.0;
      pb.slack_terms.push_back({row, 2 * k, 1.0});
      pb.tags[row] = {RowKind::kUpper, i, j};
      ++row;
      pb.x_coeffs.row(row) = -c.transpose();
      pb.q_coeffs(row) = -1.0;
      pb.slack_terms.push_back({row, 2 * k + 1, 1.0});
      pb.tags[row] = {RowKind::kLower, i, j};
      ++row;
    }
  }
  return pb;
}

void check_bounds(double t1, double t2) {
  if (!std::isfinite(t1) || !std::isfinite(t2) || !(t2 > 0.0) || t1 < t2) {
    throw Error(ErrorCode::kInvalidBounds,
                "eigenvalue bounds need finite t1 >= t2 > 0 (got t1=" + std::to_string(t1) +
                    ", t2=" + std::to_string(t2) + ")");
  }
}

PreconditionResult finish(const Frame& phi, const ConicProblem& pb, conic::ConicSolution sol) {
  PreconditionResult r;
  std::optional<Frame> holder;
  const DenseMatrix& f = unit_columns(phi, holder);
  const Frame unit(f);
  r.coherence_before = coherence(unit).value;
  r.welch_bound = welch_bound(phi.dim(), phi.size());
  r.x = 0.5 * (sol.x + sol.x.transpose());
  r.q = sol.q;
  r.duals = sol.duals;
  r.status = sol.status;
  r.iterations = sol.iterations;
  r.gap = sol.gap;

  const Factor fac = extract_preconditioner(r.x);
  r.g = fac.g;
  r.x_min_eig = fac.min_eig;
  r.jittered = fac.jittered;
  r.near_singular = fac.min_eig < kSingularEig;
  if (r.near_singular) {
    warn("optimal X is near singular (min eigenvalue " + std::to_string(fac.min_eig) +
         "); G taken from a jittered factorization");
  }
  const Vector sv = numerics::singular_values(r.g);
  r.kappa = sv(0) / std::max(sv(sv.size() - 1), numerics::kNormFloor);
  r.verified_coherence = coherence(Frame(r.g * f)).value;
  r.active = active_sets(unit, r.x, r.q);
  if (pb.eig_bounds) r.kappa_limit = pb.eig_bounds->upper / pb.eig_bounds->lower;
  r.solution = std::move(sol);
  return r;
}

}  // namespace

ConicProblem build_c1(const Frame& phi) {
  std::optional<Frame> holder;
  return build_pairs(unit_columns(phi, holder), false);
}

ConicProblem build_c2(const Frame& phi, double t1, double t2, bool scale_free) {
  check_bounds(t1, t2);
  ConicProblem pb = build_c1(phi);
  pb.eig_bounds = conic::EigenvalueBounds{t1, t2, scale_free};
  return pb;
}

PreconditionResult solve_coherence(const Frame& phi, const conic::SolverSettings& settings) {
  const ConicProblem pb = build_c1(phi);
  return finish(phi, pb, conic::solve(pb, settings));
}

PreconditionResult solve_bounded(const Frame& phi, double t1, double t2, bool scale_free,
                                 const conic::SolverSettings& settings) {
  const ConicProblem pb = build_c2(phi, t1, t2, scale_free);
  return finish(phi, pb, conic::solve(pb, settings));
}

PreconditionResult diagonal_lp(const Frame& phi, const conic::SolverSettings& settings) {
  std::optional<Frame> holder;
  const ConicProblem pb = build_pairs(unit_columns(phi, holder), true);
  return finish(phi, pb, conic::solve(pb, settings));
}

Index squared_span_dimension(const Frame& phi) {
  return numerics::numerical_rank(phi.matrix().cwiseAbs2(), 1e-10);
}

Factor extract_preconditioner(const DenseMatrix& x) {
  numerics::require_finite(x, "X");
  if (!numerics::is_symmetric(x, 1e-9)) {
    throw Error(ErrorCode::kNotSymmetric, "X is not symmetric");
  }
  const DenseMatrix xs = 0.5 * (x + x.transpose());
  const Index m = xs.rows();
  Factor out;
  out.min_eig = numerics::sym_eig(xs).values(m - 1);
  if (out.min_eig < -kSingularEig) {
    throw Error(ErrorCode::kNotPositiveDefinite,
                "X has a negative eigenvalue " + std::to_string(out.min_eig));
  }
  DenseMatrix work = xs;
  if (out.min_eig < kSingularEig) {
    work.diagonal().array() += 1e-9 * std::max(xs.trace(), numerics::kNormFloor) / m;
    out.jittered = true;
  }
  out.g = numerics::cholesky(work).transpose();
  return out;
}

Frame nearest_tight_frame(const Frame& psi, double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArgument, "tightness constant must be positive");
  }
  const Index m = psi.dim();
  const numerics::Svd d = numerics::svd(psi.matrix());
  if (d.singular_values(m - 1) < 1e-12 * d.singular_values(0)) {
    throw Error(ErrorCode::kRankDeficient, "frame is not full row rank");
  }
  return Frame(std::sqrt(alpha) * d.u * d.v.leftCols(m).transpose());
}

TightPreconditioner compose_tight_preconditioner(const DenseMatrix& g, const Frame& phi) {
  if (g.rows() != phi.dim() || g.cols() != phi.dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "G must be m x m");
  }
  const Index m = phi.dim();
  const DenseMatrix psi = g * phi.matrix();
  const numerics::Svd d = numerics::svd(psi);
  if (d.singular_values(m - 1) < 1e-12 * d.singular_values(0)) {
    throw Error(ErrorCode::kRankDeficient, "G Phi is not full row rank");
  }
  const double scale = std::sqrt(static_cast<double>(phi.size()) / static_cast<double>(m));
  const DenseMatrix g1p =
      scale * d.u * d.singular_values.cwiseInverse().asDiagonal() * d.u.transpose();
  const DenseMatrix g1 = g1p * g;
  return {g1, Frame(g1 * phi.matrix())};
}

ActiveSets active_sets(const Frame& phi, const DenseMatrix& x, double q, double tau) {
  const DenseMatrix gram = phi.matrix().transpose() * x * phi.matrix();
  ActiveSets s;
  const Index n = phi.size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (gram(i, j) >= q - tau) s.plus.emplace_back(i, j);
      if (gram(i, j) <= -q + tau) s.minus.emplace_back(i, j);
    }
  }
  return s;
}

}  // namespace cohere
