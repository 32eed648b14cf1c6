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

#include "cohere/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cohere/error.hpp"

namespace cohere {

namespace {

std::vector<Index> support_of(const Vector& x) {
  std::vector<Index> s;
  for (Index i = 0; i < x.size(); ++i) {
    if (std::abs(x(i)) > kSupportTol) s.push_back(i);
  }
  return s;
}

void check_system(const DenseMatrix& a, const Vector& y) {
  numerics::require_finite(a, "A");
  if (a.rows() != y.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "A and y disagree on the number of rows");
  }
  if (!y.allFinite()) throw Error(ErrorCode::kNonFinite, "y has NaN/Inf entries");
}

}  // namespace

std::string_view to_string(Decoder d) { return d == Decoder::kOmp ? "omp" : "bp"; }

RecoveryResult omp(const DenseMatrix& a, const Vector& y, Index k_max, double res_tol) {
  check_system(a, y);
  const Index n = a.cols();
  Vector norms = a.colwise().norm().transpose();
  DenseMatrix work = a;
  if ((norms.array() - 1.0).abs().maxCoeff() > 1e-6) {
    warn("omp: dictionary columns are not unit norm; normalizing for selection");
    for (Index j = 0; j < n; ++j) {
      if (norms(j) <= numerics::kNormFloor) throw Error(ErrorCode::kInvalidArgument, "zero column");
      work.col(j) /= norms(j);
    }
  } else {
    norms.setOnes();
  }

  RecoveryResult res;
  res.method = Decoder::kOmp;
  res.estimate = Vector::Zero(n);
  const double y_norm = y.norm();
  Vector r = y;
  Vector coef;
  std::vector<bool> used(n, false);
  k_max = std::min(k_max, std::min(n, a.rows()));
  while (static_cast<Index>(res.selection.size()) < k_max && r.norm() > res_tol * y_norm) {
    const Vector corr = (work.transpose() * r).cwiseAbs();
    Index best = -1;
    for (Index j = 0; j < n; ++j) {
      if (!used[j] && (best < 0 || corr(j) > corr(best))) best = j;
    }
    if (best < 0) break;
    std::vector<Index> trial = res.selection;
    trial.push_back(best);
    DenseMatrix sub(a.rows(), static_cast<Index>(trial.size()));
    for (std::size_t k = 0; k < trial.size(); ++k) sub.col(k) = work.col(trial[k]);
    try {
      coef = numerics::least_squares(sub, y);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRankDeficient) throw;
      res.converged = false;
      break;
    }
    used[best] = true;
    res.selection = std::move(trial);
    r = y - sub * coef;
    ++res.iterations;
  }
  for (std::size_t k = 0; k < res.selection.size(); ++k) {
    res.estimate(res.selection[k]) = coef(k) / norms(res.selection[k]);
  }
  res.support = support_of(res.estimate);
  res.residual_norm = (a * res.estimate - y).norm();
  return res;
}

RecoveryResult basis_pursuit(const DenseMatrix& a, const Vector& y, const BpSettings& settings) {
  check_system(a, y);
  const Index m = a.rows();
  const Index n = a.cols();
  RecoveryResult res;
  res.method = Decoder::kBp;
  const double scale = y.norm();
  if (scale == 0.0) {
    res.estimate = Vector::Zero(n);
    return res;
  }
  // Variables u, v >= 0 (slacks 0..n-1, n..2n-1) and q = sum(u + v).
  conic::ConicProblem pb;
  pb.psd_dim = 0;
  pb.slack_count = 2 * n;
  pb.x_coeffs.resize(m + 1, 0);
  pb.q_coeffs = Vector::Zero(m + 1);
  pb.rhs = Vector::Zero(m + 1);
  pb.rhs.head(m) = y / scale;
  pb.tags.assign(m + 1, {conic::RowKind::kOther, -1, -1});
  for (Index i = 0; i < m; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (a(i, j) == 0.0) continue;
      pb.slack_terms.push_back({i, j, a(i, j)});
      pb.slack_terms.push_back({i, n + j, -a(i, j)});
    }
  }
  for (Index j = 0; j < 2 * n; ++j) pb.slack_terms.push_back({m, j, -1.0});
  pb.q_coeffs(m) = 1.0;
  pb.tags[m] = {conic::RowKind::kNormalization, -1, -1};

  conic::SolverSettings st;
  st.gap_tol = settings.tol;
  st.feas_tol = settings.tol;
  st.max_iter = settings.max_iter;
  const conic::ConicSolution sol = conic::solve(pb, st);
  res.estimate = scale * (sol.slacks.head(n) - sol.slacks.tail(n));
  res.iterations = sol.iterations;
  res.converged = sol.status == conic::Status::kOptimal;
  res.support = support_of(res.estimate);
  res.residual_norm = (a * res.estimate - y).norm();
  return res;
}

RecoveryResult recover(Decoder d, const DenseMatrix& a, const Vector& y) {
  if (d == Decoder::kOmp) return omp(a, y, a.rows());
  return basis_pursuit(a, y);
}

NoiseBounds noise_amplification_bounds(const DenseMatrix& g) {
  const Vector sv = numerics::singular_values(g);
  NoiseBounds b;
  b.sigma_max = sv(0);
  b.sigma_min = sv(sv.size() - 1);
  b.kappa = b.sigma_min > 0.0 ? b.sigma_max / b.sigma_min : std::numeric_limits<double>::infinity();
  return b;
}

bool recovered(const Vector& estimate, const Vector& truth, double rel_tol) {
  return (estimate - truth).norm() <= rel_tol * truth.norm();
}

}  // namespace cohere
