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

#include <cmath>

#include <algorithm>
#include <limits>

#include "standard_form.hpp"

namespace cohere::conic::detail {

namespace {

// Cholesky with a growing diagonal shift for matrices that are SPD in exact
// arithmetic but lose definiteness to rounding near the end of a solve.
bool robust_llt(DenseMatrix& a, Eigen::LLT<DenseMatrix>& llt) {
  const Index n = a.rows();
  if (n == 0) {
    llt.compute(a);
    return true;
  }
  llt.compute(a);
  if (llt.info() == Eigen::Success) return true;
  const double scale = std::max(a.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  double shift = 1e-14 * scale;
  for (int attempt = 0; attempt < 8; ++attempt, shift *= 100.0) {
    a.diagonal().array() += shift;
    llt.compute(a);
    if (llt.info() == Eigen::Success) return true;
  }
  return false;
}

}  // namespace

bool SchurSystem::factor(const StandardForm& sf, const std::vector<DenseMatrix>& k_blocks,
                         const Vector& shared_scale, const Vector& delta) {
  const Index n_u = sf.columns();
  DenseMatrix ut(sf.rows, n_u);
  for (std::size_t b = 0; b < k_blocks.size(); ++b) {
    DenseMatrix k = k_blocks[b];
    Eigen::LLT<DenseMatrix> llt;
    if (!robust_llt(k, llt)) return false;
    const Index c0 = sf.block_cols[b];
    const Index nb = k.rows();
    ut.middleCols(c0, nb).noalias() = sf.u.middleCols(c0, nb) * llt.matrixL().toDenseMatrix();
  }
  const Index ns = static_cast<Index>(sf.shared_vars.size());
  for (Index k = 0; k < ns; ++k) {
    ut.col(sf.shared_col0 + k) = sf.u.col(sf.shared_col0 + k) * std::sqrt(shared_scale(k));
  }

  // Rows whose diagonal term is small against their low-rank part would make
  // the Woodbury inner matrix ill-conditioned; factor those directly.
  std::vector<std::pair<double, Index>> weak;
  b_rows_.clear();
  a_rows_.clear();
  for (Index r = 0; r < sf.rows; ++r) {
    if (r < sf.equality_rows) {
      b_rows_.push_back(r);
      continue;
    }
    const double ratio = delta(r) / (ut.row(r).squaredNorm() + 1e-300);
    if (ratio < kDirectRatio) {
      weak.emplace_back(ratio, r);
    } else {
      a_rows_.push_back(r);
    }
  }
  std::sort(weak.begin(), weak.end());
  const std::size_t room = kMaxDirect > b_rows_.size() ? kMaxDirect - b_rows_.size() : 0;
  for (std::size_t k = 0; k < weak.size(); ++k) {
    (k < room ? b_rows_ : a_rows_).push_back(weak[k].second);
  }
  std::sort(a_rows_.begin(), a_rows_.end());

  const Index nb = static_cast<Index>(b_rows_.size());
  const Index na = static_cast<Index>(a_rows_.size());
  ut_b_.resize(nb, n_u);
  delta_b_.resize(nb);
  for (Index k = 0; k < nb; ++k) {
    ut_b_.row(k) = ut.row(b_rows_[k]);
    delta_b_(k) = delta(b_rows_[k]);
  }
  ut_a_.resize(na, n_u);
  delta_a_.resize(na);
  for (Index k = 0; k < na; ++k) {
    ut_a_.row(k) = ut.row(a_rows_[k]);
    delta_a_(k) = delta(a_rows_[k]);
  }

  DenseMatrix h = DenseMatrix::Identity(n_u, n_u);
  if (na > 0) {
    const DenseMatrix w = delta_a_.cwiseSqrt().cwiseInverse().asDiagonal() * ut_a_;
    h.selfadjointView<Eigen::Lower>().rankUpdate(w.transpose());
    h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  }
  if (!robust_llt(h, h_)) return false;

  if (nb > 0) {
    const DenseMatrix y = h_.matrixL().solve(ut_b_.transpose());
    DenseMatrix se = DenseMatrix::Zero(nb, nb);
    se.selfadjointView<Eigen::Lower>().rankUpdate(y.transpose());
    se.triangularView<Eigen::StrictlyUpper>() = se.transpose();
    se.diagonal() += delta_b_;
    if (!robust_llt(se, se_)) return false;
  }
  rows_ = sf.rows;
  return true;
}

Vector SchurSystem::multiply(const Vector& y) const {
  Vector yb(ut_b_.rows()), ya(ut_a_.rows());
  for (Index k = 0; k < yb.size(); ++k) yb(k) = y(b_rows_[k]);
  for (Index k = 0; k < ya.size(); ++k) ya(k) = y(a_rows_[k]);
  const Vector t = ut_b_.transpose() * yb + ut_a_.transpose() * ya;
  Vector out(rows_);
  const Vector ob = ut_b_ * t + delta_b_.cwiseProduct(yb);
  const Vector oa = ut_a_ * t + delta_a_.cwiseProduct(ya);
  for (Index k = 0; k < yb.size(); ++k) out(b_rows_[k]) = ob(k);
  for (Index k = 0; k < ya.size(); ++k) out(a_rows_[k]) = oa(k);
  return out;
}

Vector SchurSystem::solve_once(const Vector& r) const {
  const Index nb = ut_b_.rows();
  const Index na = ut_a_.rows();
  Vector rb(nb), ra(na);
  for (Index k = 0; k < nb; ++k) rb(k) = r(b_rows_[k]);
  for (Index k = 0; k < na; ++k) ra(k) = r(a_rows_[k]);

  Vector t = Vector::Zero(ut_b_.cols());
  if (na > 0) t = ut_a_.transpose() * ra.cwiseQuotient(delta_a_);
  Vector yb = Vector::Zero(nb);
  if (nb > 0) yb = se_.solve(rb - ut_b_ * h_.solve(t));
  Vector ya(na);
  if (na > 0) {
    Vector f = ra;
    if (nb > 0) f -= ut_a_ * (ut_b_.transpose() * yb);
    const Vector g = f.cwiseQuotient(delta_a_);
    const Vector corr = h_.solve(ut_a_.transpose() * g);
    ya = g - (ut_a_ * corr).cwiseQuotient(delta_a_);
  }
  Vector dy(rows_);
  for (Index k = 0; k < nb; ++k) dy(b_rows_[k]) = yb(k);
  for (Index k = 0; k < na; ++k) dy(a_rows_[k]) = ya(k);
  return dy;
}

Vector SchurSystem::solve(const Vector& r) const {
  Vector dy = solve_once(r);
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 4; ++k) {
    const Vector res = r - multiply(dy);
    const double norm = res.norm();
    if (!res.allFinite() || norm >= 0.5 * prev || norm <= 1e-15 * r.norm()) break;
    prev = norm;
    dy += solve_once(res);
  }
  return dy;
}

}  // namespace cohere::conic::detail
