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

#include "cohere/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "cohere/error.hpp"
#include "standard_form.hpp"

namespace cohere::conic {

Index svec_dim(Index n) { return n * (n + 1) / 2; }

Vector svec(const DenseMatrix& a) {
  const Index n = a.rows();
  Vector v(svec_dim(n));
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    v(p++) = a(j, j);
    for (Index i = j + 1; i < n; ++i) v(p++) = std::numbers::sqrt2 * 0.5 * (a(i, j) + a(j, i));
  }
  return v;
}

DenseMatrix smat(const Eigen::Ref<const Vector>& v, Index n) {
  DenseMatrix a(n, n);
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    a(j, j) = v(p++);
    for (Index i = j + 1; i < n; ++i) {
      a(i, j) = a(j, i) = v(p++) / std::numbers::sqrt2;
    }
  }
  return a;
}

DenseMatrix ConicProblem::coefficient_matrix(Index row) const {
  if (diagonal_x) return x_coeffs.row(row).transpose().asDiagonal();
  return smat(x_coeffs.row(row).transpose(), psd_dim);
}

void ConicProblem::validate() const {
  const Index n = rows();
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "problem has no rows");
  if (x_coeffs.rows() != n || x_coeffs.cols() != coeff_dim() || q_coeffs.size() != n ||
      static_cast<Index>(tags.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "problem arrays disagree on the row count");
  }
  if (!x_coeffs.allFinite() || !q_coeffs.allFinite() || !rhs.allFinite()) {
    throw Error(ErrorCode::kNonFinite, "problem data has NaN/Inf entries");
  }
  for (const SlackTerm& t : slack_terms) {
    if (t.row < 0 || t.row >= n || t.slack < 0 || t.slack >= slack_count || !std::isfinite(t.coeff)) {
      throw Error(ErrorCode::kInvalidArgument, "slack term out of range");
    }
  }
  if (eig_bounds) {
    const auto& eb = *eig_bounds;
    if (diagonal_x || psd_dim == 0) {
      throw Error(ErrorCode::kInvalidBounds, "eigenvalue bounds need a PSD block");
    }
    if (!std::isfinite(eb.upper) || !std::isfinite(eb.lower) || !(eb.lower > 0.0) ||
        eb.upper < eb.lower) {
      throw Error(ErrorCode::kInvalidBounds, "eigenvalue bounds need finite t1 >= t2 > 0");
    }
  }
}

std::string_view to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "Optimal";
    case Status::kMaxIter: return "MaxIter";
    case Status::kNumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

double KktResiduals::max() const {
  return std::max({stationarity, upper, lower, normalization, duality});
}

namespace detail {

Index StandardForm::degree() const {
  Index nu = nonneg;
  for (Index d : block_dims) nu += d;
  return nu;
}

Vector StandardForm::apply(const std::vector<DenseMatrix>& x, const Vector& v) const {
  Vector col(u.cols());
  for (std::size_t b = 0; b < block_dims.size(); ++b) {
    col.segment(block_cols[b], svec_dim(block_dims[b])) = svec(x[b]);
  }
  for (std::size_t k = 0; k < shared_vars.size(); ++k) col(shared_col0 + k) = v(shared_vars[k]);
  Vector out = u * col;
  for (std::size_t k = 0; k < priv_vars.size(); ++k) {
    out(priv_rows[k]) += priv_coefs[k] * v(priv_vars[k]);
  }
  return out;
}

void StandardForm::apply_transpose(const Vector& y, std::vector<DenseMatrix>& x, Vector& v) const {
  const Vector col = u.transpose() * y;
  x.resize(block_dims.size());
  for (std::size_t b = 0; b < block_dims.size(); ++b) {
    x[b] = smat(col.segment(block_cols[b], svec_dim(block_dims[b])), block_dims[b]);
  }
  v = Vector::Zero(nonneg);
  for (std::size_t k = 0; k < shared_vars.size(); ++k) v(shared_vars[k]) = col(shared_col0 + k);
  for (std::size_t k = 0; k < priv_vars.size(); ++k) {
    v(priv_vars[k]) += priv_coefs[k] * y(priv_rows[k]);
  }
}

}  // namespace detail

namespace {

// ||X S|| is bounded by this multiple of gap_tol at termination, which keeps
// the stationarity residual of kkt_residuals below 10 gap_tol.
constexpr double kCompFactor = 5.0;
constexpr double kNeighborhood = 1e-3;
// A solve that has not reduced its merit by this factor within kStallWindow
// iterations is stopped.
constexpr double kProgress = 0.9;
constexpr int kStallWindow = 15;
constexpr int kRefineRounds = 3;

using detail::SchurSystem;
using detail::StandardForm;

enum class XMode { kNone, kPlain, kBounded, kFixed, kDiagonal };

struct Lowered {
  StandardForm sf;
  XMode mode = XMode::kNone;
  Index m = 0;
  double t1 = 1.0;
  double t2 = 1.0;
  bool scale_free = false;
  Index var_sigma0 = -1;
  Index var_q = 0;
  Index var_slack0 = 0;
  Index var_scale = -1;
  std::vector<Index> row_origin;  // standard-form row -> problem row (-1: coupling)
  std::vector<Index> dropped;
  std::vector<DenseMatrix> x0;
  Vector v0;
};

struct WorkRow {
  Vector block0;  // coefficients on the first PSD block (svec)
  bool coupling = false;
  Index coupling_pos = -1;
  std::vector<std::pair<Index, double>> nonneg;  // (variable, coeff)
  double rhs = 0.0;
  Index origin = -1;
};

double svec_trace(const Eigen::Ref<const Vector>& a, Index n) {
  double t = 0.0;
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    t += a(p);
    p += n - j;
  }
  return t;
}

Vector svec_identity(Index n) {
  Vector v = Vector::Zero(svec_dim(n));
  Index p = 0;
  for (Index j = 0; j < n; ++j) {
    v(p) = 1.0;
    p += n - j;
  }
  return v;
}

Lowered lower(const ConicProblem& pb) {
  Lowered lw;
  lw.m = pb.psd_dim;
  const Index n_x = pb.diagonal_x ? 0 : svec_dim(pb.psd_dim);

  if (pb.psd_dim == 0) {
    lw.mode = XMode::kNone;
  } else if (pb.diagonal_x) {
    lw.mode = XMode::kDiagonal;
  } else if (pb.eig_bounds) {
    lw.t1 = pb.eig_bounds->upper;
    lw.t2 = pb.eig_bounds->lower;
    lw.scale_free = pb.eig_bounds->scale_free;
    lw.mode = lw.t1 > lw.t2 ? XMode::kBounded : XMode::kFixed;
  } else {
    lw.mode = XMode::kPlain;
  }

  Index nv = 0;
  if (lw.mode == XMode::kDiagonal) {
    lw.var_sigma0 = 0;
    nv += pb.psd_dim;
  }
  lw.var_q = nv++;
  lw.var_slack0 = nv;
  nv += pb.slack_count;
  if (lw.scale_free) lw.var_scale = nv++;

  std::vector<WorkRow> rows(pb.rows());
  for (Index k = 0; k < pb.rows(); ++k) {
    WorkRow& w = rows[k];
    w.origin = k;
    w.rhs = pb.rhs(k);
    const auto a = pb.x_coeffs.row(k).transpose();
    switch (lw.mode) {
      case XMode::kNone:
        break;
      case XMode::kDiagonal:
        for (Index i = 0; i < pb.psd_dim; ++i) {
          if (a(i) != 0.0) w.nonneg.emplace_back(lw.var_sigma0 + i, a(i));
        }
        break;
      case XMode::kPlain:
        w.block0 = a;
        break;
      case XMode::kBounded:
      case XMode::kFixed: {
        const double tr = svec_trace(a, pb.psd_dim);
        const double base = lw.mode == XMode::kBounded ? lw.t2 : lw.t1;
        if (lw.mode == XMode::kBounded) w.block0 = a;
        if (lw.scale_free) {
          if (tr != 0.0) w.nonneg.emplace_back(lw.var_scale, base * tr);
        } else {
          w.rhs -= base * tr;
        }
        break;
      }
    }
    if (pb.q_coeffs(k) != 0.0) w.nonneg.emplace_back(lw.var_q, pb.q_coeffs(k));
  }
  for (const SlackTerm& t : pb.slack_terms) {
    if (t.coeff != 0.0) rows[t.row].nonneg.emplace_back(lw.var_slack0 + t.slack, t.coeff);
  }
  if (lw.mode == XMode::kBounded) {
    const Vector eye = svec_identity(pb.psd_dim);
    for (Index p = 0; p < n_x; ++p) {
      WorkRow w;
      w.coupling = true;
      w.coupling_pos = p;
      if (lw.scale_free) {
        if (eye(p) != 0.0) w.nonneg.emplace_back(lw.var_scale, -(lw.t1 - lw.t2));
      } else {
        w.rhs = (lw.t1 - lw.t2) * eye(p);
      }
      rows.push_back(std::move(w));
    }
  }

  std::vector<Index> block_dims;
  if (lw.mode == XMode::kPlain) block_dims = {pb.psd_dim};
  if (lw.mode == XMode::kBounded) block_dims = {pb.psd_dim, pb.psd_dim};

  // Private variables appear in exactly one surviving row.
  std::vector<bool> alive(rows.size(), true);
  auto classify = [&](std::vector<Index>& count) {
    count.assign(nv, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!alive[r]) continue;
      for (auto [var, c] : rows[r].nonneg) ++count[var];
    }
  };
  std::vector<Index> count;
  classify(count);

  auto is_private_row = [&](std::size_t r) {
    return std::any_of(rows[r].nonneg.begin(), rows[r].nonneg.end(),
                       [&](const auto& t) { return count[t.first] == 1; });
  };

  std::vector<Index> shared;
  for (Index v = 0; v < nv; ++v) {
    if (count[v] != 1) shared.push_back(v);
  }
  Index n_block_cols = 0;
  for (Index d : block_dims) n_block_cols += svec_dim(d);
  const Index n_u = n_block_cols + static_cast<Index>(shared.size());
  std::vector<Index> shared_col(nv, -1);
  for (std::size_t k = 0; k < shared.size(); ++k) shared_col[shared[k]] = n_block_cols + k;

  auto dense_row = [&](const WorkRow& w) {
    Vector u = Vector::Zero(n_u);
    if (w.coupling) {
      u(w.coupling_pos) = 1.0;
      u(n_x + w.coupling_pos) = 1.0;
    } else if (w.block0.size() > 0) {
      u.head(w.block0.size()) = w.block0;
    }
    for (auto [var, c] : w.nonneg) {
      if (shared_col[var] >= 0) u(shared_col[var]) += c;
    }
    return u;
  };

  // Presolve: drop linearly dependent equality rows.
  std::vector<Index> eq_rows;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!is_private_row(r)) eq_rows.push_back(static_cast<Index>(r));
  }
  if (!eq_rows.empty()) {
    DenseMatrix ue(n_u, static_cast<Index>(eq_rows.size()));
    Vector be(static_cast<Index>(eq_rows.size()));
    for (std::size_t k = 0; k < eq_rows.size(); ++k) {
      ue.col(k) = dense_row(rows[eq_rows[k]]);
      be(k) = rows[eq_rows[k]].rhs;
    }
    Index rank = 0;
    std::vector<Index> keep_cols;
    if (n_u > 0 && ue.norm() > 0.0) {
      Eigen::ColPivHouseholderQR<DenseMatrix> qr(ue);
      qr.setThreshold(1e-10);
      rank = qr.rank();
      for (Index k = 0; k < rank; ++k) keep_cols.push_back(qr.colsPermutation().indices()(k));
    }
    if (rank < static_cast<Index>(eq_rows.size())) {
      std::vector<bool> kept(eq_rows.size(), false);
      for (Index c : keep_cols) kept[c] = true;
      DenseMatrix uk(n_u, rank);
      Vector bk(rank);
      for (Index k = 0; k < rank; ++k) {
        uk.col(k) = ue.col(keep_cols[k]);
        bk(k) = be(keep_cols[k]);
      }
      Eigen::ColPivHouseholderQR<DenseMatrix> qk;
      if (rank > 0) qk.compute(uk);
      for (std::size_t k = 0; k < eq_rows.size(); ++k) {
        if (kept[k]) continue;
        const Vector coef = rank > 0 ? Vector(qk.solve(ue.col(k))) : Vector();
        const double implied = rank > 0 ? coef.dot(bk) : 0.0;
        const double fit = rank > 0 ? (uk * coef - ue.col(k)).norm() : ue.col(k).norm();
        const double scale = 1.0 + std::abs(be(k)) + (rank > 0 ? coef.cwiseAbs().dot(bk.cwiseAbs()) : 0.0);
        if (fit > 1e-8 * (1.0 + ue.col(k).norm()) || std::abs(implied - be(k)) > 1e-8 * scale) {
          throw Error(ErrorCode::kInfeasible,
                      "equality constraints are inconsistent (row " + std::to_string(eq_rows[k]) + ")");
        }
        alive[eq_rows[k]] = false;
        if (rows[eq_rows[k]].origin >= 0) lw.dropped.push_back(rows[eq_rows[k]].origin);
      }
      std::sort(lw.dropped.begin(), lw.dropped.end());
      if (!lw.dropped.empty()) {
        warn("presolve dropped " + std::to_string(lw.dropped.size()) + " dependent equality rows");
      }
    }
  }

  // Re-classify after dropping rows; the set of private variables can only grow.
  classify(count);
  shared.clear();
  for (Index v = 0; v < nv; ++v) {
    if (count[v] != 1) shared.push_back(v);
  }
  shared_col.assign(nv, -1);
  for (std::size_t k = 0; k < shared.size(); ++k) shared_col[shared[k]] = n_block_cols + k;
  const Index n_u2 = n_block_cols + static_cast<Index>(shared.size());

  std::vector<Index> order_e, order_i;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!alive[r]) continue;
    (is_private_row(r) ? order_i : order_e).push_back(static_cast<Index>(r));
  }

  StandardForm& sf = lw.sf;
  sf.rows = static_cast<Index>(order_e.size() + order_i.size());
  sf.equality_rows = static_cast<Index>(order_e.size());
  sf.block_dims = block_dims;
  Index col = 0;
  for (Index d : block_dims) {
    sf.block_cols.push_back(col);
    col += svec_dim(d);
  }
  sf.shared_col0 = n_block_cols;
  sf.shared_vars = shared;
  sf.nonneg = nv;
  sf.u = DenseMatrix::Zero(sf.rows, n_u2);
  sf.b.resize(sf.rows);
  Index out = 0;
  for (const auto* list : {&order_e, &order_i}) {
    for (Index r : *list) {
      const WorkRow& w = rows[r];
      if (w.coupling) {
        sf.u(out, w.coupling_pos) = 1.0;
        sf.u(out, n_x + w.coupling_pos) = 1.0;
      } else if (w.block0.size() > 0) {
        sf.u.row(out).head(w.block0.size()) = w.block0.transpose();
      }
      for (auto [var, c] : w.nonneg) {
        if (shared_col[var] >= 0) {
          sf.u(out, shared_col[var]) += c;
        } else {
          sf.priv_vars.push_back(var);
          sf.priv_rows.push_back(out);
          sf.priv_coefs.push_back(c);
        }
      }
      sf.b(out) = w.rhs;
      lw.row_origin.push_back(w.origin);
      ++out;
    }
  }
  for (Index d : block_dims) sf.c_blocks.push_back(DenseMatrix::Zero(d, d));
  sf.c_nonneg = Vector::Zero(nv);
  sf.c_nonneg(lw.var_q) = 1.0;

  // Starting point: X = I (or the middle of the eigenvalue band), q = 1,
  // private slacks from their row residuals.
  const Index m = pb.psd_dim;
  lw.v0 = Vector::Ones(nv);
  double s0 = 1.0;
  if (lw.mode == XMode::kBounded) {
    if (lw.scale_free) {
      s0 = 2.0 / (lw.t1 + lw.t2);
      lw.x0 = {(1.0 - s0 * lw.t2) * DenseMatrix::Identity(m, m),
               (s0 * lw.t1 - 1.0) * DenseMatrix::Identity(m, m)};
      lw.v0(lw.var_scale) = s0;
    } else {
      const double h = 0.5 * (lw.t1 - lw.t2);
      lw.x0 = {h * DenseMatrix::Identity(m, m), h * DenseMatrix::Identity(m, m)};
    }
  } else if (lw.mode == XMode::kPlain) {
    lw.x0 = {DenseMatrix::Identity(m, m)};
  } else if (lw.mode == XMode::kFixed && lw.scale_free) {
    lw.v0(lw.var_scale) = 1.0 / lw.t1;
  }
  std::vector<bool> assigned(nv, false);
  for (std::size_t k = 0; k < sf.priv_vars.size(); ++k) assigned[sf.priv_vars[k]] = true;
  Vector v_tmp = lw.v0;
  for (std::size_t k = 0; k < sf.priv_vars.size(); ++k) v_tmp(sf.priv_vars[k]) = 0.0;
  const Vector act = sf.apply(lw.x0, v_tmp);
  std::vector<bool> row_done(sf.rows, false);
  for (std::size_t k = 0; k < sf.priv_vars.size(); ++k) {
    const Index r = sf.priv_rows[k];
    double val = 1.0;
    if (!row_done[r]) {
      val = (sf.b(r) - act(r)) / sf.priv_coefs[k];
      row_done[r] = true;
      if (!(val >= 0.1)) val = 1.0;
    }
    lw.v0(sf.priv_vars[k]) = val;
  }
  return lw;
}

double inner(const std::vector<DenseMatrix>& a, const std::vector<DenseMatrix>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k].cwiseProduct(b[k]).sum();
  return s;
}

double frob_sq(const std::vector<DenseMatrix>& a) {
  double s = 0.0;
  for (const auto& x : a) s += x.squaredNorm();
  return s;
}

DenseMatrix sym(const DenseMatrix& a) { return 0.5 * (a + a.transpose()); }

// Largest alpha with X + alpha dX >= 0, given the Cholesky factor of X.
double psd_step(const Eigen::LLT<DenseMatrix>& chol, const DenseMatrix& dx) {
  const auto l = chol.matrixL();
  DenseMatrix t = l.solve(dx);
  t = l.solve(t.transpose()).transpose();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double nonneg_step(const Vector& v, const Vector& dv) {
  double a = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < v.size(); ++k) {
    if (dv(k) < 0.0) a = std::min(a, -v(k) / dv(k));
  }
  return a;
}

// svec matrix of V -> sym(P V Q) for symmetric P, Q.
DenseMatrix skron(const DenseMatrix& p, const DenseMatrix& q) {
  const Index n = p.rows();
  const Index nd = svec_dim(n);
  std::vector<std::pair<Index, Index>> idx;
  idx.reserve(nd);
  for (Index j = 0; j < n; ++j) {
    for (Index i = j; i < n; ++i) idx.emplace_back(i, j);
  }
  DenseMatrix k(nd, nd);
  for (Index c = 0; c < nd; ++c) {
    const auto [kk, ll] = idx[c];
    const double sc = kk == ll ? 1.0 : std::numbers::sqrt2;
    for (Index r = c; r < nd; ++r) {
      const auto [i, j] = idx[r];
      const double sr = i == j ? 1.0 : std::numbers::sqrt2;
      const double v = p(i, kk) * q(j, ll) + p(i, ll) * q(j, kk) + q(i, kk) * p(j, ll) +
                       q(i, ll) * p(j, kk);
      k(r, c) = k(c, r) = 0.25 * sr * sc * v;
    }
  }
  return k;
}

struct Iterate {
  std::vector<DenseMatrix> x, s;
  Vector v, sv, y;
};

struct Direction {
  std::vector<DenseMatrix> dx, ds;
  Vector dv, dsv, dy;
};

}  // namespace

ConicSolution solve(const ConicProblem& problem, const SolverSettings& settings) {
  problem.validate();
  Lowered lw = lower(problem);
  const StandardForm& sf = lw.sf;
  const std::size_t nb = sf.block_dims.size();
  const double nu = static_cast<double>(std::max<Index>(sf.degree(), 1));

  Iterate it;
  it.x = lw.x0;
  it.v = lw.v0;
  it.s.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) it.s[b] = DenseMatrix::Identity(sf.block_dims[b], sf.block_dims[b]);
  it.sv = Vector::Ones(sf.nonneg);
  it.y = Vector::Zero(sf.rows);

  const double b_norm = sf.b.norm();
  const double c_norm = std::sqrt(frob_sq(sf.c_blocks) + sf.c_nonneg.squaredNorm());

  ConicSolution sol;
  Iterate best = it;
  double best_merit = std::numeric_limits<double>::infinity();
  Status status = Status::kMaxIter;
  int stalls = 0;
  int last_progress = 0;
  double progress_ref = std::numeric_limits<double>::infinity();
  int iter = 0;
  SchurSystem schur;

  for (;; ++iter) {
    // Residuals and measures at the current iterate.
    const Vector rp = sf.b - sf.apply(it.x, it.v);
    std::vector<DenseMatrix> aty;
    Vector aty_v;
    sf.apply_transpose(it.y, aty, aty_v);
    std::vector<DenseMatrix> rd(nb);
    for (std::size_t b = 0; b < nb; ++b) rd[b] = sf.c_blocks[b] - it.s[b] - aty[b];
    const Vector rd_v = sf.c_nonneg - it.sv - aty_v;

    const double gap = inner(it.x, it.s) + it.v.dot(it.sv);
    const double mu = gap / nu;
    const double pobj = inner(sf.c_blocks, it.x) + sf.c_nonneg.dot(it.v);
    const double dobj = sf.b.dot(it.y);
    const double pinf = rp.norm() / (1.0 + b_norm);
    const double dinf = std::sqrt(frob_sq(rd) + rd_v.squaredNorm()) / (1.0 + c_norm);
    const double rel_gap = gap / (1.0 + std::abs(pobj));
    const double obj_gap = std::abs(pobj - dobj) / std::max(1.0, std::abs(pobj));

    IterationLog log;
    log.gap = gap;
    log.primal_infeasibility = pinf;
    log.dual_infeasibility = dinf;
    log.min_x_eig = std::numeric_limits<double>::infinity();
    for (const auto& xb : it.x) {
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(xb, Eigen::EigenvaluesOnly);
      log.min_x_eig = std::min(log.min_x_eig, es.eigenvalues()(0));
    }
    log.min_nonneg = it.v.size() > 0 ? it.v.minCoeff() : 0.0;
    if (!sol.history.empty()) {
      log.primal_step = sol.history.back().primal_step;
      log.dual_step = sol.history.back().dual_step;
    }
    sol.history.push_back(log);

    // Complementarity in the matrix sense; the trace gap alone does not bound
    // ||X S|| when X approaches a singular optimum.
    double comp = it.v.size() > 0 ? it.v.cwiseProduct(it.sv).cwiseAbs().maxCoeff() : 0.0;
    for (std::size_t b = 0; b < nb; ++b) comp = std::max(comp, (it.x[b] * (it.s[b] + rd[b])).norm());

    if (settings.verbose) {
      std::fprintf(stderr, "%3d  pobj %+.10e  dobj %+.10e  gap %.2e  pinf %.2e  dinf %.2e  comp %.2e\n", iter,
                   pobj, dobj, gap, pinf, dinf, comp);
    }

    const double merit = std::max({rel_gap, obj_gap, comp, pinf / settings.feas_tol * settings.gap_tol,
                                   dinf / settings.feas_tol * settings.gap_tol});
    if (merit < best_merit) {
      if (merit < kProgress * progress_ref) {
        last_progress = iter;
        progress_ref = merit;
      }
      best_merit = merit;
      best = it;
    }
    if (rel_gap <= settings.gap_tol && obj_gap <= settings.gap_tol && comp <= kCompFactor * settings.gap_tol &&
        pinf <= settings.feas_tol &&
        dinf <= settings.feas_tol) {
      status = Status::kOptimal;
      best = it;
      break;
    }
    if (iter >= settings.max_iter) {
      status = Status::kMaxIter;
      break;
    }
    if (iter - last_progress >= kStallWindow) {
      status = Status::kNumericalFailure;
      break;
    }

    // Scaling operators.
    std::vector<DenseMatrix> sinv(nb);
    std::vector<Eigen::LLT<DenseMatrix>> xchol(nb), schol(nb);
    std::vector<DenseMatrix> kblocks(nb);
    bool ok = true;
    for (std::size_t b = 0; b < nb; ++b) {
      xchol[b].compute(it.x[b]);
      schol[b].compute(it.s[b]);
      if (xchol[b].info() != Eigen::Success || schol[b].info() != Eigen::Success) {
        ok = false;
        break;
      }
      sinv[b] = schol[b].solve(DenseMatrix::Identity(sf.block_dims[b], sf.block_dims[b]));
      sinv[b] = sym(sinv[b]);
      kblocks[b] = skron(it.x[b], sinv[b]);
    }
    const Vector ratio = it.v.cwiseQuotient(it.sv);
    Vector shared_scale(static_cast<Index>(sf.shared_vars.size()));
    for (std::size_t k = 0; k < sf.shared_vars.size(); ++k) shared_scale(k) = ratio(sf.shared_vars[k]);
    Vector delta = Vector::Zero(sf.rows);
    for (std::size_t k = 0; k < sf.priv_vars.size(); ++k) {
      delta(sf.priv_rows[k]) += sf.priv_coefs[k] * sf.priv_coefs[k] * ratio(sf.priv_vars[k]);
    }
    if (ok) ok = schur.factor(sf, kblocks, shared_scale, delta);
    if (!ok) {
      status = Status::kNumericalFailure;
      break;
    }

    auto kop = [&](std::size_t b, const DenseMatrix& w) {
      return sym(it.x[b] * w * sinv[b]);
    };

    // Newton direction for the complementarity target rc.
    const double refine_tol = std::max(1e-3 * settings.feas_tol * (1.0 + b_norm), 1e-2 * rp.norm());
    auto direction = [&](const std::vector<DenseMatrix>& rc, const Vector& rc_v) {
      Direction d;
      std::vector<DenseMatrix> tmp(nb);
      for (std::size_t b = 0; b < nb; ++b) tmp[b] = rc[b] - kop(b, rd[b]);
      const Vector tmp_v = rc_v - ratio.cwiseProduct(rd_v);
      const Vector rhs = rp - sf.apply(tmp, tmp_v);
      d.dy = schur.solve(rhs);
      d.ds.resize(nb);
      d.dx.resize(nb);
      // Refine dy against the primal equation A dx = rp, which loses accuracy
      // first when X approaches a singular optimum.
      double prev = std::numeric_limits<double>::infinity();
      for (int round = 0;; ++round) {
        std::vector<DenseMatrix> atdy;
        Vector atdy_v;
        sf.apply_transpose(d.dy, atdy, atdy_v);
        for (std::size_t b = 0; b < nb; ++b) {
          d.ds[b] = rd[b] - atdy[b];
          d.dx[b] = sym(rc[b] - kop(b, d.ds[b]));
        }
        d.dsv = rd_v - atdy_v;
        d.dv = rc_v - ratio.cwiseProduct(d.dsv);
        if (round == kRefineRounds) break;
        const Vector res = rp - sf.apply(d.dx, d.dv);
        const double rn = res.norm();
        if (rn <= refine_tol || rn > 0.5 * prev) break;
        prev = rn;
        d.dy += schur.solve(res);
      }
      return d;
    };

    auto step_lengths = [&](const Direction& d, double& ap, double& ad) {
      ap = nonneg_step(it.v, d.dv);
      ad = nonneg_step(it.sv, d.dsv);
      for (std::size_t b = 0; b < nb; ++b) {
        ap = std::min(ap, psd_step(xchol[b], d.dx[b]));
        ad = std::min(ad, psd_step(schol[b], d.ds[b]));
      }
    };

    // Predictor.
    std::vector<DenseMatrix> rc(nb);
    for (std::size_t b = 0; b < nb; ++b) rc[b] = -it.x[b];
    Vector rc_v = -it.v;
    const Direction aff = direction(rc, rc_v);
    double ap = 0.0, ad = 0.0;
    step_lengths(aff, ap, ad);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      gap_aff += (it.x[b] + ap * aff.dx[b]).cwiseProduct(it.s[b] + ad * aff.ds[b]).sum();
    }
    gap_aff += (it.v + ap * aff.dv).dot(it.sv + ad * aff.dsv);
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / gap, 3.0), 0.0, 1.0);

    // Corrector.
    auto corrector = [&](double sg, bool second_order) {
      for (std::size_t b = 0; b < nb; ++b) {
        rc[b] = sg * mu * sinv[b] - it.x[b];
        if (second_order) rc[b] -= sym(aff.dx[b] * aff.ds[b] * sinv[b]);
      }
      rc_v = (sg * mu) * it.sv.cwiseInverse() - it.v;
      if (second_order) rc_v -= aff.dv.cwiseProduct(aff.dsv).cwiseQuotient(it.sv);
      return direction(rc, rc_v);
    };
    Direction dir = corrector(sigma, true);

    // Keep the complementarity gap non-increasing. Unequal primal and dual
    // steps, or the second-order term, can make the gap grow; fall back to a
    // common step and then to a plain centered direction.
    auto gap_at = [&](const Direction& d, double a, double b) {
      return gap + b * (inner(it.x, d.ds) + it.v.dot(d.dsv)) + a * (inner(d.dx, it.s) + d.dv.dot(it.sv)) +
             a * b * (inner(d.dx, d.ds) + d.dv.dot(d.dsv));
    };
    auto backtrack = [&](const Direction& d, double& a, double& b) {
      for (int k = 0; k < 60 && gap_at(d, a, b) > gap; ++k) {
        a *= 0.8;
        b *= 0.8;
      }
      return gap_at(d, a, b) <= gap;
    };
    for (int attempt = 0; attempt < 3; ++attempt) {
      if (attempt == 2) dir = corrector(std::min(sigma, 0.5), false);
      step_lengths(dir, ap, ad);
      ap = std::min(1.0, settings.step_fraction * ap);
      ad = std::min(1.0, settings.step_fraction * ad);
      if (attempt >= 1) ap = ad = std::min(ap, ad);
      double a = ap, b = ad;
      if (gap_at(dir, ap, ad) <= gap || (backtrack(dir, a, b) && a > 1e-3 * ap)) {
        ap = a;
        ad = b;
        break;
      }
      ap = a;
      ad = b;
    }

    // Stay in a wide neighborhood of the central path: every eigenvalue of
    // X^1/2 S X^1/2 and every product v sv at least kNeighborhood times the
    // mean (or half the current ratio when starting outside). Without it
    // ||X S|| decays only like sqrt(gap) on degenerate problems.
    auto centrality = [&](double a, double b) {
      const double g = gap_at(dir, a, b);
      const double mean = std::max(g, 0.0) / nu;
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < nb; ++k) {
        Eigen::LLT<DenseMatrix> lx(sym(it.x[k] + a * dir.dx[k]));
        if (lx.info() != Eigen::Success) return -1.0;
        const DenseMatrix l = lx.matrixL();
        const DenseMatrix w = l.transpose() * sym(it.s[k] + b * dir.ds[k]) * l;
        Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym(w), Eigen::EigenvaluesOnly);
        worst = std::min(worst, es.eigenvalues()(0));
      }
      if (it.v.size() > 0) worst = std::min(worst, (it.v + a * dir.dv).cwiseProduct(it.sv + b * dir.dsv).minCoeff());
      return mean > 0.0 ? worst / mean : -1.0;
    };
    const double floor = std::min(kNeighborhood, 0.5 * centrality(0.0, 0.0));
    for (int k = 0; k < 40 && (gap_at(dir, ap, ad) > gap || centrality(ap, ad) < floor); ++k) {
      ap *= 0.9;
      ad *= 0.9;
    }

    if (settings.verbose) std::fprintf(stderr, "     sigma %.3e  ap %.3e  ad %.3e\n", sigma, ap, ad);
    for (std::size_t b = 0; b < nb; ++b) {
      it.x[b] = sym(it.x[b] + ap * dir.dx[b]);
      it.s[b] = sym(it.s[b] + ad * dir.ds[b]);
    }
    it.v += ap * dir.dv;
    it.sv += ad * dir.dsv;
    it.y += ad * dir.dy;
    sol.history.back().primal_step = ap;
    sol.history.back().dual_step = ad;

    if (!it.v.allFinite() || !it.sv.allFinite() || !it.y.allFinite()) {
      status = Status::kNumericalFailure;
      break;
    }
    stalls = (std::max(ap, ad) < 1e-8) ? stalls + 1 : 0;
    if (stalls >= 5) {
      status = Status::kNumericalFailure;
      break;
    }
  }

  // Map the standard-form iterate back onto the problem's variables.
  const Iterate& fin = best;
  const Index m = problem.psd_dim;
  switch (lw.mode) {
    case XMode::kNone:
      sol.x = DenseMatrix(0, 0);
      sol.s = DenseMatrix(0, 0);
      break;
    case XMode::kDiagonal:
      sol.x = fin.v.segment(lw.var_sigma0, m).asDiagonal();
      sol.s = fin.sv.segment(lw.var_sigma0, m).asDiagonal();
      break;
    case XMode::kPlain:
      sol.x = fin.x[0];
      sol.s = fin.s[0];
      break;
    case XMode::kBounded: {
      const double shift = lw.scale_free ? fin.v(lw.var_scale) * lw.t2 : lw.t2;
      sol.x = fin.x[0] + shift * DenseMatrix::Identity(m, m);
      sol.s = fin.s[0];
      sol.s_upper = fin.s[1];
      break;
    }
    case XMode::kFixed: {
      const double scale = lw.scale_free ? fin.v(lw.var_scale) * lw.t1 : lw.t1;
      sol.x = scale * DenseMatrix::Identity(m, m);
      sol.s = DenseMatrix::Zero(m, m);
      sol.s_upper = DenseMatrix::Zero(m, m);
      break;
    }
  }
  sol.q = fin.v(lw.var_q);
  sol.q_dual = fin.sv(lw.var_q);
  sol.slacks = fin.v.segment(lw.var_slack0, problem.slack_count);
  sol.slack_duals = fin.sv.segment(lw.var_slack0, problem.slack_count);
  sol.duals = Vector::Zero(problem.rows());
  for (Index r = 0; r < sf.rows; ++r) {
    if (lw.row_origin[r] >= 0) sol.duals(lw.row_origin[r]) = -fin.y(r);
  }
  sol.dropped_rows = lw.dropped;
  sol.gap = inner(fin.x, fin.s) + fin.v.dot(fin.sv);
  sol.primal_objective = sol.q;
  sol.dual_objective = sf.b.dot(fin.y);

  // Primal residual on the original rows.
  Vector act = problem.q_coeffs * sol.q;
  if (m > 0) {
    const Vector xc = problem.diagonal_x ? Vector(sol.x.diagonal()) : svec(sol.x);
    act += problem.x_coeffs * xc;
  }
  for (const SlackTerm& t : problem.slack_terms) act(t.row) += t.coeff * sol.slacks(t.slack);
  sol.primal_infeasibility = (problem.rhs - act).norm() / (1.0 + problem.rhs.norm());
  {
    std::vector<DenseMatrix> aty;
    Vector aty_v;
    sf.apply_transpose(fin.y, aty, aty_v);
    double r2 = (sf.c_nonneg - fin.sv - aty_v).squaredNorm();
    for (std::size_t b = 0; b < nb; ++b) r2 += (sf.c_blocks[b] - fin.s[b] - aty[b]).squaredNorm();
    sol.dual_infeasibility = std::sqrt(r2) / (1.0 + c_norm);
  }
  sol.status = status;
  sol.iterations = iter;
  return sol;
}

KktResiduals kkt_residuals(const ConicProblem& problem, const ConicSolution& solution) {
  KktResiduals r;
  const Index n = problem.rows();
  const Vector& z = solution.duals;
  if (problem.psd_dim > 0) {
    if (problem.eig_bounds && problem.eig_bounds->upper > problem.eig_bounds->lower) {
      const auto& eb = *problem.eig_bounds;
      const Index m = problem.psd_dim;
      double lo = eb.lower;
      double hi = eb.upper;
      if (eb.scale_free) {
        // Recover the scale from the lower block: X - s t2 I is singular along S.
        const double tr_s = solution.s.trace();
        const double s_est =
            tr_s > 0.0 ? (solution.x * solution.s).trace() / (eb.lower * tr_s) : 1.0;
        lo *= s_est;
        hi *= s_est;
      }
      const DenseMatrix eye = DenseMatrix::Identity(m, m);
      r.stationarity = ((solution.x - lo * eye) * solution.s).norm() +
                       ((hi * eye - solution.x) * solution.s_upper).norm();
    } else {
      const Vector coeff = problem.x_coeffs.transpose() * z;
      const DenseMatrix zs = problem.diagonal_x ? DenseMatrix(coeff.asDiagonal())
                                                : smat(coeff, problem.psd_dim);
      r.stationarity = (solution.x * zs).norm();
    }
  }
  for (const SlackTerm& t : problem.slack_terms) {
    const RowKind kind = problem.tags[t.row].kind;
    const double prod = std::abs(z(t.row) * t.coeff * solution.slacks(t.slack));
    if (kind == RowKind::kUpper) r.upper = std::max(r.upper, prod);
    if (kind == RowKind::kLower) r.lower = std::max(r.lower, prod);
  }
  double q_dual = 1.0;
  for (Index k = 0; k < n; ++k) q_dual += z(k) * problem.q_coeffs(k);
  r.normalization = std::abs(solution.q * q_dual);
  if (!problem.eig_bounds) {
    r.duality = std::abs(solution.q + problem.rhs.dot(z));
  } else {
    r.duality = std::abs(solution.primal_objective - solution.dual_objective);
  }
  return r;
}

}  // namespace cohere::conic
