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

#include "cohere/certificate.hpp"

#include <cmath>
#include <limits>

#include "cohere/error.hpp"

namespace cohere {

std::string_view to_string(Verdict v) {
  return v == Verdict::kFeasible ? "Feasible" : "Infeasible";
}

CertificateSystem certificate_system(const Frame& phi, const ActiveSets& sets) {
  const DenseMatrix f = phi.unit_norm() ? phi.matrix() : phi.normalized().matrix();
  CertificateSystem sys;
  sys.m = phi.dim();
  sys.M = phi.size();
  sys.sets = sets;
  const Index nd = conic::svec_dim(sys.m);
  sys.diag_coeffs.resize(nd, sys.M);
  for (Index i = 0; i < sys.M; ++i) {
    sys.diag_coeffs.col(i) = conic::svec(f.col(i) * f.col(i).transpose());
  }
  auto prime = [&](const IndexPair& p) {
    const DenseMatrix outer = f.col(p.first) * f.col(p.second).transpose();
    return conic::svec(0.5 * (outer + outer.transpose()));
  };
  sys.active_coeffs.resize(nd, static_cast<Index>(sets.size()));
  Index c = 0;
  for (const auto& p : sets.plus) sys.active_coeffs.col(c++) = prime(p);
  for (const auto& p : sets.minus) sys.active_coeffs.col(c++) = -prime(p);
  sys.complement = numerics::range_complement(sys.diag_coeffs, 1e-10);
  return sys;
}

CertificateResult certificate_feasibility(const Frame& phi, const ActiveSets& sets,
                                          const conic::SolverSettings& settings) {
  const CertificateSystem sys = certificate_system(phi, sets);
  CertificateResult res;
  res.sets = sets;
  const Index na = sys.active_coeffs.cols();
  if (na == 0) {
    // The normalization row cannot be met with no active variables.
    res.verdict = Verdict::kInfeasible;
    res.violation = std::numeric_limits<double>::infinity();
    return res;
  }
  const DenseMatrix proj = sys.complement.transpose() * sys.active_coeffs;  // k x na
  const Index k = proj.rows();
  Vector r;
  if (k == 0) {
    r = Vector::Constant(na, 1.0 / static_cast<double>(na));
    res.violation = 0.0;
  } else {
    // min t  s.t.  +-(proj r)_l + e_l^{+-} - t = 0,  sum r = 1,  r, e, t >= 0.
    conic::ConicProblem pb;
    pb.psd_dim = 0;
    pb.slack_count = na + 2 * k;
    const Index rows = 2 * k + 1;
    pb.x_coeffs.resize(rows, 0);
    pb.q_coeffs = Vector::Zero(rows);
    pb.rhs = Vector::Zero(rows);
    pb.tags.resize(rows);
    for (Index l = 0; l < k; ++l) {
      for (int sgn = 0; sgn < 2; ++sgn) {
        const Index row = 2 * l + sgn;
        const double s = sgn == 0 ? 1.0 : -1.0;
        for (Index c = 0; c < na; ++c) {
          if (proj(l, c) != 0.0) pb.slack_terms.push_back({row, c, s * proj(l, c)});
        }
        pb.slack_terms.push_back({row, na + row, 1.0});
        pb.q_coeffs(row) = -1.0;
        pb.tags[row] = {sgn == 0 ? conic::RowKind::kUpper : conic::RowKind::kLower, l, -1};
      }
    }
    for (Index c = 0; c < na; ++c) pb.slack_terms.push_back({rows - 1, c, 1.0});
    pb.rhs(rows - 1) = 1.0;
    pb.tags[rows - 1] = {conic::RowKind::kNormalization, -1, -1};
    conic::SolverSettings st = settings;
    st.gap_tol = std::min(st.gap_tol, 1e-10);
    st.feas_tol = std::min(st.feas_tol, 1e-10);
    const conic::ConicSolution sol = conic::solve(pb, st);
    res.status = sol.status;
    res.iterations = sol.iterations;
    r = sol.slacks.head(na).cwiseMax(0.0);
    const double total = r.sum();
    if (total > 0.0) r /= total;
    res.violation = (proj * r).cwiseAbs().maxCoeff();
  }
  res.r_active = r;
  // Recover the free variables from the range part.
  const Vector w = sys.active_coeffs * r;
  Eigen::CompleteOrthogonalDecomposition<DenseMatrix> cod(sys.diag_coeffs);
  res.r_diag = cod.solve(-w);
  res.verdict = res.violation <= kCertificateTol ? Verdict::kFeasible : Verdict::kInfeasible;
  return res;
}

CertificateResult certify(const Frame& phi, double tau, const conic::SolverSettings& settings) {
  const Frame unit = phi.unit_norm() ? phi : phi.normalized();
  const double mu = coherence(unit).value;
  if (mu <= 0.0) {
    throw Error(ErrorCode::kZeroCoherence, "frame has zero coherence; nothing to certify");
  }
  const Index m = unit.dim();
  CertificateResult res =
      certificate_feasibility(unit, active_sets(unit, DenseMatrix::Identity(m, m), mu, tau), settings);
  res.mu = mu;
  return res;
}

}  // namespace cohere
