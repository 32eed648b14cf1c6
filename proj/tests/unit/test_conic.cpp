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

#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "cohere/conic.hpp"
#include "cohere/error.hpp"
#include "cohere/frames.hpp"
#include "cohere/precondition.hpp"
#include "oracles.hpp"

namespace cohere {
namespace {

using conic::ConicProblem;
using conic::RowKind;
using conic::Status;

class WarningCapture {
 public:
  WarningCapture() {
    set_warning_sink([this](std::string_view m) { messages.emplace_back(m); });
  }
  ~WarningCapture() { set_warning_sink(nullptr); }
  std::vector<std::string> messages;
};

// min q  s.t.  x = 1,  x + p - q = 0,  with x the 1x1 diagonal block.
ConicProblem one_variable_lp() {
  ConicProblem pb;
  pb.psd_dim = 1;
  pb.diagonal_x = true;
  pb.slack_count = 1;
  pb.x_coeffs = DenseMatrix(2, 1);
  pb.x_coeffs << 1, 1;
  pb.q_coeffs = Vector(2);
  pb.q_coeffs << 0, -1;
  pb.rhs = Vector(2);
  pb.rhs << 1, 0;
  pb.slack_terms = {{1, 0, 1.0}};
  pb.tags = {{RowKind::kUnitNorm, 0, 0}, {RowKind::kUpper, 0, 0}};
  return pb;
}

TEST(Svec, RoundTripAndInnerProduct) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const int n = 1 + seed % 6;
    const DenseMatrix b = testing::random_matrix(n, n, seed);
    const DenseMatrix c = testing::random_matrix(n, n, seed + 50);
    const DenseMatrix a1 = b + b.transpose();
    const DenseMatrix a2 = c + c.transpose();
    EXPECT_EQ(conic::svec(a1).size(), conic::svec_dim(n));
    EXPECT_LE((conic::smat(conic::svec(a1), n) - a1).norm(), 1e-14 * a1.norm());
    EXPECT_NEAR(conic::svec(a1).dot(conic::svec(a2)), (a1 * a2).trace(), 1e-12 * a1.norm() * a2.norm());
  }
}

TEST(Solve, OneVariableLp) {
  const conic::ConicSolution s = conic::solve(one_variable_lp());
  EXPECT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(s.q, 1.0, 1e-7);
  EXPECT_NEAR(s.x(0, 0), 1.0, 1e-7);
}

TEST(Solve, MercedesBenz) {
  const ConicProblem pb = build_c1(frames::mercedes_benz());
  const conic::ConicSolution s = conic::solve(pb);
  ASSERT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(s.q, 0.5, 1e-5);
  // Oracle: the three unit-norm equations pin X = [[a, b], [b, c]] on their own.
  const DenseMatrix f = frames::mercedes_benz().matrix();
  DenseMatrix sys(3, 3);
  for (int i = 0; i < 3; ++i) {
    sys(i, 0) = f(0, i) * f(0, i);
    sys(i, 1) = 2 * f(0, i) * f(1, i);
    sys(i, 2) = f(1, i) * f(1, i);
  }
  const Vector abc = sys.fullPivLu().solve(Vector::Ones(3));
  DenseMatrix x_only(2, 2);
  x_only << abc(0), abc(1), abc(1), abc(2);
  EXPECT_LE((x_only - DenseMatrix::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LE((s.x - x_only).norm(), 1e-5);
}

TEST(Solve, NeverAboveIdentityObjective) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Frame f = random_gaussian_frame(3, 7, seed);
    const conic::ConicSolution s = conic::solve(build_c1(f));
    EXPECT_EQ(s.status, Status::kOptimal);
    EXPECT_LE(s.q, coherence(f).value + 1e-7);
  }
}

TEST(Solve, StrongDualityAndDiagonalDualSum) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Frame f = random_gaussian_frame(4, 9, seed);
    const ConicProblem pb = build_c1(f);
    const conic::SolverSettings st;
    const conic::ConicSolution s = conic::solve(pb, st);
    ASSERT_EQ(s.status, Status::kOptimal);
    EXPECT_LE(std::abs(s.primal_objective - s.dual_objective), st.gap_tol);
    EXPECT_NEAR(s.q, -s.duals.head(f.size()).sum(), 10 * st.gap_tol);
    const conic::KktResiduals k = conic::kkt_residuals(pb, s);
    EXPECT_LE(k.max(), 10 * st.gap_tol);
  }
}

TEST(Solve, IteratesStayInteriorAndGapDecreases) {
  const ConicProblem pb = build_c1(random_gaussian_frame(5, 12, 3));
  const conic::ConicSolution s = conic::solve(pb);
  ASSERT_FALSE(s.history.empty());
  for (std::size_t k = 0; k < s.history.size(); ++k) {
    EXPECT_GT(s.history[k].min_x_eig, 0.0) << k;
    EXPECT_GT(s.history[k].min_nonneg, 0.0) << k;
    if (k > 0) EXPECT_LE(s.history[k].gap, s.history[k - 1].gap * (1 + 1e-12) + 1e-12) << k;
  }
}

TEST(Solve, SymmetricSolution) {
  const conic::ConicSolution s = conic::solve(build_c1(random_gaussian_frame(4, 8, 1)));
  EXPECT_LE((s.x - s.x.transpose()).norm(), 1e-12);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(s.x);
  EXPECT_GE(es.eigenvalues()(0), -1e-9);
}

TEST(Solve, MaxIterIsReported) {
  conic::SolverSettings st;
  st.max_iter = 2;
  const conic::ConicSolution s = conic::solve(build_c1(random_gaussian_frame(4, 8, 1)), st);
  EXPECT_EQ(s.status, Status::kMaxIter);
  EXPECT_EQ(s.iterations, 2);
}

TEST(Presolve, DependentRowsDroppedWithWarning) {
  ConicProblem pb = one_variable_lp();
  // Duplicate the equality row.
  pb.x_coeffs.conservativeResize(3, 1);
  pb.x_coeffs(2, 0) = 2.0;
  pb.q_coeffs.conservativeResize(3);
  pb.q_coeffs(2) = 0.0;
  pb.rhs.conservativeResize(3);
  pb.rhs(2) = 2.0;
  pb.tags.push_back({RowKind::kOther, -1, -1});
  WarningCapture w;
  const conic::ConicSolution s = conic::solve(pb);
  EXPECT_EQ(s.status, Status::kOptimal);
  EXPECT_EQ(s.dropped_rows.size(), 1u);
  EXPECT_FALSE(w.messages.empty());
  EXPECT_NEAR(s.q, 1.0, 1e-7);
}

TEST(Presolve, InconsistentRowsAreInfeasible) {
  ConicProblem pb = one_variable_lp();
  pb.x_coeffs.conservativeResize(3, 1);
  pb.x_coeffs(2, 0) = 2.0;
  pb.q_coeffs.conservativeResize(3);
  pb.q_coeffs(2) = 0.0;
  pb.rhs.conservativeResize(3);
  pb.rhs(2) = 3.0;
  pb.tags.push_back({RowKind::kOther, -1, -1});
  try {
    conic::solve(pb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(Validate, RejectsBadData) {
  ConicProblem pb = one_variable_lp();
  pb.rhs(0) = std::nan("");
  EXPECT_THROW(conic::solve(pb), Error);
  pb = one_variable_lp();
  pb.slack_terms.push_back({0, 5, 1.0});
  EXPECT_THROW(conic::solve(pb), Error);
  pb = build_c1(frames::mercedes_benz());
  pb.eig_bounds = conic::EigenvalueBounds{1.0, 2.0, false};
  try {
    conic::solve(pb);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidBounds);
  }
}

TEST(Kkt, MercedesBenzOptimum) {
  const ConicProblem pb = build_c1(frames::mercedes_benz());
  const conic::ConicSolution s = conic::solve(pb);
  const conic::KktResiduals k = conic::kkt_residuals(pb, s);
  EXPECT_LE(k.stationarity, 1e-5);
  EXPECT_LE(k.upper, 1e-5);
  EXPECT_LE(k.lower, 1e-5);
  EXPECT_LE(k.normalization, 1e-5);
}

TEST(Kkt, ZeroDualsLeaveNormalizationAtQ) {
  const Frame f = frames::sign_pattern_3x4();
  const ConicProblem pb = build_c1(f);
  conic::ConicSolution s;
  s.x = DenseMatrix::Identity(3, 3);
  s.q = coherence(f).value;
  s.duals = Vector::Zero(pb.rows());
  s.slacks = Vector::Zero(pb.slack_count);
  const DenseMatrix gram = f.matrix().transpose() * f.matrix();
  Index k = 0;
  for (Index i = 0; i < f.size(); ++i) {
    for (Index j = i + 1; j < f.size(); ++j, ++k) {
      s.slacks(2 * k) = s.q - gram(i, j);
      s.slacks(2 * k + 1) = s.q + gram(i, j);
    }
  }
  const conic::KktResiduals r = conic::kkt_residuals(pb, s);
  EXPECT_NEAR(r.normalization, s.q, 1e-15);
  EXPECT_EQ(r.stationarity, 0.0);
  EXPECT_EQ(r.upper, 0.0);
}

TEST(Kkt, NormalizationIsAffineInDualScale) {
  const Frame f = frames::mercedes_benz();
  const ConicProblem pb = build_c1(f);
  conic::ConicSolution s = conic::solve(pb);
  const Vector z = s.duals;
  double pair_sum = 0.0;
  for (Index k = f.size(); k < pb.rows(); ++k) pair_sum += z(k);
  for (double c : {0.0, 0.5, 2.0, 3.0}) {
    s.duals = c * z;
    const double expect = std::abs(s.q * (1.0 - c * pair_sum));
    EXPECT_NEAR(conic::kkt_residuals(pb, s).normalization, expect, 1e-12);
  }
}

TEST(Bounds, FixedIdentityGivesCoherence) {
  const Frame f = random_gaussian_frame(3, 6, 2);
  ConicProblem pb = build_c1(f);
  pb.eig_bounds = conic::EigenvalueBounds{1.0, 1.0, false};
  WarningCapture w;
  const conic::ConicSolution s = conic::solve(pb);
  EXPECT_EQ(s.status, Status::kOptimal);
  EXPECT_NEAR(s.q, coherence(f).value, 1e-6);
  EXPECT_LE((s.x - DenseMatrix::Identity(3, 3)).norm(), 1e-12);
}

}  // namespace
}  // namespace cohere
