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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cohere/error.hpp"
#include "cohere/experiments.hpp"
#include "cohere/io.hpp"
#include "cohere/precondition.hpp"
#include "cohere/recovery.hpp"
#include "oracles.hpp"

namespace cohere {
namespace {

struct QuietWarnings {
  QuietWarnings() { set_warning_sink([](std::string_view) {}); }
  ~QuietWarnings() { set_warning_sink(nullptr); }
};

TEST(Omp, SingleAtom) {
  const Frame f = random_gaussian_frame(6, 12, 1);
  const Vector y = 2.0 * f.matrix().col(5);
  const RecoveryResult r = omp(f.matrix(), y, 6);
  EXPECT_EQ(r.support, std::vector<Index>{5});
  EXPECT_NEAR(r.estimate(5), 2.0, 1e-12);
  EXPECT_EQ(r.iterations, 1);
}

TEST(Omp, OrthonormalDictionary) {
  const DenseMatrix a = testing::random_orthogonal(5, 3);
  const Vector y = a.col(1) + 0.5 * a.col(3);
  const RecoveryResult r = omp(a, y, 5);
  EXPECT_EQ(r.support, (std::vector<Index>{1, 3}));
  EXPECT_NEAR(r.estimate(1), 1.0, 1e-12);
  EXPECT_NEAR(r.estimate(3), 0.5, 1e-12);
}

TEST(Omp, RecoversBelowCoherenceBound) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Frame f = random_gaussian_frame(40, 60, seed);
    const double bound = recovery_bound(coherence(f).value);
    const Index k = std::max<Index>(1, static_cast<Index>(std::ceil(bound)) - 1);
    ASSERT_LT(static_cast<double>(k), bound);
    const Vector x = planted_signal(60, k, seed + 77);
    const RecoveryResult r = omp(f.matrix(), f.matrix() * x, 40);
    EXPECT_TRUE(recovered(r.estimate, x)) << seed;
  }
}

TEST(Omp, SupportGrowsAndResidualShrinks) {
  const Frame f = random_gaussian_frame(10, 30, 4);
  const Vector y = testing::random_matrix(10, 1, 9).col(0);
  double prev = y.norm();
  for (Index k = 1; k <= 10; ++k) {
    const RecoveryResult r = omp(f.matrix(), y, k, 0.0);
    EXPECT_EQ(static_cast<Index>(r.selection.size()), k);
    EXPECT_LE(r.residual_norm, prev + 1e-12);
    prev = r.residual_norm;
    std::vector<Index> sorted = r.selection;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
  }
}

TEST(Omp, NonUnitColumnsWarnAndRescale) {
  int warnings = 0;
  set_warning_sink([&](std::string_view) { ++warnings; });
  const Frame f = random_gaussian_frame(6, 12, 2);
  const DenseMatrix a = 3.0 * f.matrix();
  const RecoveryResult r = omp(a, a.col(4), 6);
  set_warning_sink(nullptr);
  EXPECT_GT(warnings, 0);
  EXPECT_NEAR(r.estimate(4), 1.0, 1e-12);
  EXPECT_NEAR(r.residual_norm, 0.0, 1e-12);
}

TEST(BasisPursuit, SingleAtom) {
  const Frame f = random_gaussian_frame(6, 12, 1);
  const RecoveryResult r = basis_pursuit(f.matrix(), f.matrix().col(0));
  Vector e = Vector::Zero(12);
  e(0) = 1.0;
  EXPECT_TRUE(recovered(r.estimate, e));
  EXPECT_LE(r.residual_norm, 1e-6);
}

TEST(BasisPursuit, ResidualAndL1Optimality) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Frame f = random_gaussian_frame(5, 11, seed);
    const Vector y = testing::random_matrix(5, 1, static_cast<unsigned>(seed)).col(0);
    const RecoveryResult r = basis_pursuit(f.matrix(), y);
    EXPECT_LE(r.residual_norm, 1e-6 * y.norm());
    // Oracle: every basic solution on 5 columns has l1 norm at least the optimum.
    const double l1 = r.estimate.lpNorm<1>();
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Index> cols(11);
      std::iota(cols.begin(), cols.end(), 0);
      std::mt19937 rng(trial + 100 * static_cast<int>(seed));
      std::shuffle(cols.begin(), cols.end(), rng);
      DenseMatrix sub(5, 5);
      for (int k = 0; k < 5; ++k) sub.col(k) = f.matrix().col(cols[k]);
      const Vector z = sub.fullPivLu().solve(y);
      EXPECT_LE(l1, z.lpNorm<1>() + 1e-6);
    }
  }
}

TEST(BasisPursuit, PreconditioningInvariance) {
  QuietWarnings q;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Frame f = random_gaussian_frame(6, 14, seed);
    const DenseMatrix g = solve_coherence(f).g;
    const Vector y = testing::random_matrix(6, 1, 40 + static_cast<unsigned>(seed)).col(0);
    const RecoveryResult a = basis_pursuit(f.matrix(), y);
    const RecoveryResult b = basis_pursuit(g * f.matrix(), g * y);
    EXPECT_LE((a.estimate - b.estimate).norm(), 1e-5) << seed;
  }
}

TEST(BasisPursuit, ImprovedBoundRecoversWithoutPreconditioning) {
  QuietWarnings q;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Frame f = random_gaussian_frame(8, 12, seed);
    const PreconditionResult r = solve_coherence(f);
    const double bound = recovery_bound(r.verified_coherence);
    const Index k = static_cast<Index>(std::ceil(bound)) - 1;
    if (k < 1) continue;
    ++checked;
    const Vector x = planted_signal(12, k, seed + 5);
    EXPECT_TRUE(recovered(basis_pursuit(f.matrix(), f.matrix() * x).estimate, x)) << seed;
  }
  EXPECT_GT(checked, 0);
}

TEST(BasisPursuit, OutsideRangeIsInfeasible) {
  DenseMatrix a(3, 4);
  a << 1, 0, 1, 0,
       0, 1, 1, 0,
       1, 1, 2, 0;
  try {
    basis_pursuit(a, Vector::Unit(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasible);
  }
}

TEST(BpOmp, AgreeOnPlantedSupports) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Frame f = random_gaussian_frame(30, 45, seed);
    const double bound = recovery_bound(coherence(f).value);
    const Index k = std::max<Index>(1, static_cast<Index>(std::ceil(bound)) - 1);
    const Vector x = planted_signal(45, k, seed);
    const Vector y = f.matrix() * x;
    const RecoveryResult a = omp(f.matrix(), y, 30);
    const RecoveryResult b = basis_pursuit(f.matrix(), y);
    std::vector<Index> truth;
    for (Index i = 0; i < 45; ++i) if (x(i) != 0.0) truth.push_back(i);
    EXPECT_EQ(a.support, truth);
    EXPECT_TRUE(recovered(b.estimate, x));
  }
}

// Stored instance (8 x 16, k = 2) on which OMP selects different supports
// before and after preconditioning, while BP returns the same solution.
TEST(Omp, NotInvariantUnderPreconditioning) {
  const std::string dir = COHERE_TEST_DATA;
  const DenseMatrix phi = io::read_matrix(dir + "/omp_exhibit_phi.mat");
  const DenseMatrix g = io::read_matrix(dir + "/omp_exhibit_g.mat");
  const Vector x = io::read_matrix(dir + "/omp_exhibit_x.mat").col(0);
  const Vector y = phi * x;
  const RecoveryResult a = omp(phi, y, 2);
  const RecoveryResult b = omp(g * phi, g * y, 2);
  EXPECT_NE(a.support, b.support);
  const RecoveryResult c = basis_pursuit(phi, y);
  const RecoveryResult d = basis_pursuit(g * phi, g * y);
  EXPECT_LE((c.estimate - d.estimate).norm(), 1e-5);
}

TEST(Noise, Bounds) {
  const NoiseBounds i = noise_amplification_bounds(DenseMatrix::Identity(3, 3));
  EXPECT_DOUBLE_EQ(i.sigma_min, 1.0);
  EXPECT_DOUBLE_EQ(i.sigma_max, 1.0);
  EXPECT_DOUBLE_EQ(i.kappa, 1.0);
  DenseMatrix d = DenseMatrix::Zero(2, 2);
  d.diagonal() << 2, 1;
  const NoiseBounds b = noise_amplification_bounds(d);
  EXPECT_DOUBLE_EQ(b.sigma_min, 1.0);
  EXPECT_DOUBLE_EQ(b.sigma_max, 2.0);
  EXPECT_DOUBLE_EQ(b.kappa, 2.0);
}

TEST(Noise, SandwichInequalityIsTight) {
  for (unsigned seed = 0; seed < 1000; ++seed) {
    const DenseMatrix g = testing::random_matrix(4, 4, seed);
    const DenseMatrix phi = testing::random_matrix(4, 7, seed + 1);
    const Vector x = testing::random_matrix(7, 1, seed + 2).col(0);
    const Vector y = testing::random_matrix(4, 1, seed + 3).col(0);
    const NoiseBounds b = noise_amplification_bounds(g);
    const double base = (phi * x - y).norm();
    const double pre = (g * phi * x - g * y).norm();
    EXPECT_GE(pre, b.sigma_min * base * (1 - 1e-10));
    EXPECT_LE(pre, b.sigma_max * base * (1 + 1e-10));
  }
  // Tightness along singular directions.
  const DenseMatrix g = testing::random_matrix(4, 4, 99);
  Eigen::JacobiSVD<DenseMatrix> svd(g, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const NoiseBounds b = noise_amplification_bounds(g);
  EXPECT_NEAR((g * svd.matrixV().col(0)).norm(), b.sigma_max, 1e-12);
  EXPECT_NEAR((g * svd.matrixV().col(3)).norm(), b.sigma_min, 1e-12);
}

}  // namespace
}  // namespace cohere
