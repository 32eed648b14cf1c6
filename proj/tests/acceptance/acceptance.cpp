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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Pass criterion names (AC1 ... AC10) as
// arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "cohere/certificate.hpp"
#include "cohere/error.hpp"
#include "cohere/experiments.hpp"
#include "cohere/precondition.hpp"
#include "cohere/recovery.hpp"
#include "oracles.hpp"

namespace cohere {
namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// KKT residuals of every Optimal solve seen by the other criteria.
struct KktLog {
  Index solves = 0;
  double worst = 0.0;
  double worst_dual_sum = 0.0;
  double gap_tol = 0.0;
  Index violations = 0;

  void record(const Frame& f, const PreconditionResult& r, double tol) {
    if (r.status != conic::Status::kOptimal || r.solution.duals.size() == 0) return;
    const conic::KktResiduals k = conic::kkt_residuals(build_c1(f), r.solution);
    const double dual_sum = std::abs(r.solution.q + r.solution.duals.head(f.size()).sum());
    ++solves;
    worst = std::max(worst, k.max() / tol);
    worst_dual_sum = std::max(worst_dual_sum, dual_sum / tol);
    if (k.max() > 10 * tol || dual_sum > 10 * tol) ++violations;
  }
};

KktLog g_kkt;

Outcome ac1() {
  const int ms[] = {6, 12, 18, 24, 30, 36, 42, 48, 54, 60, 63};
  const double table[] = {0.3917, 0.2623, 0.2014, 0.1627, 0.1341, 0.1111,
                          0.0912, 0.0727, 0.0542, 0.0325, 0.0159};
  double worst = 0.0;
  for (int k = 0; k < 11; ++k) worst = std::max(worst, std::abs(welch_bound(ms[k], 64) - table[k]));
  return {worst <= 1e-4, fmt("max |WB - table| = %.2e over 11 rows", worst)};
}

conic::SolverSettings table_solver() {
  conic::SolverSettings s;
  s.gap_tol = 1e-6;
  s.feas_tol = 1e-6;
  return s;
}

Outcome ac2() {
  TableConfig c;
  c.m_list = {12, 18, 24};
  c.M = 64;
  c.trials = 20;
  c.seed = 2024;
  c.variant = Pipeline::kGPhi;
  c.solver = table_solver();
  const std::vector<TableRow> rows = coherence_table(c);
  const double ref[3][2] = {{0.8454, 0.7709}, {0.7407, 0.5071}, {0.6646, 0.3629}};
  bool ok = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const TableRow& r = rows[k];
    ok = ok && std::abs(r.mu_phi - ref[k][0]) <= 0.05 && std::abs(r.mu_variant - ref[k][1]) <= 0.05 &&
         r.solver_failures == 0;
    detail += fmt("m=%ld: %.4f->%.4f (table %.4f->%.4f, failures %ld)%s", static_cast<long>(r.m), r.mu_phi,
                  r.mu_variant, ref[k][0], ref[k][1], static_cast<long>(r.solver_failures), k < 2 ? "; " : "");
  }
  return {ok, detail};
}

Outcome ac3() {
  std::mt19937_64 rng(33);
  Index bad_worse = 0, bad_welch = 0, bad_verify = 0, not_optimal = 0;
  double worst_gain = -1.0;
  const conic::SolverSettings st;
  for (int t = 0; t < 500; ++t) {
    const Index m = std::uniform_int_distribution<Index>(2, 8)(rng);
    const Index M = std::uniform_int_distribution<Index>(m + 1, 16)(rng);
    const Frame f = random_gaussian_frame(m, M, rng());
    const PreconditionResult r = solve_coherence(f, st);
    g_kkt.record(f, r, st.gap_tol);
    if (r.status != conic::Status::kOptimal) ++not_optimal;
    const double mu = coherence(f).value;
    worst_gain = std::max(worst_gain, r.verified_coherence - mu);
    if (r.verified_coherence > mu + 1e-5) ++bad_worse;
    if (r.q < welch_bound(m, M) - 1e-6) ++bad_welch;
    if (std::abs(r.q - r.verified_coherence) > 1e-5) ++bad_verify;
  }
  // Solver status is reported but not part of the criterion; the three
  // properties are checked on whatever iterate the solver returned.
  return {bad_worse + bad_welch + bad_verify == 0,
          fmt("500 frames: worse %ld, below Welch %ld, |q-mu(GPhi)|>1e-5 %ld, non-optimal %ld, max mu(GPhi)-mu(Phi) %.2e",
              static_cast<long>(bad_worse), static_cast<long>(bad_welch), static_cast<long>(bad_verify),
              static_cast<long>(not_optimal), worst_gain)};
}

Outcome ac4() {
  const conic::SolverSettings st;
  const Frame mb = frames::mercedes_benz();
  const PreconditionResult a = solve_coherence(mb, st);
  g_kkt.record(mb, a, st.gap_tol);
  const Frame sp = frames::sign_pattern_3x4();
  const PreconditionResult b = solve_coherence(sp, st);
  g_kkt.record(sp, b, st.gap_tol);
  const PreconditionResult d = diagonal_lp(sp, st);
  DenseMatrix witness = DenseMatrix::Zero(3, 3);
  witness.diagonal() << 4.0 / 3.0, 2.0 / 3.0, 4.0 / 3.0;
  const double witness_mu = coherence(Frame(witness.llt().matrixU() * sp.matrix())).value;
  const double e_mb = std::abs(a.q - 0.5);
  const double e_sp = std::abs(b.q - 1.0 / 3.0);
  const double e_lp = std::abs(d.q - 1.0 / 3.0);
  const double e_x = std::max((d.x - witness).cwiseAbs().maxCoeff(), (b.x - witness).cwiseAbs().maxCoeff());
  const double e_w = std::abs(witness_mu - 1.0 / 3.0);
  const bool ok = e_mb <= 1e-5 && e_sp <= 1e-5 && e_lp <= 1e-5 && e_x <= 1e-5 && e_w <= 1e-12;
  return {ok, fmt("MB |q-1/2| %.1e; sign pattern SDP |q-1/3| %.1e, LP |q-1/3| %.1e, max |X - diag(4/3,2/3,4/3)| (SDP, LP) %.1e, "
                  "mu at witness %.6f",
                  e_mb, e_sp, e_lp, e_x, witness_mu)};
}

Outcome ac5() {
  std::mt19937_64 rng(55);
  const conic::SolverSettings st;
  Index agree = 0, improved = 0;
  std::string first_miss;
  for (int t = 0; t < 200; ++t) {
    const Index m = std::uniform_int_distribution<Index>(2, 5)(rng);
    const Index M = std::uniform_int_distribution<Index>(m + 1, 10)(rng);
    const Frame f = random_gaussian_frame(m, M, rng());
    const PreconditionResult r = solve_coherence(f, st);
    g_kkt.record(f, r, st.gap_tol);
    const bool strict = r.verified_coherence < coherence(f).value - 1e-4;
    const CertificateResult c = certify(f, kActiveTol, st);
    const bool says_improvable = c.verdict == Verdict::kInfeasible;
    improved += strict;
    if (strict == says_improvable) {
      ++agree;
    } else if (first_miss.empty()) {
      first_miss = fmt(" first disagreement at trial %d (%ldx%ld, violation %.2e)", t, static_cast<long>(m),
                       static_cast<long>(M), c.violation);
    }
  }
  return {agree == 200, fmt("%ld/200 agree, %ld strictly improved%s", static_cast<long>(agree),
                            static_cast<long>(improved), first_miss.c_str())};
}

Outcome ac6() {
  // Include a few larger problems in addition to the ones solved by AC3-AC5.
  const conic::SolverSettings st;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const Frame f = random_gaussian_frame(12, 64, 600 + s);
    g_kkt.record(f, solve_coherence(f, st), st.gap_tol);
  }
  return {g_kkt.solves > 0 && g_kkt.violations == 0,
          fmt("%ld optimal solves, worst KKT residual %.2f x gap_tol, worst |q + sum z_ii| %.2f x gap_tol",
              static_cast<long>(g_kkt.solves), g_kkt.worst, g_kkt.worst_dual_sum)};
}

Outcome ac7() {
  double worst_defect = 0.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Index m = 2 + static_cast<Index>(s % 10);
    const Frame f = random_gaussian_frame(m, m + 3 + static_cast<Index>(s % 7), 700 + s);
    const DenseMatrix g = testing::random_matrix(static_cast<int>(m), static_cast<int>(m), 900 + s);
    const TightPreconditioner t = compose_tight_preconditioner(g, f);
    const double M = static_cast<double>(f.size());
    const DenseMatrix gram = t.frame.matrix() * t.frame.matrix().transpose();
    worst_defect = std::max(worst_defect, (gram - (M / m) * DenseMatrix::Identity(m, m)).norm());
  }
  TableConfig c;
  c.m_list = {24};
  c.M = 64;
  c.trials = 20;
  c.seed = 2024;
  c.variant = Pipeline::kG1Phi;
  c.solver = table_solver();
  const TableRow r = coherence_table(c).front();
  const bool ok = worst_defect <= 1e-7 && std::abs(r.mu_variant - 0.6167) <= 0.05 && r.solver_failures == 0;
  return {ok, fmt("max tight defect %.2e over 50 frames; m=24 mean mu(G1Phi) %.4f (table 0.6167), failures %ld",
                  worst_defect, r.mu_variant, static_cast<long>(r.solver_failures))};
}

Outcome ac8() {
  PhaseConfig c;
  c.M = 16;
  c.trials = 50;
  c.seed = 88;
  c.decoder = Decoder::kBp;
  c.pipeline = Pipeline::kPhi;
  const PhaseDiagram base = phase_diagram(c);
  bool ok = true;
  std::string detail;
  for (Pipeline p : {Pipeline::kGPhi, Pipeline::kG1Phi}) {
    c.pipeline = p;
    const PhaseDiagram d = phase_diagram(c);
    std::size_t dominated = 0;
    for (std::size_t k = 0; k < d.curve.size(); ++k) dominated += d.curve[k] >= base.curve[k];
    const double frac = static_cast<double>(dominated) / static_cast<double>(d.curve.size());
    ok = ok && frac >= 0.8 && d.solver_failures == 0;
    detail += fmt("%s >= phi at %zu/%zu m (failures %ld); ", std::string(to_string(p)).c_str(), dominated,
                  d.curve.size(), static_cast<long>(d.solver_failures));
  }
  detail += "M=16, 50 trials, BP";
  return {ok, detail};
}

Outcome ac9() {
  const conic::SolverSettings st;
  const Frame f = random_gaussian_frame(16, 32, 99);
  const SweepRecord r = condition_sweep(f, 1.0, t1_range(1.0, 5.0, 0.5), true, st);
  double worst_rise = 0.0;
  for (std::size_t k = 1; k < r.q.size(); ++k) worst_rise = std::max(worst_rise, r.q[k] - r.q[k - 1]);
  bool all_optimal = true;
  for (auto s : r.status) all_optimal = all_optimal && s == conic::Status::kOptimal;
  const double start = std::abs(r.q.front() - r.mu);
  const double plateau = std::abs(r.q.back() - r.unconstrained_q);
  const bool ok = all_optimal && worst_rise <= 2 * st.gap_tol && start <= 1e-5 && plateau <= 1e-5;
  return {ok, fmt("q(1)=%.6f mu=%.6f, q(5)=%.6f unconstrained %.6f, max rise %.1e, all optimal %d", r.q.front(),
                  r.mu, r.q.back(), r.unconstrained_q, worst_rise, all_optimal)};
}

DenseMatrix identity_hadamard(int m) {
  DenseMatrix h = DenseMatrix::Ones(1, 1);
  while (h.rows() < m) {
    const Index n = h.rows();
    DenseMatrix next(2 * n, 2 * n);
    next << h, h, h, -h;
    h = next;
  }
  DenseMatrix a(m, 2 * m);
  a << DenseMatrix::Identity(m, m), h / std::sqrt(static_cast<double>(m));
  return a;
}

Outcome ac10() {
  std::mt19937_64 rng(1010);
  Index omp_ok = 0, bp_ok = 0, instances = 0;
  double worst_invariance = 0.0;
  std::set<Index> ks;
  for (int t = 0; t < 100; ++t) {
    DenseMatrix a;
    if (t % 2 == 0) {
      // Orthonormal pair with coherence 1/8, columns in random order.
      a = identity_hadamard(64);
      std::vector<Index> perm(128);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      DenseMatrix b(64, 128);
      for (Index j = 0; j < 128; ++j) b.col(j) = a.col(perm[j]);
      a = b;
    } else {
      a = random_gaussian_frame(256, 300, rng()).matrix();
    }
    const double bound = recovery_bound(coherence(Frame(a)).value);
    const Index k_max = static_cast<Index>(std::ceil(bound)) - 1;
    if (k_max < 1) continue;
    const Index k = std::uniform_int_distribution<Index>(1, k_max)(rng);
    ks.insert(k);
    const Vector x = planted_signal(a.cols(), k, rng());
    const Vector y = a * x;
    ++instances;
    omp_ok += recovered(omp(a, y, a.rows()).estimate, x);
    const Vector bp = basis_pursuit(a, y).estimate;
    bp_ok += recovered(bp, x);
    const Index m = a.rows();
    DenseMatrix s = DenseMatrix::Zero(m, m);
    s.diagonal() = Vector::LinSpaced(m, 1.0, 3.0);
    const DenseMatrix g = testing::random_orthogonal(static_cast<int>(m), 77 + t) * s *
                          testing::random_orthogonal(static_cast<int>(m), 177 + t);
    const Vector bp_g = basis_pursuit(g * a, g * y).estimate;
    worst_invariance = std::max(worst_invariance, (bp - bp_g).norm());
  }
  const bool ok = instances == 100 && omp_ok == instances && bp_ok == instances && worst_invariance <= 1e-5;
  return {ok, fmt("%ld instances (k from %ld to %ld): OMP %ld, BP %ld exact; max |BP(Phi) - BP(GPhi)| %.1e",
                  static_cast<long>(instances), static_cast<long>(*ks.begin()), static_cast<long>(*ks.rbegin()),
                  static_cast<long>(omp_ok), static_cast<long>(bp_ok), worst_invariance)};
}

}  // namespace
}  // namespace cohere

int main(int argc, char** argv) {
  using namespace cohere;
  set_warning_sink([](std::string_view) {});
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
      {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}, {"AC10", ac10}};
  std::set<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, fn] : criteria) {
    if (!wanted.empty() && !wanted.count(name)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s (%.1fs): %s\n", name.c_str(), o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
