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

#include "cohere/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>

#include "cohere/error.hpp"
#include "cohere/precondition.hpp"
#include "cohere/seed.hpp"

namespace cohere {

namespace {

enum Stream : std::uint64_t { kFrameStream = 1, kSignalStream = 2 };

// A: the dictionary the decoder sees; g: the map applied to measurements.
struct Prepared {
  DenseMatrix a;
  DenseMatrix g;
  bool solver_ok = true;
};

Prepared prepare(const Frame& phi, Pipeline p, const conic::SolverSettings& st) {
  Prepared out;
  if (p == Pipeline::kPhi) {
    out.a = phi.matrix();
    out.g = DenseMatrix::Identity(phi.dim(), phi.dim());
    return out;
  }
  const PreconditionResult r = solve_coherence(phi, st);
  out.solver_ok = r.status == conic::Status::kOptimal;
  if (p == Pipeline::kGPhi) {
    out.g = r.g;
    out.a = r.g * phi.matrix();
  } else {
    TightPreconditioner t = compose_tight_preconditioner(r.g, phi);
    out.g = std::move(t.g1);
    out.a = t.frame.matrix();
  }
  return out;
}

}  // namespace

std::string_view to_string(Pipeline p) {
  switch (p) {
    case Pipeline::kPhi: return "phi";
    case Pipeline::kGPhi: return "gphi";
    case Pipeline::kG1Phi: return "g1phi";
  }
  return "phi";
}

Pipeline parse_pipeline(std::string_view s) {
  if (s == "phi") return Pipeline::kPhi;
  if (s == "gphi") return Pipeline::kGPhi;
  if (s == "g1phi") return Pipeline::kG1Phi;
  throw Error(ErrorCode::kInvalidArgument, "unknown pipeline '" + std::string(s) + "'");
}

Decoder parse_decoder(std::string_view s) {
  if (s == "omp") return Decoder::kOmp;
  if (s == "bp") return Decoder::kBp;
  throw Error(ErrorCode::kInvalidArgument, "unknown decoder '" + std::string(s) + "'");
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

std::uint64_t frame_seed(std::uint64_t seed, Index m, Index trial) {
  return derive_seed(seed, {kFrameStream, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(trial)});
}

std::vector<TableRow> coherence_table(const TableConfig& config) {
  if (config.trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  for (Index m : config.m_list) {
    if (m < 1 || m > config.M) throw Error(ErrorCode::kInvalidShape, "table needs 1 <= m <= M");
  }
  struct Cell {
    double mu_phi = 0.0;
    double mu_variant = 0.0;
    double q = 0.0;
    bool ok = true;
  };
  const std::size_t nm = config.m_list.size();
  const std::size_t nt = static_cast<std::size_t>(config.trials);
  std::vector<Cell> cells(nm * nt);
  parallel_for(cells.size(), config.threads, [&](std::size_t idx) {
    const Index m = config.m_list[idx / nt];
    const Index trial = static_cast<Index>(idx % nt);
    const Frame phi = random_gaussian_frame(m, config.M, frame_seed(config.seed, m, trial));
    Cell& c = cells[idx];
    c.mu_phi = coherence(phi).value;
    if (config.variant == Pipeline::kPhi) {
      c.mu_variant = c.mu_phi;
      c.q = c.mu_phi;
      return;
    }
    const PreconditionResult r = solve_coherence(phi, config.solver);
    c.ok = r.status == conic::Status::kOptimal;
    c.q = r.q;
    if (config.variant == Pipeline::kGPhi) {
      c.mu_variant = r.verified_coherence;
    } else {
      c.mu_variant = coherence(compose_tight_preconditioner(r.g, phi).frame).value;
    }
  });
  std::vector<TableRow> rows;
  for (std::size_t k = 0; k < nm; ++k) {
    TableRow row;
    row.m = config.m_list[k];
    row.trials = config.trials;
    row.welch_bound = welch_bound(row.m, config.M);
    for (std::size_t t = 0; t < nt; ++t) {
      const Cell& c = cells[k * nt + t];
      row.mu_phi += c.mu_phi;
      row.mu_variant += c.mu_variant;
      row.q_mean += c.q;
      row.solver_failures += c.ok ? 0 : 1;
    }
    row.mu_phi /= static_cast<double>(nt);
    row.mu_variant /= static_cast<double>(nt);
    row.q_mean /= static_cast<double>(nt);
    rows.push_back(row);
  }
  return rows;
}

Vector planted_signal(Index n, Index s, std::uint64_t seed) {
  if (s < 0 || s > n) throw Error(ErrorCode::kInvalidArgument, "sparsity out of range");
  std::mt19937_64 rng(seed);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  // Partial Fisher-Yates: the first s entries form a uniform random subset.
  for (Index k = 0; k < s; ++k) {
    std::uniform_int_distribution<Index> pick(k, n - 1);
    std::swap(perm[k], perm[pick(rng)]);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector x = Vector::Zero(n);
  for (Index k = 0; k < s; ++k) x(perm[k]) = normal(rng);
  return x;
}

PhaseDiagram phase_diagram(const PhaseConfig& config) {
  if (config.trials < 1) throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  PhaseDiagram d;
  d.M = config.M;
  d.trials = config.trials;
  d.seed = config.seed;
  d.pipeline = config.pipeline;
  d.decoder = config.decoder;
  d.m_grid = config.m_grid;
  if (d.m_grid.empty()) {
    for (Index m = 2; m < config.M; ++m) d.m_grid.push_back(m);
  }
  for (Index m : d.m_grid) {
    if (m < 1 || m > config.M) throw Error(ErrorCode::kInvalidShape, "phase grid needs 1 <= m <= M");
  }
  auto s_max = [&](Index m) {
    return config.max_sparsity > 0 ? std::min(m, config.max_sparsity) : m;
  };
  const std::size_t nm = d.m_grid.size();
  const std::size_t nt = static_cast<std::size_t>(config.trials);
  std::vector<std::vector<int>> hits(nm * nt);
  std::vector<char> failed(nm * nt, 0);
  parallel_for(nm * nt, config.threads, [&](std::size_t idx) {
    const Index m = d.m_grid[idx / nt];
    const Index trial = static_cast<Index>(idx % nt);
    const Frame phi = random_gaussian_frame(m, config.M, frame_seed(config.seed, m, trial));
    const Prepared prep = prepare(phi, config.pipeline, config.solver);
    failed[idx] = prep.solver_ok ? 0 : 1;
    auto& h = hits[idx];
    h.assign(static_cast<std::size_t>(s_max(m)), 0);
    for (Index s = 1; s <= s_max(m); ++s) {
      const Vector x = planted_signal(
          config.M, s,
          derive_seed(config.seed, {kSignalStream, static_cast<std::uint64_t>(m),
                                    static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(trial)}));
      const Vector y = phi.matrix() * x;
      const RecoveryResult r = recover(config.decoder, prep.a, prep.g * y);
      h[s - 1] = recovered(r.estimate, x) ? 1 : 0;
    }
  });
  for (std::size_t k = 0; k < nm; ++k) {
    const Index top = s_max(d.m_grid[k]);
    std::vector<double> rate(static_cast<std::size_t>(top), 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
      for (Index s = 0; s < top; ++s) rate[s] += hits[k * nt + t][s];
      d.solver_failures += failed[k * nt + t];
    }
    Index curve = 0;
    for (Index s = 0; s < top; ++s) {
      rate[s] /= static_cast<double>(nt);
      if (rate[s] >= 0.5) curve = s + 1;
    }
    d.success_rate.push_back(std::move(rate));
    d.curve.push_back(curve);
  }
  return d;
}

std::vector<double> t1_range(double t2, double t1_max, double step) {
  if (!(step > 0.0) || t1_max < t2) throw Error(ErrorCode::kInvalidBounds, "need step > 0 and t1_max >= t2");
  std::vector<double> grid;
  for (Index k = 0;; ++k) {
    const double t = t2 + static_cast<double>(k) * step;
    if (t > t1_max + 1e-12) break;
    grid.push_back(t);
  }
  return grid;
}

SweepRecord condition_sweep(const Frame& phi, double t2, const std::vector<double>& t1_grid,
                            bool scale_free, const conic::SolverSettings& settings) {
  if (t1_grid.empty()) throw Error(ErrorCode::kInvalidArgument, "empty t1 grid");
  for (std::size_t k = 0; k < t1_grid.size(); ++k) {
    if (t1_grid[k] < t2 || (k > 0 && t1_grid[k] <= t1_grid[k - 1])) {
      throw Error(ErrorCode::kInvalidBounds, "t1 grid must be ascending and >= t2");
    }
  }
  SweepRecord rec;
  rec.t1_grid = t1_grid;
  rec.t2 = t2;
  rec.scale_free = scale_free;
  rec.mu = coherence(phi).value;
  rec.unconstrained_q = solve_coherence(phi, settings).q;
  for (double t1 : t1_grid) {
    const PreconditionResult r = solve_bounded(phi, t1, t2, scale_free, settings);
    rec.q.push_back(r.q);
    rec.kappa.push_back(r.kappa);
    rec.status.push_back(r.status);
  }
  return rec;
}

namespace {

void put(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  os << buf;
}

}  // namespace

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows, Pipeline variant) {
  os << "m,trials,mu_phi,mu_" << to_string(variant) << ",welch_bound,q_mean,solver_failures\n";
  for (const TableRow& r : rows) {
    os << r.m << ',' << r.trials << ',';
    put(os, r.mu_phi);
    os << ',';
    put(os, r.mu_variant);
    os << ',';
    put(os, r.welch_bound);
    os << ',';
    put(os, r.q_mean);
    os << ',' << r.solver_failures << '\n';
  }
}

void write_phase_csv(std::ostream& os, const PhaseDiagram& d) {
  os << "pipeline,decoder,M,m,s,success_rate\n";
  for (std::size_t k = 0; k < d.m_grid.size(); ++k) {
    for (std::size_t s = 0; s < d.success_rate[k].size(); ++s) {
      os << to_string(d.pipeline) << ',' << to_string(d.decoder) << ',' << d.M << ','
         << d.m_grid[k] << ',' << s + 1 << ',';
      put(os, d.success_rate[k][s]);
      os << '\n';
    }
  }
}

void write_curve_csv(std::ostream& os, const std::vector<PhaseDiagram>& ds) {
  if (ds.empty()) return;
  os << "m";
  for (const auto& d : ds) os << ",curve_" << to_string(d.pipeline) << '_' << to_string(d.decoder);
  os << '\n';
  for (std::size_t k = 0; k < ds.front().m_grid.size(); ++k) {
    os << ds.front().m_grid[k];
    for (const auto& d : ds) os << ',' << (k < d.curve.size() ? d.curve[k] : 0);
    os << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const SweepRecord& r) {
  os << "t1,t2,q,kappa,status\n";
  for (std::size_t k = 0; k < r.t1_grid.size(); ++k) {
    put(os, r.t1_grid[k]);
    os << ',';
    put(os, r.t2);
    os << ',';
    put(os, r.q[k]);
    os << ',';
    put(os, r.kappa[k]);
    os << ',' << conic::to_string(r.status[k]) << '\n';
  }
}

void write_phase_gnuplot(std::ostream& os, const std::string& curve_csv,
                         const std::vector<PhaseDiagram>& ds) {
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead top left\n"
     << "set xlabel 'm'\nset ylabel 'sparsity at 50% success'\n";
  if (!ds.empty()) os << "set title 'M = " << ds.front().M << "'\n";
  os << "plot ";
  for (std::size_t k = 0; k < ds.size(); ++k) {
    if (k > 0) os << ", \\n     ";
    os << "'" << curve_csv << "' using 1:" << k + 2 << " with linespoints";
  }
  os << '\n';
}

void write_sweep_gnuplot(std::ostream& os, const std::string& sweep_csv) {
  os << "set datafile separator ','\n"
     << "set key autotitle columnhead\n"
     << "set xlabel 't1'\nset ylabel 'coherence'\nset y2label 'kappa(G)'\nset y2tics\n"
     << "plot '" << sweep_csv << "' using 1:3 with linespoints, '' using 1:4 axes x1y2 with linespoints\n";
}

}  // namespace cohere
