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

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "cohere/conic.hpp"
#include "cohere/frames.hpp"
#include "cohere/recovery.hpp"

namespace cohere {

enum class Pipeline { kPhi, kGPhi, kG1Phi };
std::string_view to_string(Pipeline p);
Pipeline parse_pipeline(std::string_view s);
Decoder parse_decoder(std::string_view s);

// Runs body(0..count-1) on up to threads workers (0: hardware concurrency).
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

// Seed of the k-th Gaussian frame drawn at dimension m.
std::uint64_t frame_seed(std::uint64_t seed, Index m, Index trial);

struct TableConfig {
  std::vector<Index> m_list;
  Index M = 64;
  Index trials = 20;
  std::uint64_t seed = 1;
  Pipeline variant = Pipeline::kGPhi;
  conic::SolverSettings solver{1e-6, 1e-6, 200, 0.98, false};
  unsigned threads = 0;
};

struct TableRow {
  Index m = 0;
  Index trials = 0;
  double mu_phi = 0.0;      // mean mu(Phi)
  double mu_variant = 0.0;  // mean coherence of the chosen variant
  double welch_bound = 0.0;
  double q_mean = 0.0;      // mean optimal value of the coherence program
  Index solver_failures = 0;
};

std::vector<TableRow> coherence_table(const TableConfig& config);

struct PhaseConfig {
  Index M = 32;
  std::vector<Index> m_grid;  // empty: 2..M-1
  Index trials = 50;
  std::uint64_t seed = 1;
  Pipeline pipeline = Pipeline::kPhi;
  Decoder decoder = Decoder::kBp;
  Index max_sparsity = 0;  // 0: up to m
  conic::SolverSettings solver{1e-6, 1e-6, 200, 0.98, false};
  unsigned threads = 0;
};

struct PhaseDiagram {
  Index M = 0;
  std::vector<Index> m_grid;
  Index trials = 0;
  std::uint64_t seed = 0;
  Pipeline pipeline = Pipeline::kPhi;
  Decoder decoder = Decoder::kBp;
  // success_rate[k][s - 1] for m = m_grid[k], s = 1..sparsity_max(k).
  std::vector<std::vector<double>> success_rate;
  // Largest s with success rate >= 0.5 (0 when none).
  std::vector<Index> curve;
  Index solver_failures = 0;
};

PhaseDiagram phase_diagram(const PhaseConfig& config);

// Draws an s-sparse vector of length n with Gaussian entries on a uniform support.
Vector planted_signal(Index n, Index s, std::uint64_t seed);

struct SweepRecord {
  std::vector<double> t1_grid;
  double t2 = 1.0;
  bool scale_free = true;
  double mu = 0.0;               // coherence of the input frame
  double unconstrained_q = 0.0;  // optimum without eigenvalue bounds
  std::vector<double> q;
  std::vector<double> kappa;
  std::vector<conic::Status> status;
};

std::vector<double> t1_range(double t2, double t1_max, double step);

SweepRecord condition_sweep(const Frame& phi, double t2, const std::vector<double>& t1_grid,
                            bool scale_free = true, const conic::SolverSettings& settings = {});

void write_table_csv(std::ostream& os, const std::vector<TableRow>& rows, Pipeline variant);
void write_phase_csv(std::ostream& os, const PhaseDiagram& d);
void write_curve_csv(std::ostream& os, const std::vector<PhaseDiagram>& ds);
void write_sweep_csv(std::ostream& os, const SweepRecord& r);
// gnuplot script that draws the curves stored in curve_csv.
void write_phase_gnuplot(std::ostream& os, const std::string& curve_csv,
                         const std::vector<PhaseDiagram>& ds);
void write_sweep_gnuplot(std::ostream& os, const std::string& sweep_csv);

}  // namespace cohere
