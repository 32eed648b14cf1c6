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

#include <string_view>
#include <vector>

#include "cohere/conic.hpp"
#include "cohere/numerics.hpp"

namespace cohere {

enum class Decoder { kOmp, kBp };
std::string_view to_string(Decoder d);

inline constexpr double kSupportTol = 1e-8;

struct RecoveryResult {
  Vector estimate;
  std::vector<Index> support;  // |x_i| > kSupportTol, ascending
  double residual_norm = 0.0;  // ||A x - y||
  int iterations = 0;
  Decoder method = Decoder::kOmp;
  bool converged = true;
  // OMP only: atoms in selection order.
  std::vector<Index> selection;
};

// Greedy pursuit. Stops after k_max atoms or once ||r|| <= res_tol * ||y||.
RecoveryResult omp(const DenseMatrix& a, const Vector& y, Index k_max, double res_tol = 1e-10);

struct BpSettings {
  double tol = 1e-9;
  int max_iter = 200;
};

// min ||x||_1 subject to A x = y, as an LP in the conic solver.
RecoveryResult basis_pursuit(const DenseMatrix& a, const Vector& y, const BpSettings& settings = {});

RecoveryResult recover(Decoder d, const DenseMatrix& a, const Vector& y);

struct NoiseBounds {
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  double kappa = 0.0;
};

// sigma_min(G) ||Phi x - y|| <= ||G Phi x - G y|| <= sigma_max(G) ||Phi x - y||.
NoiseBounds noise_amplification_bounds(const DenseMatrix& g);

// ||x_hat - x|| <= 1e-4 ||x||.
bool recovered(const Vector& estimate, const Vector& truth, double rel_tol = 1e-4);

}  // namespace cohere
