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

#include "cohere/conic.hpp"
#include "cohere/precondition.hpp"

namespace cohere {

// Linear system in r_ii (free), r_ij >= 0 on D+ and r_ji >= 0 on D-:
//   sum r_ii phi_i phi_i^T + sum_{D+} r_ij phi'_ij - sum_{D-} r_ji phi'_ij = 0,
//   sum r_ij + sum r_ji = 1.
struct CertificateSystem {
  Index m = 0;
  Index M = 0;
  ActiveSets sets;
  DenseMatrix diag_coeffs;    // svec(phi_i phi_i^T) as columns, svec_dim(m) x M
  DenseMatrix active_coeffs;  // +-svec(phi'_ij) as columns, one per active pair
  // Orthonormal basis of the complement of range(diag_coeffs). The free r_ii
  // can absorb any component inside that range, so only the projection of the
  // active part onto this basis has to vanish.
  DenseMatrix complement;
};

CertificateSystem certificate_system(const Frame& phi, const ActiveSets& sets);

enum class Verdict { kFeasible, kInfeasible };
std::string_view to_string(Verdict v);

inline constexpr double kCertificateTol = 1e-7;

struct CertificateResult {
  Verdict verdict = Verdict::kInfeasible;
  double violation = 0.0;  // minimized max-abs residual of the matrix equation
  Vector r_diag;
  Vector r_active;         // aligned with sets.plus followed by sets.minus
  ActiveSets sets;
  double mu = 0.0;         // level at which the sets were taken
  conic::Status status = conic::Status::kOptimal;
  int iterations = 0;
};

CertificateResult certificate_feasibility(const Frame& phi, const ActiveSets& sets,
                                          const conic::SolverSettings& settings = {});

// Certificate at (I, mu(Phi)). Feasible: no preconditioner strictly lowers
// coherence. Infeasible: some preconditioner does.
CertificateResult certify(const Frame& phi, double tau = kActiveTol,
                          const conic::SolverSettings& settings = {});

}  // namespace cohere
