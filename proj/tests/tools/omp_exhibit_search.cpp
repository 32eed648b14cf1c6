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

// Randomized search for an instance where OMP returns different supports on
// (Phi, y) and on (G Phi, G y). Writes phi.mat, g.mat and x.mat into the
// directory given as the first argument.

#include <cmath>
#include <cstdio>
#include <string>

#include "cohere/error.hpp"
#include "cohere/experiments.hpp"
#include "cohere/io.hpp"
#include "cohere/precondition.hpp"
#include "cohere/recovery.hpp"
#include "cohere/seed.hpp"

int main(int argc, char** argv) {
  using namespace cohere;
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s OUTDIR\n", argv[0]);
    return 2;
  }
  const std::string dir = argv[1];
  set_warning_sink([](std::string_view) {});
  for (std::uint64_t trial = 0; trial < 2000; ++trial) {
    const Frame phi = random_gaussian_frame(8, 16, derive_seed(4242, {trial}));
    const PreconditionResult r = solve_coherence(phi);
    if (r.status != conic::Status::kOptimal) continue;
    const double lo = recovery_bound(coherence(phi).value);
    const double hi = recovery_bound(r.verified_coherence);
    // Smallest sparsity not covered by the bound of Phi. At 8 x 16 no integer
    // falls strictly between the two bounds, so the exhibit uses this one.
    const Index k = static_cast<Index>(std::ceil(lo));
    for (std::uint64_t s = 0; s < 20; ++s) {
      const Vector x = planted_signal(16, k, derive_seed(4242, {trial, s}));
      const Vector y = phi.matrix() * x;
      const RecoveryResult a = omp(phi.matrix(), y, k);
      const RecoveryResult b = omp(r.g * phi.matrix(), r.g * y, k);
      if (a.support == b.support) continue;
      io::write_matrix(dir + "/omp_exhibit_phi.mat", phi.matrix());
      io::write_matrix(dir + "/omp_exhibit_g.mat", r.g);
      io::write_matrix(dir + "/omp_exhibit_x.mat", x);
      std::printf("trial %llu signal %llu: k=%ld, bounds %.4f (Phi) %.4f (G Phi)\n",
                  static_cast<unsigned long long>(trial), static_cast<unsigned long long>(s),
                  static_cast<long>(k), lo, hi);
      return 0;
    }
  }
  std::printf("no instance found\n");
  return 1;
}
