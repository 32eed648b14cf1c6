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

#include "cohere/numerics.hpp"

#include <cmath>
#include <string>

#include "cohere/error.hpp"

namespace cohere::numerics {

void require_finite(const DenseMatrix& a, const char* what) {
  if (a.rows() < 1 || a.cols() < 1) {
    throw Error(ErrorCode::kInvalidShape, std::string(what) + " is empty");
  }
  if (!a.allFinite()) {
    throw Error(ErrorCode::kNonFinite, std::string(what) + " has NaN/Inf entries");
  }
}

bool is_symmetric(const DenseMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(a.norm(), kNormFloor);
  return (a - a.transpose()).norm() <= rel_tol * scale;
}

DenseMatrix cholesky(const DenseMatrix& a) {
  require_finite(a, "cholesky input");
  if (!is_symmetric(a)) {
    throw Error(ErrorCode::kNotSymmetric, "cholesky input is not symmetric");
  }
  const Index n = a.rows();
  const double floor = 1e-14 * std::max(a.norm(), kNormFloor);
  // Plain right-looking factorization so the pivot test is explicit.
  DenseMatrix l = DenseMatrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double d = a(j, j) - l.row(j).head(j).squaredNorm();
    if (!(d > floor)) {
      throw Error(ErrorCode::kNotPositiveDefinite,
                  "pivot " + std::to_string(j) + " is " + std::to_string(d));
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i) {
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
    }
  }
  return l;
}

SymEig sym_eig(const DenseMatrix& a) {
  require_finite(a, "sym_eig input");
  if (!is_symmetric(a)) {
    throw Error(ErrorCode::kNotSymmetric, "sym_eig input is not symmetric");
  }
  const DenseMatrix sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sym);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoConvergence, "symmetric eigensolver did not converge");
  }
  const Index n = a.rows();
  SymEig out{Vector(n), DenseMatrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    out.values(k) = es.eigenvalues()(n - 1 - k);
    out.vectors.col(k) = es.eigenvectors().col(n - 1 - k);
  }
  return out;
}

Svd svd(const DenseMatrix& a) {
  require_finite(a, "svd input");
  Eigen::JacobiSVD<DenseMatrix> js(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (js.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoConvergence, "SVD did not converge");
  }
  return Svd{js.matrixU(), js.singularValues(), js.matrixV()};
}

Vector singular_values(const DenseMatrix& a) {
  require_finite(a, "svd input");
  Eigen::JacobiSVD<DenseMatrix> js(a);
  if (js.info() != Eigen::Success) {
    throw Error(ErrorCode::kNoConvergence, "SVD did not converge");
  }
  return js.singularValues();
}

Index numerical_rank(const DenseMatrix& a, double rel_tol) {
  const Vector s = singular_values(a);
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k) {
    if (s(k) > rel_tol * s(0)) ++r;
  }
  return r;
}

Vector least_squares(const DenseMatrix& a, const Vector& b) {
  require_finite(a, "least_squares matrix");
  if (b.size() != a.rows()) {
    throw Error(ErrorCode::kDimensionMismatch, "least_squares rhs length mismatch");
  }
  if (a.cols() > a.rows()) {
    throw Error(ErrorCode::kRankDeficient, "least_squares: more columns than rows");
  }
  const Vector s = singular_values(a);
  if (s(0) <= 0.0 || s(s.size() - 1) < 1e-12 * s(0)) {
    throw Error(ErrorCode::kRankDeficient, "least_squares matrix is rank deficient");
  }
  Eigen::HouseholderQR<DenseMatrix> qr(a);
  Vector x = qr.solve(b);
  // One step of refinement against the normal equations residual.
  const Vector r = b - a * x;
  x += qr.solve(r);
  return x;
}

DenseMatrix range_complement(const DenseMatrix& a, double rel_tol) {
  const Index n = a.rows();
  if (a.cols() == 0) return DenseMatrix::Identity(n, n);
  Eigen::JacobiSVD<DenseMatrix> js(a, Eigen::ComputeFullU);
  const Vector& s = js.singularValues();
  Index r = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    for (Index k = 0; k < s.size(); ++k) {
      if (s(k) > rel_tol * s(0)) ++r;
    }
  }
  return js.matrixU().rightCols(n - r);
}

}  // namespace cohere::numerics
