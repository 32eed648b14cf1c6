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

#include "cohere/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "cohere/error.hpp"

#ifndef COHERE_VERSION_STRING
#define COHERE_VERSION_STRING "unknown"
#endif

namespace cohere::io {

namespace {

[[noreturn]] void parse_error(Index line, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + what);
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r") == std::string::npos;
}

void check_finite(const Json& j, const std::string& where) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) {
    throw Error(ErrorCode::kInvalidArgument, "non-finite value at " + where);
  }
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) check_finite(it.value(), where + "." + it.key());
  } else if (j.is_array()) {
    for (std::size_t k = 0; k < j.size(); ++k) check_finite(j[k], where + "[" + std::to_string(k) + "]");
  }
}

Json pairs_json(const std::vector<IndexPair>& ps) {
  Json a = Json::array();
  for (const auto& p : ps) a.push_back({p.first, p.second});
  return a;
}

Json vec_json(const Vector& v) {
  Json a = Json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

}  // namespace

DenseMatrix parse_matrix(std::istream& in) {
  std::string line;
  Index line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw Error(ErrorCode::kParseError, "missing header");
  long long rows = 0, cols = 0;
  {
    std::istringstream hs(line);
    std::string extra;
    if (!(hs >> rows >> cols) || (hs >> extra)) parse_error(line_no, "header must be 'rows cols'");
    if (rows < 1 || cols < 1) parse_error(line_no, "matrix dimensions must be positive");
  }
  DenseMatrix a(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "expected " + std::to_string(rows) + " rows, found " + std::to_string(r));
    }
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    Index c = 0;
    while (ls >> tok) {
      if (c >= cols) parse_error(line_no, "more than " + std::to_string(cols) + " entries");
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end != tok.c_str() + tok.size()) parse_error(line_no, "bad number '" + tok + "'");
      if (!std::isfinite(v)) parse_error(line_no, "non-finite entry");
      a(r, c++) = v;
    }
    if (c != cols) {
      parse_error(line_no, "expected " + std::to_string(cols) + " entries, found " + std::to_string(c));
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!blank(line)) parse_error(line_no, "trailing data after the last row");
  }
  return a;
}

void format_matrix(std::ostream& out, const DenseMatrix& a) {
  out << a.rows() << ' ' << a.cols() << '\n';
  char buf[40];
  for (Index r = 0; r < a.rows(); ++r) {
    for (Index c = 0; c < a.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", a(r, c));
      if (c > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

DenseMatrix read_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  try {
    return parse_matrix(in);
  } catch (const Error& e) {
    throw Error(e.code(), path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path);
}

void write_matrix(const std::string& path, const DenseMatrix& a) {
  std::ostringstream os;
  format_matrix(os, a);
  write_text(path, os.str());
}

std::string version_string() { return COHERE_VERSION_STRING; }

Json to_json(const FrameReport& r) {
  return Json{{"coherence", r.coherence},
              {"welch_bound", r.welch_bound},
              {"frame_potential", r.frame_potential},
              {"potential_minimum", r.potential_minimum},
              {"potential_bound_holds", r.potential_bound_holds},
              {"tight_constant", r.tight_constant},
              {"tight_defect", r.tight_defect},
              {"equiangular", r.equiangular},
              {"lower_frame_bound", r.lower_frame_bound},
              {"upper_frame_bound", r.upper_frame_bound},
              {"unit_norm", r.unit_norm}};
}

Json to_json(const ActiveSets& s) {
  return Json{{"plus", pairs_json(s.plus)},
              {"minus", pairs_json(s.minus)},
              {"plus_size", s.plus.size()},
              {"minus_size", s.minus.size()}};
}

Json to_json(const PreconditionResult& r) {
  Json j{{"q", r.q},
         {"coherence_before", r.coherence_before},
         {"coherence_after", r.verified_coherence},
         {"welch_bound", r.welch_bound},
         {"kappa", r.kappa},
         {"x_min_eig", r.x_min_eig},
         {"jittered", r.jittered},
         {"near_singular", r.near_singular},
         {"active_sets", to_json(r.active)}};
  if (r.kappa_limit) j["kappa_limit"] = *r.kappa_limit;
  return j;
}

Json to_json(const CertificateResult& r) {
  return Json{{"verdict", to_string(r.verdict)},
              {"improvable", r.verdict == Verdict::kInfeasible},
              {"mu", r.mu},
              {"violation", std::isfinite(r.violation) ? Json(r.violation) : Json(nullptr)},
              {"active_sets", to_json(r.sets)},
              {"r_active", vec_json(r.r_active)}};
}

Json to_json(const RecoveryResult& r) {
  Json support = Json::array();
  for (Index i : r.support) support.push_back(i);
  return Json{{"method", to_string(r.method)},
              {"support", support},
              {"residual_norm", r.residual_norm},
              {"iterations", r.iterations},
              {"converged", r.converged},
              {"estimate", vec_json(r.estimate)}};
}

Json to_json(const std::vector<TableRow>& rows) {
  Json a = Json::array();
  for (const TableRow& r : rows) {
    a.push_back({{"m", r.m},
                 {"trials", r.trials},
                 {"mu_phi", r.mu_phi},
                 {"mu_variant", r.mu_variant},
                 {"welch_bound", r.welch_bound},
                 {"q_mean", r.q_mean},
                 {"solver_failures", r.solver_failures}});
  }
  return a;
}

Json to_json(const PhaseDiagram& d) {
  Json rates = Json::array();
  for (const auto& row : d.success_rate) rates.push_back(row);
  return Json{{"M", d.M},
              {"m_grid", d.m_grid},
              {"trials", d.trials},
              {"pipeline", to_string(d.pipeline)},
              {"decoder", to_string(d.decoder)},
              {"curve", d.curve},
              {"success_rate", rates},
              {"solver_failures", d.solver_failures}};
}

Json to_json(const SweepRecord& r) {
  Json status = Json::array();
  for (auto s : r.status) status.push_back(conic::to_string(s));
  return Json{{"t2", r.t2},
              {"scale_free", r.scale_free},
              {"mu", r.mu},
              {"unconstrained_q", r.unconstrained_q},
              {"t1_grid", r.t1_grid},
              {"q", r.q},
              {"kappa", r.kappa},
              {"status", status}};
}

Json solver_json(conic::Status status, int iterations, double gap) {
  return Json{{"status", conic::to_string(status)}, {"iterations", iterations}, {"gap", gap}};
}

Json make_report(Json config, std::uint64_t seed, Json frame_stats, Json result, Json solver) {
  Json j;
  j["config"] = std::move(config);
  j["seed"] = seed;
  j["frame_stats"] = std::move(frame_stats);
  j["result"] = std::move(result);
  j["solver"] = std::move(solver);
  j["versions"] = Json{{"cohere", version_string()},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                     std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                     std::to_string(EIGEN_MINOR_VERSION)},
                       {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                             std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  check_finite(j, "report");
  return j;
}

void write_report(const std::string& path, const Json& report) {
  check_finite(report, "report");
  write_text(path, report.dump(2) + "\n");
}

}  // namespace cohere::io
