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

#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "cohere/certificate.hpp"
#include "cohere/error.hpp"
#include "cohere/experiments.hpp"
#include "cohere/frames.hpp"
#include "cohere/io.hpp"
#include "cohere/precondition.hpp"
#include "cohere/recovery.hpp"
#include "cohere/seed.hpp"

namespace cohere::cli {

namespace {

using io::Json;

struct Options {
  std::string input;
  Index m = 0;
  Index M = 0;
  std::string m_list;
  std::uint64_t seed = 1;
  Index trials = 20;
  double t1 = 2.0;
  double t2 = 1.0;
  double t1_max = 5.0;
  double t1_step = 0.5;
  bool absolute = false;
  std::string decoder = "bp";
  std::string pipeline = "gphi";
  double tol = 1e-7;
  double gap_tol = 1e-7;
  int max_iter = 200;
  double tau = kActiveTol;
  std::string out;
  std::string report;
  std::string precond;
  std::string measurements;
  Index k = 0;
  Index max_sparsity = 0;
  unsigned threads = 0;
  bool allow_inexact = false;
  bool verbose = false;
};

// Raised when the solver stops short of optimality and --allow-inexact is off.
struct Inexact : std::runtime_error {
  using std::runtime_error::runtime_error;
};

conic::SolverSettings solver_settings(const Options& o) {
  conic::SolverSettings s;
  s.gap_tol = o.gap_tol;
  s.feas_tol = o.tol;
  s.max_iter = o.max_iter;
  s.verbose = o.verbose;
  return s;
}

Frame load_frame(const std::string& path) { return Frame(io::read_matrix(path)); }

Json options_json(const CLI::App& sub) {
  Json j;
  j["command"] = sub.get_name();
  for (const CLI::Option* opt : sub.get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name == "config") continue;
    if (opt->get_type_size() == 0) {
      j[name] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      j[name] = opt->as<std::string>();
    } else if (!opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void check_status(const Options& o, conic::Status s) {
  if (s != conic::Status::kOptimal && !o.allow_inexact) {
    throw Inexact("solver stopped with status " + std::string(conic::to_string(s)) +
                  " (use --allow-inexact to accept)");
  }
}

void emit_report(const Options& o, const Json& report) {
  if (o.report.empty()) return;
  io::write_report(o.report, report);
}

std::vector<Index> parse_list(const std::string& s) {
  std::vector<Index> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    const auto dash = tok.find('-', 1);
    if (dash != std::string::npos) {
      const Index a = std::stol(tok.substr(0, dash));
      const Index b = std::stol(tok.substr(dash + 1));
      for (Index v = a; v <= b; ++v) out.push_back(v);
    } else {
      out.push_back(std::stol(tok));
    }
  }
  return out;
}

int cmd_gen(const Options& o, const CLI::App& sub) {
  if (o.m < 1 || o.M < 1) throw CLI::ValidationError("gen", "--m and --M are required");
  const Frame phi = random_gaussian_frame(o.m, o.M, o.seed);
  if (o.out.empty()) {
    io::format_matrix(std::cout, phi.matrix());
  } else {
    io::write_matrix(o.out, phi.matrix());
  }
  emit_report(o, io::make_report(options_json(sub), o.seed, io::to_json(frame_report(phi)),
                                 Json{{"output", o.out}}, Json(nullptr)));
  return kExitOk;
}

int cmd_analyze(const Options& o, const CLI::App& sub) {
  const Frame phi = load_frame(o.input);
  const FrameReport fr = frame_report(phi);
  const Coherence c = coherence(phi);
  Json result{{"coherence_pair", {c.pair.first, c.pair.second}},
              {"squared_span_dimension", squared_span_dimension(phi)}};
  if (fr.coherence > 0.0) {
    result["recovery_bound"] = recovery_bound(fr.coherence);
  }
  const Json report = io::make_report(options_json(sub), o.seed, io::to_json(fr), result, Json(nullptr));
  emit_report(o, report);
  std::cout << report.dump(2) << '\n';
  return kExitOk;
}

int finish_precondition(const Options& o, const CLI::App& sub, const Frame& phi,
                        const PreconditionResult& r) {
  if (!o.out.empty()) io::write_matrix(o.out, r.g);
  emit_report(o, io::make_report(options_json(sub), o.seed, io::to_json(frame_report(phi)),
                                 io::to_json(r), io::solver_json(r.status, r.iterations, r.gap)));
  std::printf("q* %.10g  coherence %.10g -> %.10g  welch %.10g  kappa(G) %.6g  |D+| %zu  |D-| %zu  %s\n",
              r.q, r.coherence_before, r.verified_coherence, r.welch_bound, r.kappa,
              r.active.plus.size(), r.active.minus.size(),
              std::string(conic::to_string(r.status)).c_str());
  check_status(o, r.status);
  return kExitOk;
}

int cmd_precondition(const Options& o, const CLI::App& sub) {
  const Frame phi = load_frame(o.input);
  if (sub.count("--t1") > 0) {
    return finish_precondition(o, sub, phi, solve_bounded(phi, o.t1, o.t2, !o.absolute, solver_settings(o)));
  }
  return finish_precondition(o, sub, phi, solve_coherence(phi, solver_settings(o)));
}

int cmd_diag_lp(const Options& o, const CLI::App& sub) {
  const Frame phi = load_frame(o.input);
  return finish_precondition(o, sub, phi, diagonal_lp(phi, solver_settings(o)));
}

int cmd_tighten(const Options& o, const CLI::App& sub) {
  const Frame phi = load_frame(o.input);
  DenseMatrix g;
  std::optional<PreconditionResult> pr;
  if (!o.precond.empty()) {
    g = io::read_matrix(o.precond);
  } else {
    pr = solve_coherence(phi, solver_settings(o));
    g = pr->g;
  }
  const TightPreconditioner t = compose_tight_preconditioner(g, phi);
  if (o.out.empty()) {
    io::format_matrix(std::cout, t.frame.matrix());
  } else {
    io::write_matrix(o.out, t.frame.matrix());
  }
  const FrameReport after = frame_report(t.frame);
  Json result{{"coherence_before", coherence(phi).value},
              {"coherence_after", after.coherence},
              {"tight_defect", after.tight_defect},
              {"tight_constant", after.tight_constant}};
  emit_report(o, io::make_report(options_json(sub), o.seed, io::to_json(frame_report(phi)), result,
                                 pr ? io::solver_json(pr->status, pr->iterations, pr->gap) : Json(nullptr)));
  if (pr) check_status(o, pr->status);
  return kExitOk;
}

int cmd_certify(const Options& o, const CLI::App& sub) {
  const Frame phi = load_frame(o.input);
  const CertificateResult c = certify(phi, o.tau, solver_settings(o));
  emit_report(o, io::make_report(options_json(sub), o.seed, io::to_json(frame_report(phi)),
                                 io::to_json(c), io::solver_json(c.status, c.iterations, 0.0)));
  if (c.verdict == Verdict::kFeasible) {
    std::printf("Feasible: no strict improvement (violation %.3g)\n", c.violation);
  } else {
    std::printf("Infeasible: strict improvement possible (violation %.3g)\n", c.violation);
  }
  return kExitOk;
}

int cmd_recover(const Options& o, const CLI::App& sub) {
  const Frame phi = load_frame(o.input);
  const Decoder dec = parse_decoder(o.decoder);
  const Pipeline pipe = parse_pipeline(o.pipeline);
  Vector x_true;
  Vector y;
  if (!o.measurements.empty()) {
    const DenseMatrix ym = io::read_matrix(o.measurements);
    if (ym.cols() != 1 || ym.rows() != phi.dim()) {
      throw Error(ErrorCode::kDimensionMismatch, "measurements must be an m x 1 matrix");
    }
    y = ym.col(0);
  } else {
    if (o.k < 1) throw CLI::ValidationError("recover", "--k or --y is required");
    x_true = planted_signal(phi.size(), o.k, o.seed);
    y = phi.matrix() * x_true;
  }
  DenseMatrix g = DenseMatrix::Identity(phi.dim(), phi.dim());
  DenseMatrix a = phi.matrix();
  Json solver(nullptr);
  if (pipe != Pipeline::kPhi) {
    if (!o.precond.empty()) {
      g = io::read_matrix(o.precond);
    } else {
      const PreconditionResult r = solve_coherence(phi, solver_settings(o));
      check_status(o, r.status);
      solver = io::solver_json(r.status, r.iterations, r.gap);
      g = r.g;
    }
    if (pipe == Pipeline::kG1Phi) g = compose_tight_preconditioner(g, phi).g1;
    a = g * phi.matrix();
  }
  const RecoveryResult r = recover(dec, a, g * y);
  Json result = io::to_json(r);
  if (x_true.size() > 0) {
    result["success"] = recovered(r.estimate, x_true);
    result["relative_error"] = (r.estimate - x_true).norm() / x_true.norm();
  }
  if (!o.out.empty()) io::write_matrix(o.out, r.estimate);
  emit_report(o, io::make_report(options_json(sub), o.seed, io::to_json(frame_report(phi)), result, solver));
  std::printf("%s: support size %zu, residual %.3g", std::string(to_string(dec)).c_str(),
              r.support.size(), r.residual_norm);
  if (x_true.size() > 0) std::printf(", %s", recovered(r.estimate, x_true) ? "recovered" : "failed");
  std::printf("\n");
  return kExitOk;
}

int cmd_phase(const Options& o, const CLI::App& sub) {
  PhaseConfig c;
  c.M = o.M > 0 ? o.M : 32;
  c.m_grid = parse_list(o.m_list);
  c.trials = o.trials;
  c.seed = o.seed;
  c.pipeline = parse_pipeline(o.pipeline);
  c.decoder = parse_decoder(o.decoder);
  c.max_sparsity = o.max_sparsity;
  c.solver = solver_settings(o);
  c.threads = o.threads;
  const PhaseDiagram d = phase_diagram(c);
  const std::string prefix = o.out.empty() ? "phase" : o.out;
  std::ostringstream grid, curve, plot;
  write_phase_csv(grid, d);
  write_curve_csv(curve, {d});
  write_phase_gnuplot(plot, prefix + "_curve.csv", {d});
  io::write_text(prefix + ".csv", grid.str());
  io::write_text(prefix + "_curve.csv", curve.str());
  io::write_text(prefix + ".gp", plot.str());
  Json result = io::to_json(d);
  result["csv"] = prefix + ".csv";
  result["curve_csv"] = prefix + "_curve.csv";
  result["gnuplot"] = prefix + ".gp";
  emit_report(o, io::make_report(options_json(sub), o.seed, Json(nullptr), result, Json(nullptr)));
  std::cout << curve.str();
  if (d.solver_failures > 0 && !o.allow_inexact) {
    throw Inexact(std::to_string(d.solver_failures) + " preconditioner solves were not optimal");
  }
  return kExitOk;
}

int cmd_sweep(const Options& o, const CLI::App& sub) {
  Frame phi = o.input.empty() ? random_gaussian_frame(o.m > 0 ? o.m : 16, o.M > 0 ? o.M : 32, o.seed)
                              : load_frame(o.input);
  if (!phi.unit_norm()) phi = phi.normalized();
  const std::vector<double> grid = t1_range(o.t2, o.t1_max, o.t1_step);
  const SweepRecord r = condition_sweep(phi, o.t2, grid, !o.absolute, solver_settings(o));
  const std::string prefix = o.out.empty() ? "sweep" : o.out;
  std::ostringstream csv, plot;
  write_sweep_csv(csv, r);
  write_sweep_gnuplot(plot, prefix + ".csv");
  io::write_text(prefix + ".csv", csv.str());
  io::write_text(prefix + ".gp", plot.str());
  Json result = io::to_json(r);
  result["csv"] = prefix + ".csv";
  emit_report(o, io::make_report(options_json(sub), o.seed, io::to_json(frame_report(phi)), result,
                                 Json(nullptr)));
  std::cout << csv.str();
  for (auto s : r.status) check_status(o, s);
  return kExitOk;
}

int cmd_table(const Options& o, const CLI::App& sub) {
  TableConfig c;
  c.m_list = o.m_list.empty() ? std::vector<Index>{12, 18, 24} : parse_list(o.m_list);
  c.M = o.M > 0 ? o.M : 64;
  c.trials = o.trials;
  c.seed = o.seed;
  c.variant = parse_pipeline(o.pipeline);
  c.solver = solver_settings(o);
  c.threads = o.threads;
  const std::vector<TableRow> rows = coherence_table(c);
  std::ostringstream csv;
  write_table_csv(csv, rows, c.variant);
  if (!o.out.empty()) io::write_text(o.out, csv.str());
  Json result{{"rows", io::to_json(rows)}, {"frame_columns", c.M}};
  if (!o.out.empty()) result["csv"] = o.out;
  emit_report(o, io::make_report(options_json(sub), o.seed, Json(nullptr), result, Json(nullptr)));
  std::cout << csv.str();
  Index failures = 0;
  for (const auto& r : rows) failures += r.solver_failures;
  if (failures > 0 && !o.allow_inexact) {
    throw Inexact(std::to_string(failures) + " coherence solves were not optimal");
  }
  return kExitOk;
}

// Turns a JSON config into flags; values already given on the command line win.
std::vector<std::string> apply_config(std::vector<std::string> args) {
  auto it = std::find(args.begin(), args.end(), "--config");
  if (it == args.end()) return args;
  if (it + 1 == args.end()) throw CLI::ValidationError("--config", "missing path");
  const std::string path = *(it + 1);
  args.erase(it, it + 2);
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open config " + path);
  Json cfg;
  try {
    cfg = Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
  if (!cfg.is_object()) throw Error(ErrorCode::kParseError, path + ": config must be an object");
  if (args.empty() && cfg.contains("command")) args.push_back(cfg["command"].get<std::string>());
  for (auto kv = cfg.begin(); kv != cfg.end(); ++kv) {
    if (kv.key() == "command") continue;
    const std::string flag = "--" + kv.key();
    if (std::find(args.begin(), args.end(), flag) != args.end()) continue;
    const Json& v = kv.value();
    if (v.is_boolean()) {
      if (v.get<bool>()) args.push_back(flag);
    } else if (v.is_string()) {
      if (v.get<std::string>().empty()) continue;
      args.push_back(flag);
      args.push_back(v.get<std::string>());
    } else if (v.is_number()) {
      args.push_back(flag);
      args.push_back(v.dump());
    } else {
      throw Error(ErrorCode::kParseError, path + ": unsupported value for '" + kv.key() + "'");
    }
  }
  return args;
}

}  // namespace

int run(const std::vector<std::string>& raw) {
  Options o;
  CLI::App app{"Frame preconditioning for low coherence", "cohere"};
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version_string());
  app.add_option("--config", "JSON file with default flag values");

  auto input = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("input,--input", o.input, "frame matrix file");
    if (required) opt->required();
    opt->check(CLI::ExistingFile);
  };
  auto common = [&](CLI::App* s) {
    s->add_option("--seed", o.seed, "random seed")->capture_default_str();
    s->add_option("--out", o.out, "output path");
    s->add_option("--report", o.report, "JSON report path");
    s->add_option("--tol", o.tol, "feasibility tolerance")->capture_default_str();
    s->add_option("--gap-tol", o.gap_tol, "duality gap tolerance")->capture_default_str();
    s->add_option("--max-iter", o.max_iter, "interior-point iteration cap")->capture_default_str();
    s->add_flag("--allow-inexact", o.allow_inexact, "accept non-optimal solver exits");
    s->add_flag("--verbose", o.verbose, "print solver iterations");
  };

  auto* gen = app.add_subcommand("gen", "draw a Gaussian unit-norm frame");
  gen->add_option("--m", o.m, "rows")->required();
  gen->add_option("--M", o.M, "columns")->required();
  common(gen);

  auto* analyze = app.add_subcommand("analyze", "frame statistics");
  input(analyze, true);
  common(analyze);

  auto* precondition = app.add_subcommand("precondition", "minimize coherence over G");
  input(precondition, true);
  common(precondition);
  precondition->add_option("--t1", o.t1, "upper bound on the eigenvalue ratio of X (default: none)");
  precondition->add_option("--t2", o.t2, "lower eigenvalue bound used with --t1")->capture_default_str();
  precondition->add_flag("--absolute", o.absolute, "bound X itself instead of X up to scale");

  auto* diag = app.add_subcommand("diag-lp", "minimize coherence over diagonal G");
  input(diag, true);
  common(diag);

  auto* tighten = app.add_subcommand("tighten", "nearest tight frame after preconditioning");
  input(tighten, true);
  tighten->add_option("--precond", o.precond, "use this G instead of solving")->check(CLI::ExistingFile);
  common(tighten);

  auto* cert = app.add_subcommand("certify", "decide whether any G strictly lowers coherence");
  input(cert, true);
  cert->add_option("--tau", o.tau, "active-set tolerance")->capture_default_str();
  common(cert);

  auto* rec = app.add_subcommand("recover", "sparse recovery on a frame");
  input(rec, true);
  rec->add_option("--k", o.k, "sparsity of a planted signal");
  rec->add_option("--y", o.measurements, "measurement vector (m x 1 matrix file)")->check(CLI::ExistingFile);
  rec->add_option("--decoder", o.decoder)->check(CLI::IsMember({"omp", "bp"}))->capture_default_str();
  rec->add_option("--pipeline", o.pipeline)->check(CLI::IsMember({"phi", "gphi", "g1phi"}))->capture_default_str();
  rec->add_option("--precond", o.precond, "use this G instead of solving")->check(CLI::ExistingFile);
  common(rec);

  auto* phase = app.add_subcommand("phase", "phase-transition experiment");
  phase->add_option("--M", o.M, "frame size")->capture_default_str();
  phase->add_option("--m", o.m_list, "row counts, e.g. 2-15 or 4,8,12 (default 2..M-1)");
  phase->add_option("--trials", o.trials)->capture_default_str();
  phase->add_option("--decoder", o.decoder)->check(CLI::IsMember({"omp", "bp"}))->capture_default_str();
  phase->add_option("--pipeline", o.pipeline)->check(CLI::IsMember({"phi", "gphi", "g1phi"}))->capture_default_str();
  phase->add_option("--max-sparsity", o.max_sparsity, "largest sparsity tried (0: m)")->capture_default_str();
  phase->add_option("--threads", o.threads, "worker threads (0: all cores)")->capture_default_str();
  common(phase);

  auto* sweep = app.add_subcommand("sweep", "coherence against an eigenvalue-ratio bound");
  input(sweep, false);
  sweep->add_option("--m", o.m, "rows of a generated frame")->capture_default_str();
  sweep->add_option("--M", o.M, "columns of a generated frame")->capture_default_str();
  sweep->add_option("--t2", o.t2)->capture_default_str();
  sweep->add_option("--t1-max", o.t1_max)->capture_default_str();
  sweep->add_option("--t1-step", o.t1_step)->capture_default_str();
  sweep->add_flag("--absolute", o.absolute, "bound X itself instead of X up to scale");
  common(sweep);

  auto* table = app.add_subcommand("table", "average coherence before and after preconditioning");
  table->add_option("--m", o.m_list, "row counts (default 12,18,24)");
  table->add_option("--M", o.M, "frame size (default 64)");
  table->add_option("--trials", o.trials)->capture_default_str();
  table->add_option("--pipeline", o.pipeline)->check(CLI::IsMember({"phi", "gphi", "g1phi"}))->capture_default_str();
  table->add_option("--threads", o.threads)->capture_default_str();
  common(table);

  try {
    std::vector<std::string> args = apply_config(raw);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "cohere: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(o, *gen);
    if (analyze->parsed()) return cmd_analyze(o, *analyze);
    if (precondition->parsed()) return cmd_precondition(o, *precondition);
    if (diag->parsed()) return cmd_diag_lp(o, *diag);
    if (tighten->parsed()) return cmd_tighten(o, *tighten);
    if (cert->parsed()) return cmd_certify(o, *cert);
    if (rec->parsed()) return cmd_recover(o, *rec);
    if (phase->parsed()) return cmd_phase(o, *phase);
    if (sweep->parsed()) return cmd_sweep(o, *sweep);
    if (table->parsed()) return cmd_table(o, *table);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cohere: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Inexact& e) {
    std::cerr << "cohere: " << e.what() << '\n';
    return kExitFailure;
  } catch (const Error& e) {
    std::cerr << "cohere: " << to_string(e.code()) << ": " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::kParseError:
      case ErrorCode::kInvalidArgument:
      case ErrorCode::kInvalidShape:
      case ErrorCode::kInvalidBounds:
      case ErrorCode::kDimensionMismatch:
      case ErrorCode::kNonFinite:
      case ErrorCode::kIoError:
        return kExitUsage;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "cohere: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int k = 1; k < argc; ++k) args.emplace_back(argv[k]);
  return run(args);
}

}  // namespace cohere::cli
