#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cll/baselines.hpp"
#include "cll/error_estimation.hpp"
#include "cll/io.hpp"
#include "cll/solver.hpp"
#include "cll/synthgen.hpp"
#include "cll/theory.hpp"
#include "cll/version.hpp"

namespace cll {

using json = nlohmann::json;

// ---- error-rate modes ---------------------------------------------------------

struct ErrorMode {
  ErrorSource kind = ErrorSource::kTrue;
  double eps0 = 0.4;

  /// "true", "agreement", "uniform" (eps0 = 0.4) or "uniform:<eps0>".
  static ErrorMode parse(const std::string& text) {
    if (text == "true") return {ErrorSource::kTrue};
    if (text == "agreement") return {ErrorSource::kAgreement};
    if (text == "uniform") return {ErrorSource::kUniform};
    if (text.rfind("uniform:", 0) == 0) {
      try {
        std::size_t used = 0;
        const double e = std::stod(text.substr(8), &used);
        if (used != text.size() - 8) throw std::invalid_argument("trailing characters");
        if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("uniform error rate must lie in [0,1]");
        return {ErrorSource::kUniform, e};
      } catch (const std::logic_error&) {
        throw ValidationError("bad uniform error rate in '" + text + "'");
      }
    }
    throw ValidationError("unknown error-rate mode '" + text + "'");
  }

  std::string str() const {
    if (kind != ErrorSource::kUniform) return to_string(kind);
    return "uniform:" + io::detail::format_double(eps0);
  }
};

/// Error rates for `set` under `mode`; the true mode needs the ground truth.
inline ErrorRateVector resolve_errors(const WeakSignalSet& set, const ErrorMode& mode,
                                      const LabelEstimate* truth = nullptr) {
  switch (mode.kind) {
    case ErrorSource::kTrue:
      if (!truth) throw ValidationError("true error rates need ground-truth labels");
      return true_errors(set, *truth);
    case ErrorSource::kUniform: return uniform_errors(set, mode.eps0);
    case ErrorSource::kAgreement: return agreement_errors(set);
  }
  throw ValidationError("unhandled error mode");
}

// ---- single labeling run --------------------------------------------------------

struct LabelRun {
  SolverResult result;
  std::optional<BoundReport> certificate;
  ValidationReport validation;
};

/// Validate, build, solve, and (binary full-coverage inputs only) attach the
/// distance certificate.
inline LabelRun run_label(const WeakSignalSet& set, const ErrorRateVector& eps, const SolverConfig& cfg) {
  auto validation = validate(set);
  const auto sys = build(set, eps);
  LabelRun run{solve(sys, cfg), std::nullopt, std::move(validation)};
  if (set.indexing().num_classes() == 1 && run.validation.union_gaps.empty()) {
    auto bound = pseudoinverse_bound(sys, eps);
    if (!bound.extended_regime) run.certificate = std::move(bound);
  }
  return run;
}

// ---- experiments ------------------------------------------------------------------

enum class Scenario { kIndependent, kDependent, kRankSweep, kEpsSweep };

inline const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::kIndependent: return "independent";
    case Scenario::kDependent: return "dependent";
    case Scenario::kRankSweep: return "rank_sweep";
    case Scenario::kEpsSweep: return "eps_sweep";
  }
  return "unknown";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "independent") return Scenario::kIndependent;
  if (s == "dependent") return Scenario::kDependent;
  if (s == "rank_sweep") return Scenario::kRankSweep;
  if (s == "eps_sweep") return Scenario::kEpsSweep;
  throw ValidationError("unknown scenario '" + s + "'");
}

struct ExperimentSpec {
  Scenario scenario = Scenario::kIndependent;
  IndependentParams independent;
  DependentParams dependent;
  RankFamilyParams rank;
  std::size_t sweep_steps = 10;
  /// Constant error rates tried by eps_sweep, which runs on the independent task.
  std::vector<double> eps_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  /// CLL variants run by the independent and dependent scenarios.
  std::vector<ErrorMode> modes{{ErrorSource::kTrue}, {ErrorSource::kUniform, 0.4}, {ErrorSource::kAgreement}};
  SolverConfig solver;
  std::size_t trials = 3;
  std::uint64_t seed = 42;

  void check() const {
    if (trials < 1) throw ValidationError("trials must be at least 1");
    solver.check();
    if (scenario == Scenario::kEpsSweep && eps_grid.empty()) throw ValidationError("eps_sweep needs a non-empty grid");
    for (double e : eps_grid) {
      if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("eps grid values must lie in [0,1]");
    }
    if (scenario == Scenario::kRankSweep && sweep_steps < 1) throw ValidationError("sweep_steps must be positive");
  }
};

inline json to_json(const ExperimentSpec& s) {
  json modes = json::array();
  for (const auto& m : s.modes) modes.push_back(m.str());
  return {
      {"scenario", to_string(s.scenario)},
      {"independent",
       {{"num_examples", s.independent.num_examples},
        {"num_features", s.independent.num_features},
        {"num_signals", s.independent.num_signals},
        {"coverage", s.independent.coverage},
        {"min_accuracy", s.independent.min_accuracy},
        {"max_accuracy", s.independent.max_accuracy}}},
      {"dependent",
       {{"num_examples", s.dependent.num_examples},
        {"num_features", s.dependent.num_features},
        {"num_copies", s.dependent.num_copies},
        {"coverage", s.dependent.coverage},
        {"min_accuracy", s.dependent.min_accuracy},
        {"max_accuracy", s.dependent.max_accuracy},
        {"flip_probability", s.dependent.flip_probability}}},
      {"rank",
       {{"num_examples", s.rank.num_examples},
        {"num_features", s.rank.num_features},
        {"num_signals", s.rank.num_signals}}},
      {"sweep_steps", s.sweep_steps},
      {"eps_grid", s.eps_grid},
      {"modes", modes},
      {"solver",
       {{"num_restarts", s.solver.num_restarts},
        {"max_iters", s.solver.max_iters},
        {"base_step", s.solver.base_step},
        {"adagrad_epsilon", s.solver.adagrad_epsilon},
        {"residual_tolerance", s.solver.residual_tolerance ? json(*s.solver.residual_tolerance) : json(nullptr)}}},
      {"trials", s.trials},
      {"seed", s.seed},
  };
}

namespace detail {

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key) && !j[key].is_null()) into = j[key].get<T>();
}

}  // namespace detail

/// Overlay the keys present in `j` onto `base`.
inline ExperimentSpec spec_from_json(const json& j, ExperimentSpec base = {}) {
  try {
    if (j.contains("scenario")) base.scenario = scenario_from_string(j["scenario"].get<std::string>());
    if (j.contains("independent")) {
      const auto& g = j["independent"];
      detail::take(g, "num_examples", base.independent.num_examples);
      detail::take(g, "num_features", base.independent.num_features);
      detail::take(g, "num_signals", base.independent.num_signals);
      detail::take(g, "coverage", base.independent.coverage);
      detail::take(g, "min_accuracy", base.independent.min_accuracy);
      detail::take(g, "max_accuracy", base.independent.max_accuracy);
    }
    if (j.contains("dependent")) {
      const auto& g = j["dependent"];
      detail::take(g, "num_examples", base.dependent.num_examples);
      detail::take(g, "num_features", base.dependent.num_features);
      detail::take(g, "num_copies", base.dependent.num_copies);
      detail::take(g, "coverage", base.dependent.coverage);
      detail::take(g, "min_accuracy", base.dependent.min_accuracy);
      detail::take(g, "max_accuracy", base.dependent.max_accuracy);
      detail::take(g, "flip_probability", base.dependent.flip_probability);
    }
    if (j.contains("rank")) {
      const auto& g = j["rank"];
      detail::take(g, "num_examples", base.rank.num_examples);
      detail::take(g, "num_features", base.rank.num_features);
      detail::take(g, "num_signals", base.rank.num_signals);
    }
    detail::take(j, "sweep_steps", base.sweep_steps);
    detail::take(j, "eps_grid", base.eps_grid);
    if (j.contains("modes")) {
      base.modes.clear();
      for (const auto& m : j["modes"]) base.modes.push_back(ErrorMode::parse(m.get<std::string>()));
    }
    if (j.contains("solver")) {
      const auto& g = j["solver"];
      detail::take(g, "num_restarts", base.solver.num_restarts);
      detail::take(g, "max_iters", base.solver.max_iters);
      detail::take(g, "base_step", base.solver.base_step);
      detail::take(g, "adagrad_epsilon", base.solver.adagrad_epsilon);
      if (g.contains("residual_tolerance")) {
        base.solver.residual_tolerance = g["residual_tolerance"].is_null()
                                             ? std::nullopt
                                             : std::optional<double>(g["residual_tolerance"].get<double>());
      }
    }
    detail::take(j, "trials", base.trials);
    detail::take(j, "seed", base.seed);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad experiment config: ") + e.what());
  }
  return base;
}

/// FNV-1a over the canonical (key-sorted) JSON of the spec.
inline std::string config_hash(const ExperimentSpec& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(s).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Solver contract checks gathered while an experiment runs.
struct SolveAudit {
  std::size_t solves = 0;
  std::size_t box_violations = 0;
  std::size_t progress_violations = 0;
  /// Largest mean absolute difference between two restarts' labels, over
  /// solves built from true error rates (a feasible point exists).
  double max_restart_spread = 0.0;
  std::size_t feasible_solves = 0;

  void merge(const SolveAudit& o) {
    solves += o.solves;
    box_violations += o.box_violations;
    progress_violations += o.progress_violations;
    max_restart_spread = std::max(max_restart_spread, o.max_restart_spread);
    feasible_solves += o.feasible_solves;
  }
};

inline double restart_spread(const SolverResult& r) {
  double worst = 0.0;
  for (std::size_t a = 0; a < r.per_restart_labels.size(); ++a) {
    for (std::size_t b = a + 1; b < r.per_restart_labels.size(); ++b) {
      worst = std::max(worst, (r.per_restart_labels[a].values() - r.per_restart_labels[b].values()).cwiseAbs().mean());
    }
  }
  return worst;
}

/// solve() with every iterate checked against the unit box.
inline SolverResult audited_solve(const ConstraintSystem& sys, const SolverConfig& cfg, bool feasible_by_construction,
                                  SolveAudit& audit) {
  std::size_t violations = 0;
  auto result = solve(sys, cfg, [&](std::size_t, std::size_t, const Vector& y) {
    if (y.size() && (y.minCoeff() < 0.0 || y.maxCoeff() > 1.0)) ++violations;
  });
  ++audit.solves;
  audit.box_violations += violations;
  for (std::size_t r = 0; r < result.final_residuals.size(); ++r) {
    if (result.final_residuals[r] > result.initial_residuals[r]) ++audit.progress_violations;
  }
  if (feasible_by_construction) {
    ++audit.feasible_solves;
    audit.max_restart_spread = std::max(audit.max_restart_spread, restart_spread(result));
  }
  return result;
}

struct MethodSummary {
  std::string method;
  std::vector<double> per_trial;
  double mean = 0.0;
  /// Population standard deviation over trials.
  double std = 0.0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::string config_hash;
  /// independent, dependent: one entry per method. eps_sweep: one per grid value.
  std::vector<MethodSummary> methods;
  /// rank_sweep: rows averaged over trials, plus each trial's rows.
  std::vector<RankSweepRow> rank_rows;
  std::vector<std::vector<RankSweepRow>> rank_trials;
  SolveAudit audit;
};

namespace detail {

inline void summarize(MethodSummary& m) {
  const double k = static_cast<double>(m.per_trial.size());
  double sum = 0.0;
  for (double v : m.per_trial) sum += v;
  m.mean = sum / k;
  double sq = 0.0;
  for (double v : m.per_trial) sq += (v - m.mean) * (v - m.mean);
  m.std = std::sqrt(sq / k);
}

struct TrialOutput {
  std::vector<std::pair<std::string, double>> accuracies;
  std::vector<RankSweepRow> rank_rows;
  SolveAudit audit;
};

inline TrialOutput run_trial(const ExperimentSpec& spec, std::size_t trial) {
  TrialOutput out;
  const std::uint64_t task_seed = derive_seed(spec.seed, 2 * trial);
  SolverConfig cfg = spec.solver;
  cfg.seed = derive_seed(spec.seed, 2 * trial + 1);

  if (spec.scenario == Scenario::kRankSweep) {
    const auto family = gen_rank_family(spec.rank, task_seed);
    out.rank_rows = rank_sweep(family, spec.sweep_steps, [&](const ConstraintSystem& sys) {
      return audited_solve(sys, cfg, true, out.audit);
    });
    return out;
  }

  const auto task = spec.scenario == Scenario::kDependent ? gen_dependent(spec.dependent, task_seed)
                                                          : gen_independent(spec.independent, task_seed);
  if (spec.scenario == Scenario::kEpsSweep) {
    for (double e : spec.eps_grid) {
      const auto sys = build(task.signals, uniform_errors(task.signals, e));
      const auto result = audited_solve(sys, cfg, false, out.audit);
      out.accuracies.emplace_back("uniform:" + io::detail::format_double(e), label_accuracy(result.labels, task.truth));
    }
    return out;
  }

  for (const auto& mode : spec.modes) {
    const auto eps = resolve_errors(task.signals, mode, &task.truth);
    const auto result = audited_solve(build(task.signals, eps), cfg, mode.kind == ErrorSource::kTrue, out.audit);
    out.accuracies.emplace_back("cll_" + mode.str(), label_accuracy(result.labels, task.truth));
  }
  out.accuracies.emplace_back("majority_vote", label_accuracy(majority_vote(task.signals), task.truth));
  out.accuracies.emplace_back("average_vote", label_accuracy(average_vote(task.signals), task.truth));
  return out;
}

}  // namespace detail

/// Runs `spec.trials` independent trials concurrently; results are ordered
/// by trial index.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.check();
  std::vector<std::future<detail::TrialOutput>> pending;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    pending.push_back(std::async(std::launch::async, [&spec, t] { return detail::run_trial(spec, t); }));
  }
  std::vector<detail::TrialOutput> trials;
  for (auto& f : pending) trials.push_back(f.get());

  ExperimentResult res{spec, config_hash(spec), {}, {}, {}, {}};
  for (const auto& t : trials) res.audit.merge(t.audit);

  if (spec.scenario == Scenario::kRankSweep) {
    for (auto& t : trials) res.rank_trials.push_back(std::move(t.rank_rows));
    const double k = static_cast<double>(res.rank_trials.size());
    res.rank_rows = res.rank_trials.front();
    for (std::size_t i = 0; i < res.rank_rows.size(); ++i) {
      double rank = 0.0;
      RankSweepRow& row = res.rank_rows[i];
      row.cll_label_error = row.mv_label_error = row.bound_value = row.final_residual = 0.0;
      for (const auto& trial : res.rank_trials) {
        rank += static_cast<double>(trial[i].rank);
        row.cll_label_error += trial[i].cll_label_error / k;
        row.mv_label_error += trial[i].mv_label_error / k;
        row.bound_value += trial[i].bound_value / k;
        row.final_residual = std::max(row.final_residual, trial[i].final_residual);
      }
      row.rank = static_cast<Eigen::Index>(std::lround(rank / k));
    }
    return res;
  }

  for (std::size_t m = 0; m < trials.front().accuracies.size(); ++m) {
    MethodSummary s{trials.front().accuracies[m].first, {}};
    for (const auto& t : trials) s.per_trial.push_back(t.accuracies[m].second);
    detail::summarize(s);
    res.methods.push_back(std::move(s));
  }
  return res;
}

inline const MethodSummary& find_method(const ExperimentResult& r, const std::string& name) {
  for (const auto& m : r.methods) {
    if (m.method == name) return m;
  }
  throw ValidationError("experiment has no method '" + name + "'");
}

/// Plot-ready table. Sweeps over eps put the grid value in the first column.
inline void write_results_csv(std::ostream& os, const ExperimentResult& r) {
  if (r.spec.scenario == Scenario::kRankSweep) {
    write_rank_sweep_csv(os, r.rank_rows);
    return;
  }
  const bool sweep = r.spec.scenario == Scenario::kEpsSweep;
  os << (sweep ? "eps" : "method") << ",mean_accuracy,std_accuracy";
  for (std::size_t t = 0; t < r.spec.trials; ++t) os << ",trial_" << t + 1;
  os << '\n';
  for (const auto& m : r.methods) {
    os << (sweep ? m.method.substr(8) : m.method) << ',' << io::detail::format_double(m.mean) << ','
       << io::detail::format_double(m.std);
    for (double v : m.per_trial) os << ',' << io::detail::format_double(v);
    os << '\n';
  }
}

inline json report_header(const std::string& command, std::uint64_t seed, const std::string& hash) {
  return {{"tool", "cll"},
          {"command", command},
          {"version", kVersion},
          {"modules", module_versions()},
          {"config_hash", hash},
          {"seed", seed}};
}

inline json to_json(const ExperimentResult& r) {
  json j = report_header("experiment", r.spec.seed, r.config_hash);
  j["spec"] = to_json(r.spec);
  j["std_kind"] = "population";
  json methods = json::array();
  for (const auto& m : r.methods) {
    methods.push_back({{"method", m.method}, {"mean", m.mean}, {"std", m.std}, {"per_trial", m.per_trial}});
  }
  j["methods"] = std::move(methods);
  json rows = json::array();
  for (const auto& row : r.rank_rows) {
    rows.push_back({{"replaced", row.replaced},
                    {"rank", row.rank},
                    {"cll_label_error", row.cll_label_error},
                    {"mv_label_error", row.mv_label_error},
                    {"bound_value", row.bound_value},
                    {"max_final_residual", row.final_residual}});
  }
  j["rank_sweep"] = std::move(rows);
  j["solver_audit"] = {{"solves", r.audit.solves},
                       {"box_violations", r.audit.box_violations},
                       {"progress_violations", r.audit.progress_violations},
                       {"feasible_solves", r.audit.feasible_solves},
                       {"max_restart_spread", r.audit.max_restart_spread}};
  return j;
}

}  // namespace cll
