// Command-line front end: label, estimate-errors, bound, synth, experiment.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "cll/harness.hpp"

namespace {

using namespace cll;

enum Exit { kOk = 0, kUsage = 1, kValidation = 2, kInfeasible = 3 };

/// Writes to `path`, or stdout for "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw ParseError("cannot write '" + path + "'");
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  Output out(path);
  out.get() << j.dump(2) << '\n';
}

/// Flags shared by every subcommand that runs the solver or an experiment.
struct Common {
  ExperimentSpec spec;
  std::string config;
  bool strict = false;

  void attach_solver(CLI::App* app) {
    app->add_option("--restarts", spec.solver.num_restarts, "Random restarts")->capture_default_str();
    app->add_option("--iters", spec.solver.max_iters, "Iterations per restart")->capture_default_str();
    app->add_option("--step", spec.solver.base_step, "Adagrad base step")->capture_default_str();
    app->add_option("--adagrad-eps", spec.solver.adagrad_epsilon, "Adagrad denominator guard")->capture_default_str();
    app->add_option_function<double>(
        "--tol", [this](double v) { spec.solver.residual_tolerance = v; }, "Stop a restart once residual <= tol");
  }

  /// Config-file values take precedence over flags.
  void finish() {
    if (!config.empty()) spec = spec_from_json(io::detail::parse_text(io::detail::read_file(config)), spec);
    spec.solver.seed = spec.seed;
    spec.check();
  }
};

/// "true", "agreement", "uniform[:x]", or a JSON error-rate file.
ErrorRateVector load_errors(const std::string& what, const WeakSignalSet& set, const std::optional<LabelEstimate>& truth) {
  if (what == "true" || what == "agreement" || what.rfind("uniform", 0) == 0) {
    return resolve_errors(set, ErrorMode::parse(what), truth ? &*truth : nullptr);
  }
  auto eps = io::read_errors(what);
  if (eps.size() != set.size()) {
    throw DimensionError("error file has " + std::to_string(eps.size()) + " rates for " + std::to_string(set.size()) +
                         " signals");
  }
  return eps;
}

std::optional<LabelEstimate> load_truth(const std::string& path, const WeakSignalSet& set) {
  if (path.empty()) return std::nullopt;
  auto truth = io::read_labels_csv(path);
  if (!(truth.indexing() == set.indexing())) throw DimensionError("truth labels do not match the signal file's shape");
  return truth;
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

// ---- label ------------------------------------------------------------------------

struct LabelArgs {
  std::string signals, errors = "uniform:0.4", truth, out = "-", report, trace;
};

int cmd_label(const LabelArgs& a, Common& c) {
  c.finish();
  const auto set = io::read_signals(a.signals);
  const auto truth = load_truth(a.truth, set);
  const auto eps = load_errors(a.errors, set, truth);
  const auto run = run_label(set, eps, c.spec.solver);

  Output out(a.out);
  io::write_labels_csv(out.get(), run.result.labels);
  if (!a.trace.empty()) {
    Output trace(a.trace);
    write_trace_csv(trace.get(), run.result);
  }

  json report = report_header("label", c.spec.seed, config_hash(c.spec));
  report["error_source"] = to_string(eps.source());
  report["final_residuals"] = run.result.final_residuals;
  report["initial_residuals"] = run.result.initial_residuals;
  report["feasibility_threshold"] = run.result.feasibility_threshold;
  report["infeasible"] = run.result.infeasible;
  report["validation"] = io::to_json(run.validation);
  report["certificate"] = run.certificate ? io::to_json(*run.certificate) : json(nullptr);
  if (truth) report["label_accuracy"] = label_accuracy(run.result.labels, *truth);
  write_json(a.report, report);

  for (const auto& issue : run.validation.issues) std::cerr << "warning: " << issue.message << '\n';
  if (run.result.infeasible) {
    std::cerr << "warning: no labeling satisfies the constraints (residual " << run.result.max_final_residual()
              << " > " << run.result.feasibility_threshold << ")\n";
    if (c.strict) return kInfeasible;
  }
  return kOk;
}

// ---- estimate-errors --------------------------------------------------------------

struct EstimateArgs {
  std::string signals, method = "agreement", truth, out = "-";
};

int cmd_estimate(const EstimateArgs& a) {
  const auto set = io::read_signals(a.signals);
  const auto truth = load_truth(a.truth, set);
  json j;
  if (a.method == "agreement") {
    const auto est = estimate_agreement_errors(set);
    print_warnings(est.warnings);
    j = io::to_json(est.errors);
    j["degenerate"] = est.degenerate;
    j["warnings"] = est.warnings;
  } else {
    j = io::to_json(resolve_errors(set, ErrorMode::parse(a.method), truth ? &*truth : nullptr));
  }
  Output out(a.out);
  out.get() << j.dump(2) << '\n';
  return kOk;
}

// ---- bound ------------------------------------------------------------------------

struct BoundArgs {
  std::string signals, errors = "true", truth, out = "-";
};

int cmd_bound(const BoundArgs& a) {
  const auto set = io::read_signals(a.signals);
  const auto truth = load_truth(a.truth, set);
  const auto eps = load_errors(a.errors, set, truth);
  const auto sys = build(set, eps);
  const auto report = pseudoinverse_bound(sys, eps);
  print_warnings(report.warnings);
  json j = io::to_json(report);
  if (truth) {
    const Vector negated = Vector::Ones(static_cast<Eigen::Index>(truth->size())) - truth->values();
    const auto proj = projection_oracle(sys, negated);
    j["projection_distance"] = proj.distance;
    j["consistent"] = proj.consistent;
  }
  Output out(a.out);
  out.get() << j.dump(2) << '\n';
  return kOk;
}

// ---- synth ------------------------------------------------------------------------

struct SynthArgs {
  std::string scenario = "independent", signals_out, truth_out, errors_out, features_out;
  std::size_t replaced = 0;
};

void write_features(const std::string& path, const FeatureMatrix& x) {
  Output out(path);
  auto& os = out.get();
  os << "example";
  for (Eigen::Index j = 0; j < x.cols(); ++j) os << ",x" << j + 1;
  os << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    os << i + 1;
    for (Eigen::Index j = 0; j < x.cols(); ++j) os << ',' << static_cast<int>(x(i, j));
    os << '\n';
  }
}

int cmd_synth(const SynthArgs& a, Common& c) {
  c.finish();
  const auto scenario = scenario_from_string(a.scenario);
  WeakSignalSet set = [&] {
    switch (scenario) {
      case Scenario::kDependent: {
        auto task = gen_dependent(c.spec.dependent, c.spec.seed);
        if (!a.truth_out.empty()) { Output o(a.truth_out); io::write_labels_csv(o.get(), task.truth); }
        if (!a.features_out.empty()) write_features(a.features_out, task.features);
        return task.signals;
      }
      case Scenario::kRankSweep: {
        const auto family = gen_rank_family(c.spec.rank, c.spec.seed);
        if (!a.truth_out.empty()) { Output o(a.truth_out); io::write_labels_csv(o.get(), family.truth()); }
        if (!a.features_out.empty()) write_features(a.features_out, family.features());
        return family.at(a.replaced);
      }
      default: {
        auto task = gen_independent(c.spec.independent, c.spec.seed);
        if (!a.truth_out.empty()) { Output o(a.truth_out); io::write_labels_csv(o.get(), task.truth); }
        if (!a.features_out.empty()) write_features(a.features_out, task.features);
        return task.signals;
      }
    }
  }();
  if (!a.errors_out.empty()) {
    if (a.truth_out.empty()) throw ValidationError("--errors-out needs --truth-out");
    const auto truth = io::read_labels_csv(a.truth_out);
    write_json(a.errors_out, io::to_json(true_errors(set, truth)));
  }
  Output out(a.signals_out.empty() ? "-" : a.signals_out);
  io::write_signals(out.get(), set);
  return kOk;
}

// ---- experiment -------------------------------------------------------------------

struct ExperimentArgs {
  std::string scenario, out = "-", report;
  std::vector<std::string> modes;
};

int cmd_experiment(const ExperimentArgs& a, Common& c) {
  if (!a.scenario.empty()) c.spec.scenario = scenario_from_string(a.scenario);
  if (!a.modes.empty()) {
    c.spec.modes.clear();
    for (const auto& m : a.modes) c.spec.modes.push_back(ErrorMode::parse(m));
  }
  c.finish();
  const auto result = run_experiment(c.spec);
  Output out(a.out);
  write_results_csv(out.get(), result);
  write_json(a.report, to_json(result));
  return kOk;
}

void add_generator_flags(CLI::App* app, ExperimentSpec& s) {
  app->add_option("--n", s.independent.num_examples, "Examples (independent)")->capture_default_str();
  app->add_option("--signals-count", s.independent.num_signals, "Signals (independent)")->capture_default_str();
  app->add_option("--coverage", s.independent.coverage, "Fraction of examples each signal labels")
      ->capture_default_str();
  app->add_option("--dep-n", s.dependent.num_examples, "Examples (dependent)")->capture_default_str();
  app->add_option("--copies", s.dependent.num_copies, "Noisy copies (dependent)")->capture_default_str();
  app->add_option("--flip", s.dependent.flip_probability, "Copy flip probability")->capture_default_str();
  app->add_option("--rank-n", s.rank.num_examples, "Examples (rank sweep)")->capture_default_str();
  app->add_option("--rank-signals", s.rank.num_signals, "Signals (rank sweep)")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained label learning from weak supervision signals"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.spec.seed, "Seed for all randomness")->capture_default_str();
    sub->add_option("--config", common.config, "JSON config; its values override flags")->check(CLI::ExistingFile);
  };

  LabelArgs label;
  auto* lab = app.add_subcommand("label", "Estimate labels from weak signals");
  lab->add_option("-s,--signals", label.signals, "Signal JSON file")->required()->check(CLI::ExistingFile);
  lab->add_option("-e,--errors", label.errors, "Error rates: true | agreement | uniform[:x] | JSON file")
      ->capture_default_str();
  lab->add_option("--truth", label.truth, "Ground-truth label CSV (for --errors true and accuracy)");
  lab->add_option("-o,--out", label.out, "Label CSV ('-' for stdout)")->capture_default_str();
  lab->add_option("--report", label.report, "Report JSON path");
  lab->add_option("--trace", label.trace, "Residual trace CSV path");
  lab->add_flag("--strict", common.strict, "Exit 3 when the constraints cannot be met");
  common.attach_solver(lab);
  add_common(lab);

  EstimateArgs est;
  auto* esc = app.add_subcommand("estimate-errors", "Estimate signal error rates");
  esc->add_option("-s,--signals", est.signals, "Signal JSON file")->required()->check(CLI::ExistingFile);
  esc->add_option("-m,--method", est.method, "agreement | uniform[:x] | true")->capture_default_str();
  esc->add_option("--truth", est.truth, "Ground-truth label CSV (for true)");
  esc->add_option("-o,--out", est.out, "Error-rate JSON ('-' for stdout)")->capture_default_str();

  BoundArgs bound;
  auto* bnd = app.add_subcommand("bound", "Distance certificate for a signal set");
  bnd->add_option("-s,--signals", bound.signals, "Signal JSON file")->required()->check(CLI::ExistingFile);
  bnd->add_option("-e,--errors", bound.errors, "Error rates: true | agreement | uniform[:x] | JSON file")
      ->capture_default_str();
  bnd->add_option("--truth", bound.truth, "Ground-truth label CSV");
  bnd->add_option("-o,--out", bound.out, "Report JSON ('-' for stdout)")->capture_default_str();

  SynthArgs synth;
  auto* syn = app.add_subcommand("synth", "Generate a synthetic task");
  syn->add_option("--scenario", synth.scenario, "independent | dependent | rank_sweep")->capture_default_str();
  syn->add_option("--replaced", synth.replaced, "rank_sweep: random signals replacing base copies")
      ->capture_default_str();
  syn->add_option("-o,--signals-out", synth.signals_out, "Signal JSON (default stdout)");
  syn->add_option("--truth-out", synth.truth_out, "Truth label CSV");
  syn->add_option("--errors-out", synth.errors_out, "True error-rate JSON");
  syn->add_option("--features-out", synth.features_out, "Feature CSV");
  add_generator_flags(syn, common.spec);
  add_common(syn);

  ExperimentArgs exp;
  auto* ex = app.add_subcommand("experiment", "Run a synthetic experiment");
  ex->add_option("--scenario", exp.scenario, "independent | dependent | rank_sweep | eps_sweep");
  ex->add_option("--trials", common.spec.trials, "Trials")->capture_default_str();
  ex->add_option("--modes", exp.modes, "CLL error modes, e.g. true uniform:0.4 agreement");
  ex->add_option("--eps-grid", common.spec.eps_grid, "eps_sweep grid");
  ex->add_option("--sweep-steps", common.spec.sweep_steps, "rank_sweep steps")->capture_default_str();
  ex->add_option("-o,--out", exp.out, "Results CSV ('-' for stdout)")->capture_default_str();
  ex->add_option("--report", exp.report, "Report JSON path");
  common.attach_solver(ex);
  add_generator_flags(ex, common.spec);
  add_common(ex);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*lab) return cmd_label(label, common);
    if (*esc) return cmd_estimate(est);
    if (*bnd) return cmd_bound(bound);
    if (*syn) return cmd_synth(synth, common);
    return cmd_experiment(exp, common);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
}
