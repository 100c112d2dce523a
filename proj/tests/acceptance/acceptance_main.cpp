// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cll/harness.hpp"
#include "support/oracles.hpp"

namespace {

using namespace cll;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300}); }

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

Vector negated(const LabelEstimate& y) { return Vector::Ones(static_cast<Eigen::Index>(y.size())) - y.values(); }

// ---- 1 ----------------------------------------------------------------------------

Outcome error_oracle() {
  std::mt19937_64 gen(1001);
  std::uniform_int_distribution<std::size_t> size(1, 50);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t k = rep % 2 ? 3 : 1;
    const double abstain = rep % 4 < 2 ? 0.0 : 0.5;
    const auto set = testing::random_set(gen, size(gen), k, 1, abstain, rep % 3 == 0);
    const auto y = testing::random_truth(gen, set.indexing());
    worst = std::max(worst, std::abs(empirical_error(set[0], y) - testing::naive_error(set[0], y)));
  }
  return {worst <= 1e-12, fmt("max |diff| = %.3g over 1000 instances", worst)};
}

// ---- 2 ----------------------------------------------------------------------------

Outcome consistency() {
  std::mt19937_64 gen(1002);
  std::uniform_int_distribution<std::size_t> size(2, 60);
  std::uniform_int_distribution<std::size_t> count(1, 12);
  double worst_ratio = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto set = testing::random_set(gen, size(gen), rep % 2 ? 3 : 1, count(gen), rep % 3 * 0.3, rep % 5 == 0);
    const auto y = testing::random_truth(gen, set.indexing());
    const auto sys = build(set, true_errors(set, y));
    worst_ratio = std::max(worst_ratio, residual(sys, y) / static_cast<double>(set.size()));
  }
  return {worst_ratio <= 1e-18, fmt("max residual/m = %.3g", worst_ratio)};
}

// ---- 3 ----------------------------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 gen(1003);
  std::uniform_int_distribution<std::size_t> size(2, 25);
  std::uniform_int_distribution<std::size_t> count(1, 8);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto set = testing::random_set(gen, size(gen), rep % 2 ? 2 : 1, count(gen), 0.3, rep % 2 == 0);
    const auto sys = build(set, uniform_errors(set, 0.3));
    const Matrix a = sys.dense();
    const Vector c = sys.c();
    const Vector y = testing::random_soft_labels(gen, set.indexing()).values();
    const Vector fd = testing::finite_difference([&](const Vector& x) { return testing::naive_residual(a, c, x); }, y);
    worst = std::max(worst, (gradient(sys, y) - fd).norm() / std::max(fd.norm(), 1.0));
  }
  return {worst <= 1e-4, fmt("max relative gradient error = %.3g", worst)};
}

// ---- 4 ----------------------------------------------------------------------------

struct Binary {
  WeakSignalSet set;
  LabelEstimate truth;
  ErrorRateVector eps;
  ConstraintSystem sys;
};

Binary random_binary(std::mt19937_64& gen, std::size_t max_n, std::size_t max_m) {
  std::uniform_int_distribution<std::size_t> size(2, max_n);
  std::uniform_int_distribution<std::size_t> count(1, max_m);
  std::bernoulli_distribution soft(0.3);
  auto set = testing::random_set(gen, size(gen), 1, count(gen), 0.0, soft(gen));
  auto truth = testing::random_truth(gen, set.indexing());
  auto eps = true_errors(set, truth);
  auto sys = build(set, eps);
  return {std::move(set), std::move(truth), std::move(eps), std::move(sys)};
}

Outcome theorem_bound() {
  std::mt19937_64 gen(1004);
  double worst_eq = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto inst = random_binary(gen, 30, 10);
    const double bound = pseudoinverse_bound(inst.sys, inst.eps).bound_value;
    const double dist = projection_oracle(inst.sys, negated(inst.truth)).distance;
    worst_eq = std::max(worst_eq, rel_diff(dist, bound));
  }
  double worst_gap = -1e300;
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = random_binary(gen, 8, 4);
    const double bound = pseudoinverse_bound(inst.sys, inst.eps).bound_value;
    const double boxed = testing::box_constrained_distance(inst.sys.dense(), inst.sys.c(), negated(inst.truth), 5000);
    worst_gap = std::max(worst_gap, bound - boxed);
  }
  return {worst_eq <= 1e-8 && worst_gap <= 1e-8,
          fmt("max relative |dist - bound| = %.3g; max (bound - boxed) = %.3g", worst_eq, worst_gap)};
}

// ---- 5 ----------------------------------------------------------------------------

Outcome redundancy() {
  std::mt19937_64 gen(1005);
  double worst_bound = 0.0;
  double worst_dist = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto inst = random_binary(gen, 30, 10);
    const std::size_t dup = static_cast<std::size_t>(rep) % inst.set.size();
    std::vector<WeakSignal> more(inst.set.begin(), inst.set.end());
    more.push_back(inst.set[dup]);
    Vector e2(inst.eps.size() + 1);
    e2 << inst.eps.values(), inst.eps[static_cast<Eigen::Index>(dup)];
    const ErrorRateVector eps2(e2, ErrorSource::kTrue);
    const auto sys2 = build(WeakSignalSet(inst.set.indexing(), more), eps2);
    worst_bound = std::max(worst_bound, rel_diff(pseudoinverse_bound(inst.sys, inst.eps).bound_value,
                                                 pseudoinverse_bound(sys2, eps2).bound_value));
    const auto probe = testing::random_soft_labels(gen, inst.set.indexing()).values();
    for (const Vector& p : {negated(inst.truth), probe}) {
      worst_dist = std::max(worst_dist,
                            std::abs(projection_oracle(inst.sys, p).distance - projection_oracle(sys2, p).distance));
    }
  }
  return {worst_bound < 1e-9 && worst_dist <= 1e-8,
          fmt("max relative bound change = %.3g; max distance change = %.3g", worst_bound, worst_dist)};
}

// ---- 6-9 share the experiment runs --------------------------------------------------

struct Runs {
  ExperimentResult rank;
  ExperimentResult dependent;
  ExperimentResult independent;
  ExperimentResult sweep;
};

ExperimentSpec rank_spec() {
  ExperimentSpec s;
  s.scenario = Scenario::kRankSweep;
  s.rank = {100, 20, 100};
  s.sweep_steps = 10;
  s.trials = 3;
  return s;
}

ExperimentSpec dependent_spec() {
  ExperimentSpec s;
  s.scenario = Scenario::kDependent;
  s.modes = {ErrorMode::parse("true")};
  return s;
}

ExperimentSpec independent_spec() {
  ExperimentSpec s;
  s.scenario = Scenario::kIndependent;
  return s;
}

ExperimentSpec sweep_spec() {
  ExperimentSpec s;
  s.scenario = Scenario::kEpsSweep;
  s.eps_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.9};
  return s;
}

Outcome rank_sweep_check(const ExperimentResult& r) {
  const auto& rows = r.rank_rows;
  double mv_lo = 1.0;
  double mv_hi = 0.0;
  for (const auto& row : rows) {
    mv_lo = std::min(mv_lo, row.mv_label_error);
    mv_hi = std::max(mv_hi, row.mv_label_error);
  }
  const double full = rows.back().cll_label_error;
  const double gap1 = std::abs(rows.front().cll_label_error - rows.front().mv_label_error);
  std::ostringstream os;
  os << fmt("full-rank CLL error %.4f (< 0.02); MV range %.4f (< 0.1); rank-1 |CLL - MV| %.4f (<= 0.05)", full,
            mv_hi - mv_lo, gap1);
  return {full < 0.02 && mv_hi - mv_lo < 0.1 && gap1 <= 0.05, os.str()};
}

Outcome ordering_check(const ExperimentResult& dep, const ExperimentResult& ind) {
  const double dep_cll = find_method(dep, "cll_true").mean;
  const double dep_mv = find_method(dep, "majority_vote").mean;
  const double ind_true = find_method(ind, "cll_true").mean;
  const double ind_agree = find_method(ind, "cll_agreement").mean;
  const double ind_unif = find_method(ind, "cll_uniform:0.4").mean;
  const bool gap_ok = dep_cll - dep_mv >= 0.10;
  const bool cluster_ok = std::abs(ind_agree - ind_true) <= 0.05 && std::abs(ind_unif - ind_true) <= 0.05;
  return {gap_ok && cluster_ok,
          fmt("dependent: CLL(true) %.4f vs MV %.4f (gap %.4f, need >= 0.10); ", dep_cll, dep_mv, dep_cll - dep_mv) +
              fmt("independent: true %.4f, agreement %.4f, uniform 0.4 %.4f (need within 0.05)", ind_true, ind_agree,
                  ind_unif)};
}

Outcome plateau_check(const ExperimentResult& r) {
  double lo = 1.0;
  double hi = 0.0;
  double sum = 0.0;
  for (const char* name : {"uniform:0", "uniform:0.1", "uniform:0.2", "uniform:0.3", "uniform:0.4"}) {
    const double acc = find_method(r, name).mean;
    lo = std::min(lo, acc);
    hi = std::max(hi, acc);
    sum += acc;
  }
  const double plateau = sum / 5.0;
  const double high = find_method(r, "uniform:0.9").mean;
  return {hi - lo <= 0.05 && plateau - high >= 0.15,
          fmt("plateau spread %.4f (<= 0.05); plateau mean %.4f, eps=0.9 accuracy %.4f (drop %.4f, need >= 0.15)",
              hi - lo, plateau, high, plateau - high)};
}

bool same_outputs(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.methods.size() != b.methods.size() || a.rank_trials.size() != b.rank_trials.size()) return false;
  for (std::size_t i = 0; i < a.methods.size(); ++i) {
    if (a.methods[i].per_trial != b.methods[i].per_trial) return false;
  }
  for (std::size_t t = 0; t < a.rank_trials.size(); ++t) {
    for (std::size_t i = 0; i < a.rank_trials[t].size(); ++i) {
      const auto& x = a.rank_trials[t][i];
      const auto& y = b.rank_trials[t][i];
      if (x.cll_label_error != y.cll_label_error || x.bound_value != y.bound_value ||
          x.final_residual != y.final_residual) {
        return false;
      }
    }
  }
  return true;
}

Outcome solver_contract(const Runs& runs, const Runs& again) {
  SolveAudit total;
  for (const auto* r : {&runs.rank, &runs.dependent, &runs.independent, &runs.sweep}) total.merge(r->audit);
  const bool identical = same_outputs(runs.rank, again.rank) && same_outputs(runs.dependent, again.dependent) &&
                         same_outputs(runs.independent, again.independent) && same_outputs(runs.sweep, again.sweep);
  std::ostringstream os;
  os << total.solves << " solves, " << total.box_violations << " box violations, " << total.progress_violations
     << " residual increases, max restart spread " << fmt("%.4f", total.max_restart_spread) << " over "
     << total.feasible_solves << " feasible solves (<= 0.1), repeat runs " << (identical ? "identical" : "DIFFER");
  return {total.box_violations == 0 && total.progress_violations == 0 && total.max_restart_spread <= 0.1 && identical,
          os.str()};
}

// ---- 10 ---------------------------------------------------------------------------

Outcome agreement_recovery() {
  std::mt19937_64 gen(1010);
  const std::size_t n = 10000;
  const ClassIndexing ix(n, 1);
  const double acc[3] = {0.9, 0.8, 0.7};
  std::vector<WeakSignal> signals;
  for (int s = 0; s < 3; ++s) {
    std::bernoulli_distribution correct(acc[s]);
    std::vector<std::optional<double>> v(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double y = static_cast<double>(i % 2);
      v[i] = correct(gen) ? y : 1.0 - y;
    }
    signals.emplace_back("s" + std::to_string(s), ix, v);
  }
  const auto eps = agreement_errors(WeakSignalSet(ix, std::move(signals)));
  double worst_eps = 0.0;
  for (int s = 0; s < 3; ++s) worst_eps = std::max(worst_eps, std::abs(eps[s] - (1.0 - acc[s])));

  Vector v(3);
  v << 0.8, 0.6, 0.4;
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> obs = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Ones(3, 3);
  for (int i = 0; i < 3; ++i) obs(i, i) = false;
  const double worst_v = (fit_rank_one(v * v.transpose(), obs).v - v).cwiseAbs().maxCoeff();
  return {worst_eps <= 0.05 && worst_v <= 1e-6,
          fmt("eps = (%.4f, %.4f, %.4f); exact-input |v error| = %.3g", eps[0], eps[1], eps[2], worst_v)};
}

// ---- driver -----------------------------------------------------------------------

struct Report {
  int failures = 0;

  void line(int id, const char* name, const Outcome& o, double seconds, double limit) {
    const bool in_time = seconds < limit;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("criterion %2d %-28s %s  %s  [%.1fs, limit %.0fs%s]\n", id, name, pass ? "PASS" : "FAIL",
                o.detail.c_str(), seconds, limit, in_time ? "" : ", TOO SLOW");
    std::fflush(stdout);
  }
};

template <typename F>
auto timed(F&& f, double& seconds) {
  const auto start = std::chrono::steady_clock::now();
  auto out = f();
  seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace

int main() {
  Report report;
  double t = 0.0;

  auto o = timed(error_oracle, t);
  report.line(1, "error oracle", o, t, 5);
  o = timed(consistency, t);
  report.line(2, "constraint consistency", o, t, 5);
  o = timed(gradient_check, t);
  report.line(3, "gradient", o, t, 10);
  o = timed(theorem_bound, t);
  report.line(4, "distance bound", o, t, 30);
  o = timed(redundancy, t);
  report.line(5, "redundancy invariance", o, t, 10);

  Runs runs;
  double t_rank = 0.0;
  double t_dep = 0.0;
  double t_ind = 0.0;
  double t_sweep = 0.0;
  runs.rank = timed([] { return run_experiment(rank_spec()); }, t_rank);
  report.line(6, "rank sweep", rank_sweep_check(runs.rank), t_rank, 120);
  runs.dependent = timed([] { return run_experiment(dependent_spec()); }, t_dep);
  runs.independent = timed([] { return run_experiment(independent_spec()); }, t_ind);
  report.line(7, "dependent-signal ordering", ordering_check(runs.dependent, runs.independent), t_dep + t_ind, 300);
  runs.sweep = timed([] { return run_experiment(sweep_spec()); }, t_sweep);
  report.line(8, "error-rate plateau", plateau_check(runs.sweep), t_sweep, 180);

  // Repeat every run with the same seeds for the determinism check.
  Runs again;
  double t_again = 0.0;
  again = timed(
      [] {
        return Runs{run_experiment(rank_spec()), run_experiment(dependent_spec()), run_experiment(independent_spec()),
                    run_experiment(sweep_spec())};
      },
      t_again);
  // The contract is checked inside runs 6-8; its budget is theirs.
  report.line(9, "solver contract", solver_contract(runs, again), t_again,
              120 + 300 + 180 - (t_rank + t_dep + t_ind + t_sweep));

  o = timed(agreement_recovery, t);
  report.line(10, "agreement recovery", o, t, 10);

  std::printf("%d of 10 criteria failed\n", report.failures);
  return report.failures == 0 ? 0 : 1;
}
