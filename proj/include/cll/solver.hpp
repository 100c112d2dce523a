#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "cll/constraint_system.hpp"
#include "cll/random.hpp"

namespace cll {

struct SolverConfig {
  std::size_t num_restarts = 3;
  std::size_t max_iters = 200;
  double base_step = 0.1;
  double adagrad_epsilon = 1e-8;
  std::uint64_t seed = 42;
  /// Stop a restart once its residual falls to this value. Off by default so
  /// every restart runs the full iteration budget.
  std::optional<double> residual_tolerance;

  void check() const {
    if (num_restarts < 1) throw ValidationError("num_restarts must be at least 1");
    if (max_iters < 1) throw ValidationError("max_iters must be at least 1");
    if (!(base_step > 0.0)) throw ValidationError("base_step must be positive");
    if (!(adagrad_epsilon > 0.0)) throw ValidationError("adagrad_epsilon must be positive");
  }
};

struct SolverResult {
  /// Entrywise mean of per_restart_labels.
  LabelEstimate labels;
  std::vector<LabelEstimate> per_restart_labels;
  std::vector<double> initial_residuals;
  std::vector<double> final_residuals;
  /// trace[r][k] is the residual of restart r after k updates; trace[r][0]
  /// is the random starting point.
  std::vector<std::vector<double>> trace;
  /// Some restart ended above the feasibility threshold.
  bool infeasible = false;
  double feasibility_threshold = 0.0;

  double max_final_residual() const {
    double m = 0.0;
    for (double r : final_residuals) m = std::max(m, r);
    return m;
  }
};

/// Called after every clipped update with (restart, iteration, iterate).
using IterateObserver = std::function<void(std::size_t, std::size_t, const Vector&)>;

/// Gradient of ||A y - c||^2, i.e. 2 A^T (A y - c).
inline Vector gradient(const ConstraintSystem& sys, const Vector& y) {
  return 2.0 * sys.apply_transpose(sys.apply(y) - sys.c());
}

/// Residual at or below which a solve counts as feasible: 1e-3 per row.
inline double feasibility_threshold(const ConstraintSystem& sys) { return 1e-3 * static_cast<double>(sys.rows()); }

namespace detail {

struct RestartOutcome {
  Vector best;
  double initial_residual = 0.0;
  double best_residual = 0.0;
  std::vector<double> trace;
};

/// One restart: uniform start, projected Adagrad with clipping to the unit
/// box after each step, keeping the lowest-residual iterate.
inline RestartOutcome run_restart(const ConstraintSystem& sys, const SolverConfig& cfg, std::size_t restart,
                                  const IterateObserver& observer) {
  Rng rng(derive_seed(cfg.seed, restart));
  const auto dim = static_cast<Eigen::Index>(sys.cols());
  Vector y(dim);
  for (Eigen::Index t = 0; t < dim; ++t) y[t] = rng.uniform();

  Vector accum = Vector::Zero(dim);
  RestartOutcome out;
  Vector r = sys.apply(y) - sys.c();
  out.initial_residual = r.squaredNorm();
  out.best = y;
  out.best_residual = out.initial_residual;
  out.trace.reserve(cfg.max_iters + 1);
  out.trace.push_back(out.initial_residual);

  for (std::size_t k = 1; k <= cfg.max_iters; ++k) {
    const Vector g = 2.0 * sys.apply_transpose(r);
    accum.array() += g.array().square();
    y.array() -= cfg.base_step * g.array() / (accum.array().sqrt() + cfg.adagrad_epsilon);
    y = y.cwiseMax(0.0).cwiseMin(1.0);
    if (observer) observer(restart, k, y);

    r = sys.apply(y) - sys.c();
    const double res = r.squaredNorm();
    out.trace.push_back(res);
    if (res < out.best_residual) {
      out.best_residual = res;
      out.best = y;
    }
    if (cfg.residual_tolerance && res <= *cfg.residual_tolerance) break;
  }
  return out;
}

}  // namespace detail

/// Multi-restart constrained labeling. Each restart draws its own start
/// from a seed derived from (cfg.seed, restart index), so the result does
/// not depend on the order restarts run in.
inline SolverResult solve(const ConstraintSystem& sys, const SolverConfig& cfg = {},
                          const IterateObserver& observer = {}) {
  cfg.check();
  if (sys.rows() == 0) throw ValidationError("constraint system has no rows");

  std::vector<detail::RestartOutcome> outcomes;
  outcomes.reserve(cfg.num_restarts);
  for (std::size_t r = 0; r < cfg.num_restarts; ++r) outcomes.push_back(detail::run_restart(sys, cfg, r, observer));

  Vector mean = Vector::Zero(static_cast<Eigen::Index>(sys.cols()));
  for (const auto& o : outcomes) mean += o.best;
  mean /= static_cast<double>(outcomes.size());

  SolverResult result{LabelEstimate(sys.indexing(), mean), {}, {}, {}, {}, false, feasibility_threshold(sys)};
  for (auto& o : outcomes) {
    result.per_restart_labels.emplace_back(sys.indexing(), std::move(o.best));
    result.initial_residuals.push_back(o.initial_residual);
    result.final_residuals.push_back(o.best_residual);
    result.trace.push_back(std::move(o.trace));
    if (o.best_residual > result.feasibility_threshold) result.infeasible = true;
  }
  return result;
}

/// Residual trace as CSV: iteration,restart,residual.
inline void write_trace_csv(std::ostream& os, const SolverResult& result) {
  os << "iteration,restart,residual\n";
  const auto old_precision = os.precision(17);
  for (std::size_t r = 0; r < result.trace.size(); ++r) {
    for (std::size_t k = 0; k < result.trace[r].size(); ++k) {
      os << k << ',' << r << ',' << result.trace[r][k] << '\n';
    }
  }
  os.precision(old_precision);
}

}  // namespace cll
