#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "cll/baselines.hpp"
#include "cll/solver.hpp"
#include "cll/synthgen.hpp"

namespace cll {

/// Relative singular-value cutoff used for rank and pseudoinverse.
inline constexpr double kRankTolerance = 1e-10;

/// Thin SVD of A with the numerical rank under kRankTolerance * sigma_max.
struct Decomposition {
  Matrix u;
  Vector singular_values;
  Matrix v;
  Eigen::Index rank = 0;

  explicit Decomposition(const Matrix& a) {
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    v = svd.matrixV();
    singular_values = svd.singularValues();
    const double cutoff = singular_values.size() ? kRankTolerance * singular_values[0] : 0.0;
    rank = (singular_values.array() > cutoff).count();
  }

  /// A^+ x
  Vector pinv_apply(const Vector& x) const {
    Vector coeffs = u.leftCols(rank).transpose() * x;
    coeffs.array() /= singular_values.head(rank).array();
    return v.leftCols(rank) * coeffs;
  }

  Matrix pinv() const {
    return v.leftCols(rank) * singular_values.head(rank).cwiseInverse().asDiagonal() * u.leftCols(rank).transpose();
  }
};

inline Eigen::Index numerical_rank(const Matrix& a) { return Decomposition(a).rank; }

/// Lower bound on the distance between any feasible labeling and the fully
/// wrong labeling (1 - y), with its singular-value decomposition.
struct BoundReport {
  double bound_value = 0.0;
  /// bound_value / sqrt(nK); reaches 1 when only the true labels are feasible.
  double normalized_bound = 0.0;
  Eigen::Index rank = 0;
  /// Singular values of A^+: 1/sigma for the retained singular values of A,
  /// ordered to match p_vector. Dropped directions contribute 0.
  Vector singular_values;
  Vector p_vector;
  /// Multiplier in front of the norm: n for the binary non-abstaining case.
  double scale = 0.0;
  /// Inputs outside the binary, full-coverage case the theorem covers.
  bool extended_regime = false;
  std::vector<std::string> warnings;

  /// scale * sqrt(sum_j sigma_j^2 p_j^2)
  double from_decomposition() const {
    return scale * std::sqrt((singular_values.array().square() * p_vector.array().square()).sum());
  }
};

namespace detail {

/// Per-row right-hand side whose pseudoinverse image has norm bound/scale.
/// Row i carries (n_i / nK)(1 - 2 eps_i); with full coverage every ratio is 1.
inline Vector weighted_margins(const ConstraintSystem& sys, const ErrorRateVector& eps) {
  const double total = static_cast<double>(sys.cols());
  Vector q(static_cast<Eigen::Index>(sys.rows()));
  for (std::size_t i = 0; i < sys.rows(); ++i) {
    q[static_cast<Eigen::Index>(i)] = static_cast<double>(sys.coverage()[i]) / total * (1.0 - 2.0 * eps[i]);
  }
  return q;
}

}  // namespace detail

/// n ||A^+ (1 - 2 eps)|| for the binary non-abstaining case.
///
/// With abstentions or several classes the same projection argument gives
/// ||A^+ diag(n_i)(1 - 2 eps)||, which reduces to the binary formula under
/// full coverage. That generalization is computed and the report is flagged
/// as extended.
inline BoundReport pseudoinverse_bound(const ConstraintSystem& sys, const ErrorRateVector& eps) {
  if (eps.size() != sys.rows()) throw DimensionError("error-rate vector length does not match rows of A");
  BoundReport report;
  const auto& ix = sys.indexing();
  for (std::size_t i = 0; i < sys.rows(); ++i) {
    if (sys.coverage()[i] != sys.cols()) {
      report.extended_regime = true;
      report.warnings.push_back("signals abstain; bound uses the coverage-weighted extension");
      break;
    }
  }
  if (ix.num_classes() > 1) {
    report.extended_regime = true;
    report.warnings.push_back("multi-class labels; bound uses the flattened label vector");
  }

  const Decomposition svd(sys.dense());
  report.rank = svd.rank;
  report.scale = static_cast<double>(sys.cols());
  const Vector q = detail::weighted_margins(sys, eps);
  report.p_vector = svd.u.transpose() * q;
  report.singular_values = Vector::Zero(svd.singular_values.size());
  report.singular_values.head(svd.rank) = svd.singular_values.head(svd.rank).cwiseInverse();
  report.bound_value = report.scale * svd.pinv_apply(q).norm();
  report.normalized_bound = report.bound_value / std::sqrt(report.scale);
  return report;
}

struct Projection {
  double distance = 0.0;
  Vector point;
  /// False when A y = c has no solution; point is then the least-squares
  /// projection and `residual` its remaining ||A y - c||.
  bool consistent = true;
  double residual = 0.0;
};

/// Closest point to `point` on the affine set {y : A y = c}, without the
/// unit-box constraint.
inline Projection projection_oracle(const ConstraintSystem& sys, const Vector& point) {
  if (static_cast<std::size_t>(point.size()) != sys.cols()) throw DimensionError("point length does not match A");
  const Matrix a = sys.dense();
  const Decomposition svd(a);
  const Vector correction = svd.pinv_apply(a * point - sys.c());
  Projection out;
  out.point = point - correction;
  out.distance = correction.norm();
  out.residual = (a * out.point - sys.c()).norm();
  const double scale = sys.c().norm() + (a.cwiseAbs().rowwise().sum().maxCoeff()) * (point.norm() + 1.0);
  out.consistent = out.residual <= 1e-9 * scale;
  return out;
}

struct RankSweepRow {
  std::size_t replaced = 0;
  Eigen::Index rank = 0;
  double cll_label_error = 0.0;
  double mv_label_error = 0.0;
  double bound_value = 0.0;
  double final_residual = 0.0;
};

using SolveFn = std::function<SolverResult(const ConstraintSystem&)>;

/// Rank sweep over a RankFamily: at each scheduled replacement count, solve
/// with the signals' true errors and compare against majority vote.
inline std::vector<RankSweepRow> rank_sweep(const RankFamily& family, std::size_t steps, const SolveFn& solve_fn) {
  std::vector<RankSweepRow> rows;
  for (std::size_t t : family.schedule(steps)) {
    const auto set = family.at(t);
    const auto eps = true_errors(set, family.truth());
    const auto sys = build(set, eps);
    const auto result = solve_fn(sys);
    RankSweepRow row;
    row.replaced = t;
    row.rank = numerical_rank(sys.dense());
    row.cll_label_error = 1.0 - label_accuracy(result.labels, family.truth());
    row.mv_label_error = 1.0 - label_accuracy(majority_vote(set), family.truth());
    row.bound_value = pseudoinverse_bound(sys, eps).bound_value;
    row.final_residual = result.max_final_residual();
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<RankSweepRow> rank_sweep(const RankFamily& family, std::size_t steps, const SolverConfig& cfg) {
  return rank_sweep(family, steps, [&cfg](const ConstraintSystem& sys) { return solve(sys, cfg); });
}

/// Sweep starting from `num_signals` copies of `base`, replacing copies with
/// uniform random signals drawn from `seed`.
inline std::vector<RankSweepRow> rank_sweep(const WeakSignal& base, const LabelEstimate& truth, std::size_t steps,
                                            std::uint64_t seed, std::size_t num_signals = 100,
                                            const SolverConfig& cfg = {}) {
  const RankFamily family(base, truth, num_signals, seed);
  return rank_sweep(family, steps, cfg);
}

inline void write_rank_sweep_csv(std::ostream& os, const std::vector<RankSweepRow>& rows) {
  os << "rank,cll_label_error,mv_label_error,bound_value\n";
  const auto old = os.precision(10);
  for (const auto& r : rows) {
    os << r.rank << ',' << r.cll_label_error << ',' << r.mv_label_error << ',' << r.bound_value << '\n';
  }
  os.precision(old);
}

}  // namespace cll
