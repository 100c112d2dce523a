#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "cll/signal_model.hpp"

namespace cll {

/// Same expected error for every signal.
inline ErrorRateVector uniform_errors(const WeakSignalSet& set, double eps0) {
  if (!(eps0 >= 0.0 && eps0 <= 1.0)) throw ValidationError("uniform error rate must lie in [0,1]");
  return {Vector::Constant(static_cast<Eigen::Index>(set.size()), eps0), ErrorSource::kUniform};
}

/// Pairwise agreement of hard-thresholded signals on the entries both label.
struct AgreementMatrix {
  Matrix rates;
  Eigen::MatrixXi overlap_counts;

  bool observed(Eigen::Index i, Eigen::Index j) const { return i != j && overlap_counts(i, j) > 0; }
};

/// Only signals aimed at the same class (or both untargeted) are compared;
/// one-vs-all signals for different classes never share a decision.
inline AgreementMatrix agreement_matrix(const WeakSignalSet& set) {
  const auto m = static_cast<Eigen::Index>(set.size());
  AgreementMatrix am{Matrix::Zero(m, m), Eigen::MatrixXi::Zero(m, m)};
  const std::size_t total = set.indexing().size();
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& si = set[static_cast<std::size_t>(i)];
    am.rates(i, i) = si.coverage() > 0 ? 1.0 : 0.0;
    am.overlap_counts(i, i) = static_cast<int>(si.coverage());
    for (Eigen::Index j = i + 1; j < m; ++j) {
      const auto& sj = set[static_cast<std::size_t>(j)];
      if (si.target_class() != sj.target_class()) continue;
      int shared = 0;
      int agree = 0;
      for (std::size_t t = 0; t < total; ++t) {
        if (si.abstains(t) || sj.abstains(t)) continue;
        ++shared;
        if ((si.value(t) > 0.5) == (sj.value(t) > 0.5)) ++agree;
      }
      am.overlap_counts(i, j) = am.overlap_counts(j, i) = shared;
      if (shared > 0) am.rates(i, j) = am.rates(j, i) = static_cast<double>(agree) / shared;
    }
  }
  return am;
}

struct RankOneFit {
  Vector v;
  std::size_t iterations = 0;
  bool converged = false;
};

namespace detail {

/// Starting point from triplet ratios: under M = v v^T, v_i^2 = M_ij M_ik / M_jk
/// for any distinct j, k. The median over triplets is exact on exact input.
inline Vector triplet_init(const Matrix& centered, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& observed) {
  const Eigen::Index m = centered.rows();
  Vector v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    std::vector<double> ratios;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (j == i || !observed(i, j)) continue;
      for (Eigen::Index k = j + 1; k < m; ++k) {
        if (k == i || !observed(i, k) || !observed(j, k) || std::abs(centered(j, k)) < 1e-12) continue;
        ratios.push_back(std::min(std::abs(centered(i, j) * centered(i, k) / centered(j, k)), 1.0));
      }
    }
    double sq = 0.0;
    if (!ratios.empty()) {
      auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
      std::nth_element(ratios.begin(), mid, ratios.end());
      sq = *mid;
    } else {
      int count = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j != i && observed(i, j)) {
          sq += std::abs(centered(i, j));
          ++count;
        }
      }
      sq = count ? sq / count : 0.0;
    }
    v[i] = std::sqrt(std::max(sq, 1e-6));
  }
  return v;
}

}  // namespace detail

/// Rank-1 fit M ~ v v^T on the observed off-diagonal entries. Alternates
/// between filling the diagonal and missing pairs from the current v and
/// taking the best rank-1 approximation of the filled matrix; each round
/// cannot increase the squared error on observed entries. The procedure
/// treats every signal alike, so reordering signals reorders v. The sign of
/// v is fixed so that sum(v) >= 0.
inline RankOneFit fit_rank_one(const Matrix& centered, const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& observed,
                               std::size_t max_iters = 100, double rel_tol = 1e-9) {
  const Eigen::Index m = centered.rows();
  RankOneFit fit;
  fit.v = detail::triplet_init(centered, observed);
  Matrix filled(m, m);
  for (fit.iterations = 1; fit.iterations <= max_iters; ++fit.iterations) {
    for (Eigen::Index i = 0; i < m; ++i) {
      for (Eigen::Index j = 0; j < m; ++j) {
        filled(i, j) = (i != j && observed(i, j)) ? centered(i, j) : fit.v[i] * fit.v[j];
      }
    }
    const Eigen::SelfAdjointEigenSolver<Matrix> eig(filled);
    const double lambda = eig.eigenvalues()[m - 1];
    Vector next = std::sqrt(std::max(lambda, 0.0)) * eig.eigenvectors().col(m - 1);
    if (next.dot(fit.v) < 0.0) next = -next;
    const double change = (next - fit.v).norm();
    const double scale = std::max(fit.v.norm(), 1e-300);
    fit.v = std::move(next);
    if (change <= rel_tol * scale) {
      fit.converged = true;
      break;
    }
  }
  fit.iterations = std::min(fit.iterations, max_iters);
  if (fit.v.sum() < 0.0) fit.v = -fit.v;
  return fit;
}

struct AgreementEstimate {
  ErrorRateVector errors;
  AgreementMatrix agreement;
  /// v_i = 2 a_i - 1 before clamping.
  Vector centered_accuracy;
  /// Some pair agrees (almost) everywhere, which the independence model
  /// cannot produce from imperfect signals.
  bool degenerate = false;
  bool fell_back = false;
  std::vector<std::string> warnings;
};

/// Error rates from pairwise agreement under conditional independence and
/// balanced classes: 2 agree_ij - 1 = (2 a_i - 1)(2 a_j - 1).
inline AgreementEstimate estimate_agreement_errors(const WeakSignalSet& set) {
  const auto m = static_cast<Eigen::Index>(set.size());
  if (m < 3) throw ValidationError("agreement-rate estimation needs at least 3 signals");

  AgreementMatrix am = agreement_matrix(set);
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> observed(m, m);
  bool any = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      observed(i, j) = am.observed(i, j);
      any = any || observed(i, j);
    }
  }
  if (!any) throw ValidationError("no pair of signals labels a shared entry");

  const Matrix centered = 2.0 * am.rates.array() - 1.0;
  AgreementEstimate out{ErrorRateVector(Vector::Zero(m), ErrorSource::kAgreement), am, Vector::Zero(m), false, false, {}};

  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (observed(i, j) && centered(i, j) > 1.0 - 1e-6) out.degenerate = true;
    }
  }
  if (out.degenerate) out.warnings.push_back("some signals agree everywhere; independence model is violated");

  std::vector<Eigen::Index> isolated;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!observed.row(i).any()) isolated.push_back(i);
  }

  const RankOneFit fit = fit_rank_one(centered, observed);
  const double fallback = 1.0 / static_cast<double>(std::max<std::size_t>(set.indexing().num_classes(), 2));
  if (!fit.v.allFinite()) {
    out.fell_back = true;
    out.warnings.push_back("rank-1 factorization failed; using uniform fallback");
    out.errors = ErrorRateVector(Vector::Constant(m, fallback), ErrorSource::kAgreement);
    return out;
  }

  out.centered_accuracy = fit.v;
  Vector eps(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double acc = std::clamp((1.0 + fit.v[i]) / 2.0, 0.0, 1.0);
    eps[i] = 1.0 - acc;
  }
  for (Eigen::Index i : isolated) {
    eps[i] = fallback;
    out.warnings.push_back("signal '" + set[static_cast<std::size_t>(i)].name() +
                           "' shares no entries with a comparable signal; using uniform fallback");
  }
  out.errors = ErrorRateVector(std::move(eps), ErrorSource::kAgreement);
  return out;
}

inline ErrorRateVector agreement_errors(const WeakSignalSet& set) { return estimate_agreement_errors(set).errors; }

}  // namespace cll
