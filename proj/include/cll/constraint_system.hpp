#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "cll/signal_model.hpp"

namespace cll {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Fraction of a signal's labeled entries that disagree with `labels`,
/// counted softly: (1/n_i) * sum over labeled t of (1 - 2 w_t) y_t + w_t.
inline double empirical_error(const WeakSignal& signal, const LabelEstimate& labels) {
  if (!(signal.indexing() == labels.indexing())) throw DimensionError("signal and labels differ in indexing");
  if (signal.coverage() == 0) throw ValidationError("signal has zero coverage");
  double sum = 0.0;
  for (std::size_t t = 0; t < signal.size(); ++t) {
    if (signal.abstains(t)) continue;
    const double w = signal.value(t);
    sum += (1.0 - 2.0 * w) * labels[t] + w;
  }
  return sum / static_cast<double>(signal.coverage());
}

inline ErrorRateVector true_errors(const WeakSignalSet& set, const LabelEstimate& truth) {
  Vector eps(static_cast<Eigen::Index>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) eps[static_cast<Eigen::Index>(i)] = empirical_error(set[i], truth);
  return {std::move(eps), ErrorSource::kTrue};
}

enum class Storage { kAuto, kDense, kSparse };

/// The linear system A y = c whose solutions reproduce every signal's
/// expected error. Row i is the signal mapped to 1 - 2 w on its labeled
/// entries and 0 where it abstains; c_i = n_i eps_i - sum of labeled w.
class ConstraintSystem {
 public:
  const ClassIndexing& indexing() const noexcept { return indexing_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(c_.size()); }
  std::size_t cols() const noexcept { return indexing_.size(); }
  const Vector& c() const noexcept { return c_; }
  const std::vector<std::size_t>& coverage() const noexcept { return coverage_; }
  bool is_sparse() const noexcept { return sparse_; }

  /// A x
  Vector apply(const Vector& x) const {
    check_cols(x);
    return sparse_ ? Vector(sparse_a_ * x) : Vector(dense_a_ * x);
  }

  /// A^T r
  Vector apply_transpose(const Vector& r) const {
    if (static_cast<std::size_t>(r.size()) != rows()) throw DimensionError("vector length does not match rows of A");
    return sparse_ ? Vector(sparse_a_.transpose() * r) : Vector(dense_a_.transpose() * r);
  }

  Matrix dense() const { return sparse_ ? Matrix(sparse_a_) : dense_a_; }

  std::size_t row_nonzeros(std::size_t i) const {
    if (sparse_) {
      return static_cast<std::size_t>(sparse_a_.outerIndexPtr()[i + 1] - sparse_a_.outerIndexPtr()[i]);
    }
    return static_cast<std::size_t>((dense_a_.row(static_cast<Eigen::Index>(i)).array() != 0.0).count());
  }

  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  /// Nonzeros of A in row-major order.
  std::vector<Triplet> nonzeros() const {
    std::vector<Triplet> out;
    if (sparse_) {
      for (Eigen::Index r = 0; r < sparse_a_.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(sparse_a_, r); it; ++it) {
          out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(it.col()), it.value()});
        }
      }
    } else {
      for (Eigen::Index r = 0; r < dense_a_.rows(); ++r) {
        for (Eigen::Index col = 0; col < dense_a_.cols(); ++col) {
          if (dense_a_(r, col) != 0.0) {
            out.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(col), dense_a_(r, col)});
          }
        }
      }
    }
    return out;
  }

  friend ConstraintSystem build(const WeakSignalSet& set, const ErrorRateVector& eps, Storage storage);
  friend ConstraintSystem make_system(const Matrix& a, const Vector& c, const ClassIndexing& indexing,
                                      Storage storage);

 private:
  void check_cols(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != cols()) throw DimensionError("vector length does not match columns of A");
  }

  ClassIndexing indexing_;
  bool sparse_ = false;
  Matrix dense_a_;
  SparseMatrix sparse_a_;
  Vector c_;
  std::vector<std::size_t> coverage_;
};

inline ConstraintSystem build(const WeakSignalSet& set, const ErrorRateVector& eps, Storage storage = Storage::kAuto) {
  if (eps.size() != set.size()) {
    throw DimensionError("got " + std::to_string(eps.size()) + " error rates for " + std::to_string(set.size()) +
                         " signals");
  }
  const auto m = static_cast<Eigen::Index>(set.size());
  const auto cols = static_cast<Eigen::Index>(set.indexing().size());

  ConstraintSystem sys;
  sys.indexing_ = set.indexing();
  sys.c_.resize(m);

  std::size_t labeled = 0;
  for (const auto& s : set) labeled += s.coverage();
  const double abstain_fraction =
      1.0 - static_cast<double>(labeled) / (static_cast<double>(m) * static_cast<double>(cols));
  sys.sparse_ = storage == Storage::kSparse || (storage == Storage::kAuto && abstain_fraction > 0.5);

  std::vector<Eigen::Triplet<double>> triplets;
  if (sys.sparse_) {
    triplets.reserve(labeled);
  } else {
    sys.dense_a_ = Matrix::Zero(m, cols);
  }

  for (Eigen::Index i = 0; i < m; ++i) {
    const WeakSignal& s = set[static_cast<std::size_t>(i)];
    double signal_sum = 0.0;
    for (Eigen::Index t = 0; t < cols; ++t) {
      const auto ut = static_cast<std::size_t>(t);
      if (s.abstains(ut)) continue;
      const double w = s.value(ut);
      signal_sum += w;
      if (sys.sparse_) {
        triplets.emplace_back(i, t, 1.0 - 2.0 * w);
      } else {
        sys.dense_a_(i, t) = 1.0 - 2.0 * w;
      }
    }
    sys.coverage_.push_back(s.coverage());
    sys.c_[i] = static_cast<double>(s.coverage()) * eps[static_cast<std::size_t>(i)] - signal_sum;
  }

  if (sys.sparse_) {
    sys.sparse_a_.resize(m, cols);
    // Explicit zeros (w = 0.5) are kept so the pattern matches the coverage.
    sys.sparse_a_.setFromTriplets(triplets.begin(), triplets.end());
  }
  return sys;
}

/// System from an explicit matrix; coverage is the count of nonzeros per row.
inline ConstraintSystem make_system(const Matrix& a, const Vector& c, const ClassIndexing& indexing,
                                    Storage storage = Storage::kDense) {
  if (a.rows() != c.size()) throw DimensionError("A and c disagree on the number of rows");
  if (static_cast<std::size_t>(a.cols()) != indexing.size()) throw DimensionError("A columns do not match indexing");
  if (a.rows() == 0) throw ValidationError("a constraint system needs at least one row");
  ConstraintSystem sys;
  sys.indexing_ = indexing;
  sys.c_ = c;
  sys.sparse_ = storage == Storage::kSparse;
  if (sys.sparse_) {
    sys.sparse_a_ = a.sparseView();
  } else {
    sys.dense_a_ = a;
  }
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    sys.coverage_.push_back(static_cast<std::size_t>((a.row(i).array() != 0.0).count()));
  }
  return sys;
}

/// ||A y - c||^2
inline double residual(const ConstraintSystem& sys, const Vector& y) { return (sys.apply(y) - sys.c()).squaredNorm(); }

inline double residual(const ConstraintSystem& sys, const LabelEstimate& labels) {
  if (!(labels.indexing() == sys.indexing())) throw DimensionError("labels and system differ in indexing");
  return residual(sys, labels.values());
}

}  // namespace cll
