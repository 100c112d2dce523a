#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cll/errors.hpp"

namespace cll {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Layout of the flattened example-by-class label vector.
///
/// Entries are grouped by class: all n examples for class 0, then all n
/// for class 1, and so on. A binary task uses a single class block whose
/// entries are the probability of the positive class.
class ClassIndexing {
 public:
  ClassIndexing() = default;
  ClassIndexing(std::size_t num_examples, std::size_t num_classes)
      : num_examples_(num_examples), num_classes_(num_classes) {
    if (num_examples == 0) throw ValidationError("num_examples must be positive");
    if (num_classes == 0) throw ValidationError("num_classes must be positive");
  }

  std::size_t num_examples() const noexcept { return num_examples_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  std::size_t size() const noexcept { return num_examples_ * num_classes_; }

  std::size_t flat(std::size_t example, std::size_t cls) const noexcept {
    return cls * num_examples_ + example;
  }
  std::size_t example_of(std::size_t flat_index) const noexcept { return flat_index % num_examples_; }
  std::size_t class_of(std::size_t flat_index) const noexcept { return flat_index / num_examples_; }

  friend bool operator==(const ClassIndexing&, const ClassIndexing&) = default;

 private:
  std::size_t num_examples_ = 0;
  std::size_t num_classes_ = 0;
};

/// One labeling source. Abstentions are kept in a separate mask; the value
/// stored under an abstaining entry is always 0 and never read.
class WeakSignal {
 public:
  WeakSignal(std::string name, ClassIndexing indexing, const std::vector<std::optional<double>>& entries,
             std::optional<std::size_t> target_class = std::nullopt)
      : name_(std::move(name)), indexing_(indexing), target_class_(target_class) {
    if (entries.size() != indexing.size()) {
      throw DimensionError("signal '" + name_ + "' has " + std::to_string(entries.size()) +
                           " entries, expected " + std::to_string(indexing.size()));
    }
    if (target_class_ && *target_class_ >= indexing.num_classes()) {
      throw ValidationError("signal '" + name_ + "' targets class " + std::to_string(*target_class_) +
                            " of " + std::to_string(indexing.num_classes()));
    }
    values_.assign(entries.size(), 0.0);
    labeled_.assign(entries.size(), false);
    for (std::size_t t = 0; t < entries.size(); ++t) {
      if (!entries[t]) continue;
      const double v = *entries[t];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("signal '" + name_ + "' entry " + std::to_string(t) + " = " + std::to_string(v) +
                              " is outside [0,1]");
      }
      if (target_class_ && indexing.class_of(t) != *target_class_) {
        throw ValidationError("signal '" + name_ + "' labels entry " + std::to_string(t) +
                              " outside its target class");
      }
      values_[t] = v;
      labeled_[t] = true;
      ++coverage_;
    }
    if (coverage_ == 0) throw ValidationError("signal '" + name_ + "' abstains on every entry");
  }

  const std::string& name() const noexcept { return name_; }
  const ClassIndexing& indexing() const noexcept { return indexing_; }
  std::optional<std::size_t> target_class() const noexcept { return target_class_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Number of non-abstaining entries.
  std::size_t coverage() const noexcept { return coverage_; }

  bool labels(std::size_t t) const { return labeled_[t]; }
  bool abstains(std::size_t t) const { return !labeled_[t]; }
  double value(std::size_t t) const { return values_[t]; }
  std::optional<double> entry(std::size_t t) const {
    return labeled_[t] ? std::optional<double>(values_[t]) : std::nullopt;
  }

  std::vector<std::optional<double>> entries() const {
    std::vector<std::optional<double>> out(size());
    for (std::size_t t = 0; t < size(); ++t) out[t] = entry(t);
    return out;
  }

  friend bool operator==(const WeakSignal& a, const WeakSignal& b) {
    return a.name_ == b.name_ && a.indexing_ == b.indexing_ && a.target_class_ == b.target_class_ &&
           a.labeled_ == b.labeled_ && a.values_ == b.values_;
  }

 private:
  std::string name_;
  ClassIndexing indexing_;
  std::optional<std::size_t> target_class_;
  std::vector<double> values_;
  std::vector<bool> labeled_;
  std::size_t coverage_ = 0;
};

class WeakSignalSet {
 public:
  WeakSignalSet(ClassIndexing indexing, std::vector<WeakSignal> signals)
      : indexing_(indexing), signals_(std::move(signals)) {
    if (signals_.empty()) throw ValidationError("a signal set needs at least one signal");
    for (const auto& s : signals_) {
      if (!(s.indexing() == indexing_)) {
        throw DimensionError("signal '" + s.name() + "' does not share the set's indexing");
      }
    }
  }

  const ClassIndexing& indexing() const noexcept { return indexing_; }
  std::size_t size() const noexcept { return signals_.size(); }
  const WeakSignal& operator[](std::size_t i) const { return signals_[i]; }
  const std::vector<WeakSignal>& signals() const noexcept { return signals_; }
  auto begin() const noexcept { return signals_.begin(); }
  auto end() const noexcept { return signals_.end(); }

  friend bool operator==(const WeakSignalSet&, const WeakSignalSet&) = default;

 private:
  ClassIndexing indexing_;
  std::vector<WeakSignal> signals_;
};

enum class ErrorSource { kTrue, kUniform, kAgreement };

inline const char* to_string(ErrorSource s) {
  switch (s) {
    case ErrorSource::kTrue: return "true";
    case ErrorSource::kUniform: return "uniform";
    case ErrorSource::kAgreement: return "agreement";
  }
  return "unknown";
}

inline ErrorSource error_source_from_string(const std::string& s) {
  if (s == "true") return ErrorSource::kTrue;
  if (s == "uniform") return ErrorSource::kUniform;
  if (s == "agreement") return ErrorSource::kAgreement;
  throw ValidationError("unknown error-rate source '" + s + "'");
}

/// Expected error rate per signal, aligned with the signal set order.
class ErrorRateVector {
 public:
  ErrorRateVector(Vector values, ErrorSource source) : values_(std::move(values)), source_(source) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (!(values_[i] >= 0.0 && values_[i] <= 1.0)) {
        throw ValidationError("error rate " + std::to_string(i) + " = " + std::to_string(values_[i]) +
                              " is outside [0,1]");
      }
    }
  }

  const Vector& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  ErrorSource source() const noexcept { return source_; }

 private:
  Vector values_;
  ErrorSource source_;
};

/// Probabilistic labels over the flat index; ground truth uses the same type
/// with 0/1 entries.
class LabelEstimate {
 public:
  LabelEstimate(ClassIndexing indexing, Vector values) : indexing_(indexing), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != indexing_.size()) {
      throw DimensionError("label vector has " + std::to_string(values_.size()) + " entries, expected " +
                           std::to_string(indexing_.size()));
    }
    for (Eigen::Index t = 0; t < values_.size(); ++t) {
      if (!(values_[t] >= 0.0 && values_[t] <= 1.0)) {
        throw ValidationError("label entry " + std::to_string(t) + " is outside [0,1]");
      }
    }
  }

  /// One-hot truth from class assignments (binary: class 1 is positive).
  static LabelEstimate from_classes(ClassIndexing indexing, const std::vector<std::size_t>& classes) {
    if (classes.size() != indexing.num_examples()) throw DimensionError("class list length mismatch");
    Vector v = Vector::Zero(static_cast<Eigen::Index>(indexing.size()));
    for (std::size_t i = 0; i < classes.size(); ++i) {
      if (indexing.num_classes() == 1) {
        if (classes[i] > 1) throw ValidationError("binary class must be 0 or 1");
        v[static_cast<Eigen::Index>(i)] = static_cast<double>(classes[i]);
      } else {
        if (classes[i] >= indexing.num_classes()) throw ValidationError("class index out of range");
        v[static_cast<Eigen::Index>(indexing.flat(i, classes[i]))] = 1.0;
      }
    }
    return {indexing, std::move(v)};
  }

  const ClassIndexing& indexing() const noexcept { return indexing_; }
  const Vector& values() const noexcept { return values_; }
  double operator[](std::size_t t) const { return values_[static_cast<Eigen::Index>(t)]; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

 private:
  ClassIndexing indexing_;
  Vector values_;
};

enum class Severity { kWarning, kError };

struct ValidationIssue {
  Severity severity;
  std::string message;
  std::optional<std::size_t> signal;
  std::optional<std::size_t> entry;
};

struct ValidationReport {
  std::vector<std::size_t> coverage;
  /// Flat entries that no signal labels.
  std::vector<std::size_t> union_gaps;
  std::vector<ValidationIssue> issues;

  bool ok() const {
    return std::none_of(issues.begin(), issues.end(),
                        [](const ValidationIssue& i) { return i.severity == Severity::kError; });
  }
};

/// Coverage statistics and union-coverage gaps. Range and shape violations
/// cannot reach here because the types reject them on construction.
inline ValidationReport validate(const WeakSignalSet& set) {
  ValidationReport report;
  const std::size_t total = set.indexing().size();
  std::vector<bool> covered(total, false);
  for (std::size_t i = 0; i < set.size(); ++i) {
    report.coverage.push_back(set[i].coverage());
    for (std::size_t t = 0; t < total; ++t) {
      if (set[i].labels(t)) covered[t] = true;
    }
  }
  for (std::size_t t = 0; t < total; ++t) {
    if (!covered[t]) report.union_gaps.push_back(t);
  }
  if (!report.union_gaps.empty()) {
    report.issues.push_back({Severity::kWarning,
                             std::to_string(report.union_gaps.size()) + " of " + std::to_string(total) +
                                 " entries are not labeled by any signal",
                             std::nullopt, report.union_gaps.front()});
  }
  return report;
}

/// Class assignment per example: argmax over the example's class entries,
/// lowest class on ties; binary tasks threshold at 0.5 with 0.5 -> class 0.
inline std::vector<std::size_t> hard_labels(const LabelEstimate& est) {
  const auto& ix = est.indexing();
  std::vector<std::size_t> out(ix.num_examples(), 0);
  for (std::size_t i = 0; i < ix.num_examples(); ++i) {
    if (ix.num_classes() == 1) {
      out[i] = est[i] > 0.5 ? 1 : 0;
      continue;
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < ix.num_classes(); ++k) {
      if (est[ix.flat(i, k)] > est[ix.flat(i, best)]) best = k;
    }
    out[i] = best;
  }
  return out;
}

inline double label_accuracy(const LabelEstimate& est, const LabelEstimate& truth) {
  if (!(est.indexing() == truth.indexing())) throw DimensionError("label indexing mismatch");
  const auto a = hard_labels(est);
  const auto b = hard_labels(truth);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

}  // namespace cll
