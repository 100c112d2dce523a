#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cll/constraint_system.hpp"
#include "cll/random.hpp"

namespace cll {

using FeatureMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// A generated binary task. Features are never read by the label models;
/// they exist so a downstream classifier can be trained on the same draw.
struct SyntheticTask {
  FeatureMatrix features;
  LabelEstimate truth;
  WeakSignalSet signals;
  ErrorRateVector true_errors;
  /// Accuracy each signal was generated with, before sampling noise.
  std::vector<double> target_accuracies;
  std::uint64_t seed = 0;
};

struct IndependentParams {
  std::size_t num_examples = 20000;
  std::size_t num_features = 200;
  std::size_t num_signals = 10;
  double coverage = 0.3;
  double min_accuracy = 0.6;
  double max_accuracy = 0.7;
};

/// Paper-scale defaults for the noisily-copied signal scenario.
struct DependentParams {
  std::size_t num_examples = 20000;
  std::size_t num_features = 200;
  std::size_t num_copies = 9;
  double coverage = 0.3;
  double min_accuracy = 0.5;
  double max_accuracy = 0.6;
  double flip_probability = 0.2;
};

namespace detail {

/// Exactly floor(n/2) positives in random order.
inline std::vector<std::size_t> balanced_classes(std::size_t n, Rng& rng) {
  std::vector<std::size_t> classes(n, 0);
  for (std::size_t i = 0; i < n / 2; ++i) classes[i] = 1;
  rng.shuffle(std::span<std::size_t>(classes));
  return classes;
}

/// Each feature column agrees with the label at a rate drawn from [0.5, 0.7].
inline FeatureMatrix correlated_features(const std::vector<std::size_t>& classes, std::size_t d, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(classes.size());
  FeatureMatrix x(n, static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double agree = rng.uniform(0.5, 0.7);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool match = rng.bernoulli(agree);
      const auto y = classes[static_cast<std::size_t>(i)];
      x(i, j) = static_cast<std::uint8_t>(match ? y : 1 - y);
    }
  }
  return x;
}

/// Hard votes on a random support of the given size, each correct with
/// probability `accuracy`.
inline std::vector<std::optional<double>> noisy_votes(const std::vector<std::size_t>& classes, std::size_t support,
                                                     double accuracy, Rng& rng) {
  std::vector<std::optional<double>> votes(classes.size());
  for (std::size_t t : rng.sample_indices(classes.size(), support)) {
    const bool correct = rng.bernoulli(accuracy);
    votes[t] = static_cast<double>(correct ? classes[t] : 1 - classes[t]);
  }
  return votes;
}

inline std::size_t support_size(std::size_t n, double coverage) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(coverage * static_cast<double>(n) - 1e-9)));
}

inline void check_probability(double p, const char* what) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(std::string(what) + " must lie in [0,1]");
}

}  // namespace detail

/// Independent signals with random partial supports and per-signal
/// accuracy drawn uniformly from [min_accuracy, max_accuracy].
inline SyntheticTask gen_independent(const IndependentParams& p, std::uint64_t seed) {
  if (p.num_examples < 2 || p.num_signals < 1) throw ValidationError("degenerate task size");
  if (!(p.coverage > 0.0 && p.coverage <= 1.0)) throw ValidationError("coverage must lie in (0,1]");
  detail::check_probability(p.min_accuracy, "min_accuracy");
  detail::check_probability(p.max_accuracy, "max_accuracy");
  if (p.min_accuracy > p.max_accuracy) throw ValidationError("accuracy range is empty");

  Rng rng(seed);
  const ClassIndexing ix(p.num_examples, 1);
  const auto classes = detail::balanced_classes(p.num_examples, rng);
  auto features = detail::correlated_features(classes, p.num_features, rng);
  auto truth = LabelEstimate::from_classes(ix, classes);

  std::vector<WeakSignal> signals;
  std::vector<double> targets;
  const auto support = detail::support_size(p.num_examples, p.coverage);
  for (std::size_t i = 0; i < p.num_signals; ++i) {
    const double acc = rng.uniform(p.min_accuracy, p.max_accuracy);
    targets.push_back(acc);
    signals.emplace_back("signal_" + std::to_string(i + 1), ix, detail::noisy_votes(classes, support, acc, rng));
  }
  WeakSignalSet set(ix, std::move(signals));
  auto eps = true_errors(set, truth);
  return {std::move(features), std::move(truth), std::move(set), std::move(eps), std::move(targets), seed};
}

/// One base signal plus noisy copies that flip each of its labels
/// independently. Copies share the base signal's support.
inline SyntheticTask gen_dependent(const DependentParams& p, std::uint64_t seed) {
  if (p.num_examples < 2) throw ValidationError("degenerate task size");
  if (!(p.coverage > 0.0 && p.coverage <= 1.0)) throw ValidationError("coverage must lie in (0,1]");
  detail::check_probability(p.flip_probability, "flip_probability");

  Rng rng(seed);
  const ClassIndexing ix(p.num_examples, 1);
  const auto classes = detail::balanced_classes(p.num_examples, rng);
  auto features = detail::correlated_features(classes, p.num_features, rng);
  auto truth = LabelEstimate::from_classes(ix, classes);

  const double base_acc = rng.uniform(p.min_accuracy, p.max_accuracy);
  const auto base = detail::noisy_votes(classes, detail::support_size(p.num_examples, p.coverage), base_acc, rng);

  std::vector<WeakSignal> signals;
  std::vector<double> targets{base_acc};
  signals.emplace_back("base", ix, base);
  const double copy_acc = base_acc * (1.0 - p.flip_probability) + (1.0 - base_acc) * p.flip_probability;
  for (std::size_t c = 0; c < p.num_copies; ++c) {
    auto copy = base;
    for (auto& v : copy) {
      if (v && rng.bernoulli(p.flip_probability)) v = 1.0 - *v;
    }
    signals.emplace_back("copy_" + std::to_string(c + 1), ix, copy);
    targets.push_back(copy_acc);
  }
  WeakSignalSet set(ix, std::move(signals));
  auto eps = true_errors(set, truth);
  return {std::move(features), std::move(truth), std::move(set), std::move(eps), std::move(targets), seed};
}

/// Signal pool for the rank sweep: a full-coverage base signal and
/// `num_signals` independent uniform soft signals over the same examples.
class RankFamily {
 public:
  RankFamily(WeakSignal base, LabelEstimate truth, std::size_t num_signals, std::uint64_t seed,
             FeatureMatrix features = {})
      : truth_(std::move(truth)), features_(std::move(features)), num_signals_(num_signals) {
    if (num_signals < 1) throw ValidationError("rank family needs at least one signal");
    if (!(base.indexing() == truth_.indexing())) throw DimensionError("base signal and truth differ in indexing");
    if (base.coverage() != base.size()) throw ValidationError("rank sweep base signal must label every entry");
    base_.push_back(std::move(base));
    const auto& ix = truth_.indexing();
    Rng rng(seed);
    for (std::size_t i = 0; i < num_signals; ++i) {
      std::vector<std::optional<double>> r(ix.size());
      for (auto& v : r) v = rng.uniform();
      random_.emplace_back("random_" + std::to_string(i + 1), ix, r);
    }
  }

  const LabelEstimate& truth() const noexcept { return truth_; }
  const WeakSignal& base() const { return base_.front(); }
  const FeatureMatrix& features() const noexcept { return features_; }
  std::size_t num_signals() const noexcept { return num_signals_; }

  /// `replaced` random signals followed by (num_signals - replaced) copies
  /// of the base signal.
  WeakSignalSet at(std::size_t replaced) const {
    if (replaced > num_signals_) throw ValidationError("cannot replace more signals than the family holds");
    std::vector<WeakSignal> s(random_.begin(), random_.begin() + static_cast<std::ptrdiff_t>(replaced));
    for (std::size_t i = replaced; i < num_signals_; ++i) s.push_back(base());
    return {truth_.indexing(), std::move(s)};
  }

  /// Replacement counts 0 = t_0 < t_1 < ... <= num_signals, `steps` points
  /// after 0, evenly spaced.
  std::vector<std::size_t> schedule(std::size_t steps) const {
    if (steps < 1) throw ValidationError("a sweep needs at least one step");
    std::vector<std::size_t> out{0};
    for (std::size_t k = 1; k <= steps; ++k) {
      const std::size_t t = (k * num_signals_ + steps / 2) / steps;
      if (t != out.back()) out.push_back(t);
    }
    return out;
  }

 private:
  LabelEstimate truth_;
  FeatureMatrix features_;
  std::size_t num_signals_;
  std::vector<WeakSignal> base_;
  std::vector<WeakSignal> random_;
};

struct RankFamilyParams {
  std::size_t num_examples = 100;
  std::size_t num_features = 20;
  std::size_t num_signals = 100;
};

/// Balanced binary truth, decorative features, and a random binary base
/// signal; the random replacement pool is drawn from the same seed.
inline RankFamily gen_rank_family(const RankFamilyParams& p, std::uint64_t seed) {
  if (p.num_examples < 2) throw ValidationError("degenerate task size");
  Rng rng(seed);
  const ClassIndexing ix(p.num_examples, 1);
  const auto classes = detail::balanced_classes(p.num_examples, rng);
  auto features = detail::correlated_features(classes, p.num_features, rng);
  std::vector<std::optional<double>> base(p.num_examples);
  for (auto& v : base) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return {WeakSignal("base", ix, base), LabelEstimate::from_classes(ix, classes), p.num_signals,
          derive_seed(seed, 1), std::move(features)};
}

}  // namespace cll
