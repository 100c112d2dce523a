#pragma once

#include "cll/signal_model.hpp"

namespace cll {

/// Entrywise majority of the hard-thresholded (at 0.5) non-abstaining votes.
/// Ties and uncovered entries get 0.5.
inline LabelEstimate majority_vote(const WeakSignalSet& set) {
  const auto total = set.indexing().size();
  Vector out(static_cast<Eigen::Index>(total));
  for (std::size_t t = 0; t < total; ++t) {
    std::size_t ones = 0;
    std::size_t votes = 0;
    for (const auto& s : set) {
      if (s.abstains(t)) continue;
      ++votes;
      if (s.value(t) > 0.5) ++ones;
    }
    const std::size_t zeros = votes - ones;
    out[static_cast<Eigen::Index>(t)] = ones > zeros ? 1.0 : (zeros > ones ? 0.0 : 0.5);
  }
  return {set.indexing(), std::move(out)};
}

/// Entrywise mean of the non-abstaining soft values; 0.5 where uncovered.
inline LabelEstimate average_vote(const WeakSignalSet& set) {
  const auto total = set.indexing().size();
  Vector out(static_cast<Eigen::Index>(total));
  for (std::size_t t = 0; t < total; ++t) {
    double sum = 0.0;
    std::size_t votes = 0;
    for (const auto& s : set) {
      if (s.abstains(t)) continue;
      ++votes;
      sum += s.value(t);
    }
    out[static_cast<Eigen::Index>(t)] = votes ? sum / static_cast<double>(votes) : 0.5;
  }
  return {set.indexing(), std::move(out)};
}

}  // namespace cll
