#pragma once

#include <map>
#include <string>

namespace cll {

inline constexpr const char* kVersion = "1.0.0";

/// Per-module versions recorded in every report; bump a module's entry when
/// its numerical output changes.
inline std::map<std::string, std::string> module_versions() {
  return {{"signal_model", "1"}, {"constraint_system", "1"}, {"solver", "1"},     {"theory", "1"},
          {"error_estimation", "1"}, {"baselines", "1"},     {"synthgen", "1"}, {"harness", "1"}};
}

}  // namespace cll
