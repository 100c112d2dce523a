#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cll/constraint_system.hpp"
#include "cll/theory.hpp"

namespace cll::io {

using json = nlohmann::json;

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n' ? 1 : 0;
  return line;
}

inline json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what(), line_of(text, e.byte));
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

/// Shortest decimal form that reads back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

}  // namespace detail

// ---- weak signals -----------------------------------------------------------
//
// { "num_examples": n, "num_classes": K,
//   "signals": [ { "name": str, "target_class": int|null, "values": [number|null x nK] } ] }
//
// null (or -1) marks an abstention. target_class is zero-based.

inline WeakSignalSet signals_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("signal file must be a JSON object");
  const auto n = detail::field<std::size_t>(j, "num_examples");
  const auto k = detail::field<std::size_t>(j, "num_classes");
  const ClassIndexing ix(n, k);
  if (!j.contains("signals") || !j["signals"].is_array()) throw ParseError("missing array 'signals'");

  std::vector<WeakSignal> signals;
  std::size_t index = 0;
  for (const auto& s : j["signals"]) {
    const std::string name = s.contains("name") ? s["name"].get<std::string>() : "signal_" + std::to_string(index + 1);
    std::optional<std::size_t> target;
    if (s.contains("target_class") && !s["target_class"].is_null()) target = s["target_class"].get<std::size_t>();
    if (!s.contains("values") || !s["values"].is_array()) throw ParseError("signal '" + name + "' has no values array");
    std::vector<std::optional<double>> entries;
    entries.reserve(s["values"].size());
    for (const auto& v : s["values"]) {
      if (v.is_null()) {
        entries.emplace_back();
      } else if (v.is_number()) {
        const double x = v.get<double>();
        entries.push_back(x == -1.0 ? std::nullopt : std::optional<double>(x));
      } else {
        throw ParseError("signal '" + name + "' has a non-numeric value");
      }
    }
    signals.emplace_back(name, ix, entries, target);
    ++index;
  }
  return {ix, std::move(signals)};
}

inline json to_json(const WeakSignalSet& set) {
  json j;
  j["num_examples"] = set.indexing().num_examples();
  j["num_classes"] = set.indexing().num_classes();
  j["signals"] = json::array();
  for (const auto& s : set) {
    json js;
    js["name"] = s.name();
    js["target_class"] = s.target_class() ? json(*s.target_class()) : json(nullptr);
    json values = json::array();
    for (std::size_t t = 0; t < s.size(); ++t) values.push_back(s.labels(t) ? json(s.value(t)) : json(nullptr));
    js["values"] = std::move(values);
    j["signals"].push_back(std::move(js));
  }
  return j;
}

inline WeakSignalSet read_signals(const std::string& path) {
  return signals_from_json(detail::parse_text(detail::read_file(path)));
}

inline void write_signals(std::ostream& os, const WeakSignalSet& set) { os << to_json(set).dump() << '\n'; }

// ---- error rates ------------------------------------------------------------

inline ErrorRateVector errors_from_json(const json& j) {
  const auto source = error_source_from_string(detail::field<std::string>(j, "source"));
  const auto values = detail::field<std::vector<double>>(j, "values");
  return {Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())), source};
}

inline json to_json(const ErrorRateVector& eps) {
  return {{"source", to_string(eps.source())},
          {"values", std::vector<double>(eps.values().data(), eps.values().data() + eps.values().size())}};
}

inline ErrorRateVector read_errors(const std::string& path) {
  return errors_from_json(detail::parse_text(detail::read_file(path)));
}

// ---- label CSV --------------------------------------------------------------
//
// example,class_1,...,class_K ; one row per example (1-based), K columns.

inline void write_labels_csv(std::ostream& os, const LabelEstimate& labels) {
  const auto& ix = labels.indexing();
  os << "example";
  for (std::size_t k = 0; k < ix.num_classes(); ++k) os << ",class_" << k + 1;
  os << '\n';
  for (std::size_t i = 0; i < ix.num_examples(); ++i) {
    os << i + 1;
    for (std::size_t k = 0; k < ix.num_classes(); ++k) os << ',' << detail::format_double(labels[ix.flat(i, k)]);
    os << '\n';
  }
}

inline LabelEstimate read_labels_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty label file", line_no);
  if (line.rfind("example", 0) != 0) throw ParseError("label header must start with 'example'", line_no);
  const auto num_classes = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  if (num_classes == 0) throw ParseError("label header names no classes", line_no);

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> row;
    std::getline(ss, cell, ',');
    try {
      if (std::stoul(cell) != rows.size() + 1) throw ParseError("examples must be numbered 1..n in order", line_no);
      while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    } catch (const std::logic_error&) {
      throw ParseError("malformed number in label file", line_no);
    }
    if (row.size() != num_classes) throw ParseError("expected " + std::to_string(num_classes) + " columns", line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("label file has no rows", line_no);
  const ClassIndexing ix(rows.size(), num_classes);
  Vector v(static_cast<Eigen::Index>(ix.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t k = 0; k < num_classes; ++k) v[static_cast<Eigen::Index>(ix.flat(i, k))] = rows[i][k];
  }
  return {ix, std::move(v)};
}

inline LabelEstimate read_labels_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  return read_labels_csv(in);
}

// ---- reports ----------------------------------------------------------------

/// Debug dump; the layout is not a stable interchange format.
inline json to_json(const ConstraintSystem& sys) {
  json triplets = json::array();
  for (const auto& t : sys.nonzeros()) triplets.push_back({t.row, t.col, t.value});
  return {{"rows", sys.rows()},
          {"cols", sys.cols()},
          {"storage", sys.is_sparse() ? "sparse" : "dense"},
          {"A", std::move(triplets)},
          {"c", std::vector<double>(sys.c().data(), sys.c().data() + sys.c().size())},
          {"coverage", sys.coverage()}};
}

inline json to_json(const BoundReport& r) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return {{"bound_value", r.bound_value},
          {"normalized_bound", r.normalized_bound},
          {"rank", r.rank},
          {"scale", r.scale},
          {"pinv_singular_values", vec(r.singular_values)},
          {"p_vector", vec(r.p_vector)},
          {"extended_regime", r.extended_regime},
          {"warnings", r.warnings}};
}

inline json to_json(const ValidationReport& r) {
  json issues = json::array();
  for (const auto& i : r.issues) {
    json ji{{"severity", i.severity == Severity::kError ? "error" : "warning"}, {"message", i.message}};
    if (i.signal) ji["signal"] = *i.signal;
    if (i.entry) ji["entry"] = *i.entry;
    issues.push_back(std::move(ji));
  }
  return {{"coverage", r.coverage}, {"union_gap_count", r.union_gaps.size()}, {"issues", std::move(issues)}};
}

}  // namespace cll::io
