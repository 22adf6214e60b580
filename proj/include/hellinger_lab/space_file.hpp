#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "decompose.hpp"
#include "errors.hpp"
#include "rational.hpp"
#include "space.hpp"
#include "time.hpp"
#include "verify.hpp"

namespace hlab {

inline constexpr const char* kSpaceFileVersion = "1";

struct SpaceFile {
  FilteredSpace space;
  std::map<std::string, Measure> measures;
  std::map<std::string, StoppingTime> stopping_times;
};

namespace detail {

/// Line of the first occurrence of `needle` in `text`, 1-based; 0 when absent.
inline int line_of(const std::string& text, const std::string& needle) {
  auto pos = text.find(needle);
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

inline int line_at(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

inline const nlohmann::json& field(const nlohmann::json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(0, "missing field \"" + key + "\"");
  return j.at(key);
}

inline Rational json_rational(const nlohmann::json& v, const std::string& text) {
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (!v.is_string()) throw ParseError(line_of(text, v.dump()), "weight must be a \"p/q\" string or integer");
  auto s = v.get<std::string>();
  return parse_rational(s, line_of(text, "\"" + s + "\""));
}

inline ExtendedTime json_time(const nlohmann::json& v, const std::string& text) {
  if (v.is_number_integer()) {
    auto t = v.get<long>();
    if (t < 0) throw ParseError(line_of(text, v.dump()), "negative time");
    return ExtendedTime::at(static_cast<int>(t));
  }
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "delta") return kDelta;
    if (!s.empty() && s.find_first_not_of("0123456789") == std::string::npos) return ExtendedTime::at(std::stoi(s));
    throw ParseError(line_of(text, "\"" + s + "\""), "bad time literal '" + s + "'");
  }
  throw ParseError(line_of(text, v.dump()), "time must be an integer, \"inf\" or \"delta\"");
}

inline nlohmann::ordered_json time_json(ExtendedTime t) {
  if (t.is_finite()) return t.value();
  return t.to_string();
}

inline nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(line_at(text, e.byte == 0 ? 0 : e.byte - 1), e.what());
  }
}

}  // namespace detail

/// Parses a SpaceFile document. Structural problems raise ParseError; a well-formed document that
/// does not describe a valid space raises ValidationError.
inline SpaceFile parse_space_file(const std::string& text) {
  auto j = detail::parse_json(text);
  const auto& version = detail::field(j, "version");
  if (!(version.is_string() && version.get<std::string>() == kSpaceFileVersion) &&
      !(version.is_number_integer() && version.get<int>() == 1))
    throw ParseError(detail::line_of(text, "\"version\""), "unsupported version " + version.dump());
  const auto& atoms_j = detail::field(j, "atoms");
  const auto& horizon_j = detail::field(j, "horizon");
  const auto& parts_j = detail::field(j, "partitions");
  if (!atoms_j.is_array()) throw ParseError(detail::line_of(text, "\"atoms\""), "atoms must be a list");
  if (!horizon_j.is_number_integer() || horizon_j.get<int>() < 0)
    throw ParseError(detail::line_of(text, "\"horizon\""), "horizon must be a nonnegative integer");
  if (!parts_j.is_array()) throw ParseError(detail::line_of(text, "\"partitions\""), "partitions must be a list");
  std::vector<std::string> atoms;
  for (const auto& a : atoms_j) {
    if (!a.is_string()) throw ParseError(detail::line_of(text, "\"atoms\""), "atom labels must be strings");
    atoms.push_back(a.get<std::string>());
  }
  std::vector<std::vector<std::vector<std::string>>> cells;
  for (const auto& level : parts_j) {
    if (!level.is_array()) throw ParseError(detail::line_of(text, "\"partitions\""), "a partition is a list of cells");
    auto& out = cells.emplace_back();
    for (const auto& cell : level) {
      if (!cell.is_array()) throw ParseError(detail::line_of(text, "\"partitions\""), "a cell is a list of labels");
      auto& c = out.emplace_back();
      for (const auto& a : cell) {
        if (!a.is_string()) throw ParseError(detail::line_of(text, "\"partitions\""), "cell members must be labels");
        c.push_back(a.get<std::string>());
      }
    }
  }
  SpaceFile f;
  try {
    f.space = build_space(atoms, horizon_j.get<int>(), cells);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ValidationError(e.what());
  }
  if (j.contains("measures")) {
    const auto& ms = j.at("measures");
    if (!ms.is_object()) throw ParseError(detail::line_of(text, "\"measures\""), "measures must be an object");
    for (const auto& [name, w] : ms.items()) {
      if (!w.is_array() || w.size() != atoms.size())
        throw ValidationError("measure '" + name + "' needs " + std::to_string(atoms.size()) + " weights");
      std::vector<Rational> weights;
      for (const auto& x : w) weights.push_back(detail::json_rational(x, text));
      try {
        f.measures.emplace(name, Measure(weights, name));
      } catch (const Error& e) {
        throw ValidationError(e.what());
      }
    }
  }
  if (j.contains("stopping_times")) {
    const auto& ts = j.at("stopping_times");
    if (!ts.is_object())
      throw ParseError(detail::line_of(text, "\"stopping_times\""), "stopping_times must be an object");
    for (const auto& [name, v] : ts.items()) {
      if (!v.is_array() || v.size() != atoms.size())
        throw ValidationError("stopping time '" + name + "' needs " + std::to_string(atoms.size()) + " values");
      std::vector<ExtendedTime> times;
      bool separating = false;
      for (const auto& x : v) {
        times.push_back(detail::json_time(x, text));
        separating = separating || times.back().is_delta();
      }
      try {
        f.stopping_times.emplace(name, StoppingTime(f.space, times, separating));
      } catch (const Error& e) {
        throw ValidationError("stopping time '" + name + "': " + e.what());
      }
    }
  }
  return f;
}

/// Canonical form: cells sorted by first atom label, members in atom order, rationals in lowest terms.
inline nlohmann::ordered_json space_file_json(const SpaceFile& f) {
  nlohmann::ordered_json j;
  const auto& sp = f.space;
  j["version"] = kSpaceFileVersion;
  j["atoms"] = sp.atoms();
  j["horizon"] = sp.horizon();
  auto& parts = j["partitions"] = nlohmann::ordered_json::array();
  for (int t = 0; t <= sp.horizon(); ++t) {
    std::vector<std::vector<std::string>> cells;
    for (const auto& cell : sp.at(t).cells()) {
      auto& c = cells.emplace_back();
      for (auto a : cell) c.push_back(sp.label(a));
    }
    std::sort(cells.begin(), cells.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    parts.push_back(cells);
  }
  auto& ms = j["measures"] = nlohmann::ordered_json::object();
  for (const auto& [name, m] : f.measures) {
    auto& w = ms[name] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sp.atom_count(); ++i) w.push_back(to_string(m[i]));
  }
  auto& ts = j["stopping_times"] = nlohmann::ordered_json::object();
  for (const auto& [name, T] : f.stopping_times) {
    auto& v = ts[name] = nlohmann::ordered_json::array();
    for (const auto& t : T.times()) v.push_back(detail::time_json(t));
  }
  return j;
}

inline std::string serialize_space_file(const SpaceFile& f) { return space_file_json(f).dump(2) + "\n"; }

/// Factor file: {"version": "1", "factors": [{"atoms", "mu", "nu"}, ...]} cycled, or
/// {"version": "1", "family": "identical" | "constant deviation" | "summable deviation"}.
struct FactorFile {
  FactorGenerator generator;
  std::function<double(std::size_t)> tail_bound;
  std::string name;
};

inline FactorFile parse_factor_file(const std::string& text) {
  auto j = detail::parse_json(text);
  detail::field(j, "version");
  FactorFile out;
  if (j.contains("family")) {
    auto name = j.at("family").get<std::string>();
    for (const auto& fam : kakutani_families())
      if (fam.name == name) {
        out.generator = fam.generator;
        out.tail_bound = fam.tail_bound;
        out.name = name;
        return out;
      }
    throw ValidationError("unknown factor family '" + name + "'");
  }
  const auto& fs = detail::field(j, "factors");
  if (!fs.is_array() || fs.empty()) throw ParseError(detail::line_of(text, "\"factors\""), "factors must be a list");
  std::vector<Factor> factors;
  bool all_identical = true;
  for (const auto& fj : fs) {
    Factor f;
    for (const auto& a : detail::field(fj, "atoms")) f.atoms.push_back(a.get<std::string>());
    for (const auto& x : detail::field(fj, "mu")) f.mu.push_back(detail::json_rational(x, text));
    for (const auto& x : detail::field(fj, "nu")) f.nu.push_back(detail::json_rational(x, text));
    if (f.mu.size() != f.atoms.size() || f.nu.size() != f.atoms.size())
      throw ValidationError("factor weights must match its atoms");
    all_identical = all_identical && f.mu == f.nu;
    factors.push_back(std::move(f));
  }
  out.name = "file";
  out.generator = [factors](std::size_t k) { return factors[(k - 1) % factors.size()]; };
  // Identical factors contribute nothing to the tail; otherwise no closed-form bound.
  if (all_identical) out.tail_bound = [](std::size_t) { return 0.0; };
  return out;
}

}  // namespace hlab
