#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "verify.hpp"

namespace hlab {

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"theorem1", "theorem2", "theorem4", "theorem56", "normac",
                                              "h0",       "prop2",    "lemma2",   "kakutani"};
  return names;
}

struct SuiteOptions {
  double tolerance = 1e-9;
  int alpha_max_k = 20;
  bool timing = false;
  bool exhaustive = false;
};

struct SuiteResult {
  std::vector<Report> reports;

  bool ok() const {
    for (const auto& r : reports)
      if (!r.ok()) return false;
    return true;
  }
  std::size_t failed_checks() const {
    std::size_t n = 0;
    for (const auto& r : reports)
      for (const auto& c : r.checks) n += c.holds ? 0 : 1;
    return n;
  }
};

/// "a..b" (inclusive), "a,b,c" or a single seed.
inline std::vector<std::uint64_t> parse_seed_range(const std::string& text) {
  std::vector<std::uint64_t> out;
  auto num = [&](const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
      throw ValidationError("bad seed '" + s + "'");
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  auto dots = text.find("..");
  if (dots != std::string::npos) {
    auto a = num(text.substr(0, dots)), b = num(text.substr(dots + 2));
    if (b < a) throw ValidationError("empty seed range " + text);
    for (auto s = a; s <= b; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    out.push_back(num(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Streams reports into one report per distinct (theorem, claim), keeping the first witness
/// and a failure count.
class Aggregator {
 public:
  explicit Aggregator(std::string tag) : tag_(std::move(tag)) {}

  void add(const Report& r) {
    auto [it, fresh] = where_.emplace(r.theorem, out_.size());
    if (fresh) {
      out_.push_back({tag_ + r.theorem, 0, {}, 0});
      tally_.emplace_back();
    }
    auto& agg = out_[it->second];
    auto& tally = tally_[it->second];
    for (const auto& c : r.checks) {
      auto [t, added] = tally.emplace(c.claim, Count{agg.checks.size(), 0, 0});
      if (added) agg.checks.push_back({c.claim, true, {}});
      ++t->second.total;
      if (c.holds) continue;
      auto& a = agg.checks[t->second.index];
      if (a.holds) {
        a.holds = false;
        a.witness = c.witness;
      }
      ++t->second.failed;
    }
  }

  std::vector<Report> finish() const {
    auto out = out_;
    for (std::size_t i = 0; i < out.size(); ++i)
      for (auto& c : out[i].checks) {
        const auto& t = tally_[i].at(c.claim);
        if (t.failed) c.witness += " (" + std::to_string(t.failed) + " of " + std::to_string(t.total) + " failed)";
      }
    return out;
  }

 private:
  struct Count {
    std::size_t index, failed, total;
  };
  std::string tag_;
  std::vector<Report> out_;
  std::vector<std::map<std::string, Count>> tally_;
  std::map<std::string, std::size_t> where_;
};

namespace detail {

inline void run_one(const std::string& suite, std::uint64_t seed, const SuiteOptions& opt,
                    std::vector<Report>& out) {
  auto stamp = [&](Report r, std::chrono::steady_clock::time_point t0) {
    r.seed = seed;
    if (opt.timing) r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  };
  auto t0 = std::chrono::steady_clock::now();
  if (suite == "prop2") return stamp(liminf_trial(seed, opt.tolerance), t0);
  if (suite == "lemma2") return stamp(perturbation_trial(seed, opt.tolerance), t0);
  if (suite == "h0") {
    auto inst = gen_instance(small_spec_for_seed(seed));
    auto ctx = make_context(inst.space, inst.mu, inst.nu);
    return stamp(verify_h0(ctx), t0);
  }
  auto inst = gen_instance(instance_spec_for_seed(seed));
  if (suite == "theorem4") return stamp(verify_curve(inst.space, inst.mu, inst.nu), t0);
  auto ctx = make_context(inst.space, inst.mu, inst.nu);
  if (suite == "theorem1") return stamp(verify_hahn(ctx, inst.T), t0);
  if (suite == "theorem2") return stamp(verify_stopping_identities(ctx), t0);
  if (suite == "theorem56") return stamp(verify_condexp_at_T(ctx, inst.T), t0);
  if (suite == "normac") return stamp(verify_norm_formulas(ctx, inst.T, 1e-5, opt.alpha_max_k), t0);
  throw ValidationError("unknown suite '" + suite + "'");
}

inline std::vector<Report> run_exhaustive(const std::vector<std::string>& suites) {
  auto want = [&](const char* s) { return std::find(suites.begin(), suites.end(), s) != suites.end(); };
  Aggregator all("exhaustive/");
  for_each_exhaustive_pair([&](const PairContext& ctx, const std::vector<StoppingTime>& times) {
    if (want("theorem2")) {
      all.add(verify_stopping_identities(ctx));
      all.add(verify_stopping_minimality(ctx));
    }
    if (want("theorem4")) all.add(verify_curve(ctx.space, ctx.mu, ctx.nu));
    if (want("h0")) all.add(verify_h0(ctx));
    for (const auto& T : times) {
      if (want("theorem1")) all.add(verify_hahn(ctx, T));
      if (want("theorem56")) all.add(verify_condexp_at_T(ctx, T));
    }
  });
  return all.finish();
}

}  // namespace detail

/// Runs `suite` ("all" for every suite) over the seeds in order. Kakutani runs once per call.
inline SuiteResult run_suite(const std::string& suite, const std::vector<std::uint64_t>& seeds,
                             const SuiteOptions& opt = {}) {
  std::vector<std::string> suites;
  if (suite == "all")
    suites = suite_names();
  else if (std::find(suite_names().begin(), suite_names().end(), suite) != suite_names().end())
    suites = {suite};
  else
    throw ValidationError("unknown suite '" + suite + "'");
  SuiteResult res;
  for (const auto& s : suites) {
    if (s == "kakutani") {
      for (const auto& fam : kakutani_families()) {
        auto t0 = std::chrono::steady_clock::now();
        auto r = verify_kakutani(fam);
        if (opt.timing) r.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.reports.push_back(std::move(r));
      }
      continue;
    }
    for (auto seed : seeds) detail::run_one(s, seed, opt, res.reports);
  }
  if (opt.exhaustive)
    for (auto& r : detail::run_exhaustive(suites)) res.reports.push_back(std::move(r));
  return res;
}

inline nlohmann::ordered_json to_json(const Report& r, bool timing) {
  nlohmann::ordered_json j;
  j["theorem"] = r.theorem;
  j["seed"] = r.seed;
  j["ok"] = r.ok();
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : r.checks) {
    nlohmann::ordered_json cj;
    cj["claim"] = c.claim;
    cj["holds"] = c.holds;
    if (!c.holds) cj["witness"] = c.witness;
    checks.push_back(std::move(cj));
  }
  if (timing) j["elapsed"] = r.elapsed;
  return j;
}

inline nlohmann::ordered_json to_json(const SuiteResult& res, const std::string& suite, const std::string& seeds,
                                      bool timing) {
  nlohmann::ordered_json j;
  j["suite"] = suite;
  j["seeds"] = seeds;
  j["ok"] = res.ok();
  j["reports_total"] = res.reports.size();
  j["failed_checks"] = res.failed_checks();
  auto& reports = j["reports"] = nlohmann::ordered_json::array();
  for (const auto& r : res.reports) reports.push_back(to_json(r, timing));
  return j;
}

/// Failed checks in full, then one tally line per theorem.
inline void print_text(std::ostream& os, const SuiteResult& res, bool timing) {
  std::map<std::string, std::pair<std::size_t, std::size_t>> per;  // failed reports, total
  std::vector<std::string> order;
  for (const auto& r : res.reports) {
    if (!per.count(r.theorem)) order.push_back(r.theorem);
    auto& p = per[r.theorem];
    ++p.second;
    if (!r.ok()) ++p.first;
    for (const auto& c : r.checks)
      if (!c.holds) os << "FAIL " << r.theorem << " seed=" << r.seed << ": " << c.claim << " [" << c.witness << "]\n";
    if (timing) os << "time " << r.theorem << " seed=" << r.seed << " " << r.elapsed << "s\n";
  }
  for (const auto& t : order) {
    auto [failed, total] = per[t];
    os << (failed ? "FAIL " : "PASS ") << t << " " << (total - failed) << "/" << total << "\n";
  }
  os << (res.ok() ? "ok" : "FAILED") << ": " << res.failed_checks() << " failed checks in " << res.reports.size()
     << " reports\n";
}

}  // namespace hlab
