#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "decompose.hpp"
#include "hellinger.hpp"
#include "processes.hpp"
#include "report.hpp"
#include "space.hpp"
#include "space_file.hpp"
#include "verify.hpp"

namespace hlab::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kInputError = 3 };

/// Named fields plus rows; text renders "key=value" pairs, json an object.
struct Output {
  std::string command;
  nlohmann::ordered_json fields = nlohmann::ordered_json::object();
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();

  void print(std::ostream& os, const std::string& format) const {
    if (format == "json") {
      nlohmann::ordered_json j;
      j["command"] = command;
      for (const auto& [k, v] : fields.items()) j[k] = v;
      if (!rows.empty()) j["rows"] = rows;
      os << j.dump(2) << "\n";
      return;
    }
    auto scalar = [](const nlohmann::ordered_json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    for (const auto& [k, v] : fields.items()) os << k << "=" << scalar(v) << "\n";
    for (const auto& row : rows) {
      bool first = true;
      for (const auto& [k, v] : row.items()) {
        os << (first ? "" : " ") << k << "=" << scalar(v);
        first = false;
      }
      os << "\n";
    }
  }
};

struct Options {
  double tolerance = 1e-9;
  int alpha_max_k = 20;
  std::size_t cap = kDefaultAtomCap;
  std::string format = "text";
  bool timing = false;

  std::string space_path, mu_name = "mu", nu_name = "nu", T_name;
  std::vector<double> alphas;
  std::string of = "z", at, mode = "Tminus", factors_path, suite = "all", seeds;
  bool minus = false, exhaustive = false;
  std::size_t depth = 1000;
  std::uint64_t seed = 0;
  int atoms = 4, horizon = 2;
  double sparsity = 0.25;
  bool force_singular = false, force_predictable = false, product = false;
};

namespace detail {

inline std::string float_prov(double tol) {
  std::ostringstream os;
  os << "float(" << tol << ")";
  return os.str();
}

inline std::string num(double x) { return hlab::detail::fmt(x); }

inline std::string set_string(const FilteredSpace& sp, const EventSet& E) {
  std::string s = "{";
  bool first = true;
  for (std::size_t i = 0; i < E.size(); ++i)
    if (E.contains(i)) {
      s += (first ? "" : ",") + sp.label(i);
      first = false;
    }
  return s + "}";
}

inline std::string cell_string(const FilteredSpace& sp, const std::vector<std::size_t>& cell) {
  std::string s = "{";
  for (std::size_t k = 0; k < cell.size(); ++k) s += (k ? "," : "") + sp.label(cell[k]);
  return s + "}";
}

/// Cells ordered by first atom label.
inline std::vector<std::size_t> canonical_cells(const FilteredSpace& sp, const Partition& p) {
  std::vector<std::size_t> idx(p.cell_count());
  for (std::size_t c = 0; c < idx.size(); ++c) idx[c] = c;
  std::sort(idx.begin(), idx.end(),
            [&](auto a, auto b) { return sp.label(p.cell(a).front()) < sp.label(p.cell(b).front()); });
  return idx;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Loaded {
  SpaceFile file;
  Measure mu, nu;
};

inline Loaded load(const Options& o, bool need_pair = true) {
  if (o.space_path.empty()) throw ValidationError("--space is required");
  Loaded l{parse_space_file(read_file(o.space_path)), {}, {}};
  if (l.file.space.atom_count() > o.cap) throw SizeOverflow(o.cap);
  if (need_pair) {
    auto m = l.file.measures.find(o.mu_name), n = l.file.measures.find(o.nu_name);
    if (m == l.file.measures.end()) throw ValidationError("no measure named '" + o.mu_name + "'");
    if (n == l.file.measures.end()) throw ValidationError("no measure named '" + o.nu_name + "'");
    l.mu = m->second;
    l.nu = n->second;
  }
  return l;
}

/// -T by name; "inf" or an integer literal gives the constant time.
inline StoppingTime stopping_time(const Loaded& l, const std::string& name) {
  const auto& sp = l.file.space;
  if (name.empty() || name == "inf") return StoppingTime::constant(sp, kInf);
  auto it = l.file.stopping_times.find(name);
  if (it != l.file.stopping_times.end()) return it->second;
  if (name.find_first_not_of("0123456789") == std::string::npos)
    return StoppingTime::constant(sp, ExtendedTime::at(std::stoi(name)));
  throw ValidationError("no stopping time named '" + name + "'");
}

inline void time_rows(Output& out, const FilteredSpace& sp, const std::string& key, const StoppingTime& T) {
  for (std::size_t i = 0; i < sp.atom_count(); ++i) {
    nlohmann::ordered_json r;
    r["atom"] = sp.label(i);
    r[key] = T(i).to_string();
    r["prov"] = "exact";
    out.rows.push_back(r);
  }
}

inline int cmd_density(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto Q = midpoint(l.mu, l.nu);
  auto z = density_process(sp, l.mu, Q), zp = density_process(sp, l.nu, Q);
  for (int t = 0; t <= sp.horizon(); ++t)
    for (auto c : canonical_cells(sp, sp.at(t))) {
      auto a = sp.at(t).cell(c).front();
      nlohmann::ordered_json r;
      r["t"] = t;
      r["cell"] = cell_string(sp, sp.at(t).cell(c));
      r["z"] = to_string(z.z.at(t, a));
      r["z'"] = to_string(zp.z.at(t, a));
      r["prov"] = "exact";
      out.rows.push_back(r);
    }
  return kOk;
}

inline int cmd_hellinger(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto alphas = o.alphas.empty() ? std::vector<double>{0.5} : o.alphas;
  for (double a : alphas) {
    if (!(a > 0 && a < 1)) throw ValidationError("alpha must lie in (0,1)");
    for (int n = 0; n <= sp.horizon(); ++n) {
      nlohmann::ordered_json r;
      r["alpha"] = num(a);
      r["n"] = n;
      r["a_n"] = num(hellinger_integral(a, restrict(l.mu, sp.at(n)), restrict(l.nu, sp.at(n))));
      r["prov"] = float_prov(o.tolerance);
      out.rows.push_back(r);
    }
    out.fields["H(" + num(a) + ")"] = num(hellinger_integral(a, l.mu, l.nu));
  }
  return kOk;
}

inline int cmd_hprocess(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto hp = hellinger_process(sp, l.mu, l.nu);
  for (int t = 0; t <= sp.horizon(); ++t)
    for (auto c : canonical_cells(sp, sp.at(t))) {
      auto a = sp.at(t).cell(c).front();
      nlohmann::ordered_json r;
      r["t"] = t;
      r["cell"] = cell_string(sp, sp.at(t).cell(c));
      r["Y^2"] = to_string(hp.y2.at(t, a));
      r["Y"] = num(hp.Y.at(t, a));
      r["A"] = num(hp.A.at(t, a));
      r["M"] = num(hp.M.at(t, a));
      r["h"] = num(hp.h.at(t, a));
      r["dh"] = num(t == 0 ? 0.0 : hp.h.at(t, a) - hp.h.at(t - 1, a));
      r["prov"] = "Y^2 exact, rest " + float_prov(o.tolerance);
      out.rows.push_back(r);
    }
  return kOk;
}

inline int cmd_h0(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto hp = hellinger_process(sp, l.mu, l.nu);
  auto h0 = hellinger0_process(sp, hp);
  out.fields["N0"] = set_string(sp, h0.N0);
  for (int t = 0; t <= sp.horizon(); ++t)
    for (auto c : canonical_cells(sp, sp.at(t))) {
      auto a = sp.at(t).cell(c).front();
      nlohmann::ordered_json r;
      r["t"] = t;
      r["cell"] = cell_string(sp, sp.at(t).cell(c));
      r["h0"] = to_string(h0.h0.at(t, a));
      r["prov"] = "exact";
      out.rows.push_back(r);
    }
  auto H0 = stopping_time_h0(h0);
  for (std::size_t i = 0; i < sp.atom_count(); ++i) out.fields["H0(" + sp.label(i) + ")"] = H0(i).to_string();
  return kOk;
}

inline int cmd_stopping(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto hp = hellinger_process(sp, l.mu, l.nu);
  StoppingTime T;
  if (o.of == "z")
    T = process_stopping_time(hp.z.z, &hp.Q);
  else if (o.of == "z'")
    T = process_stopping_time(hp.zp.z, &hp.Q);
  else if (o.of == "Y")
    T = process_stopping_time(hp.y2, &hp.Q);
  else if (o.of == "h" || o.of == "A")
    T = process_stopping_time(sp, hp.dA, &hp.Q);
  else if (o.of == "M")
    T = process_stopping_time(sp, hp.dM, &hp.Q);
  else if (o.of == "h0")
    T = stopping_time_h0(hellinger0_process(sp, hp));
  else if (o.of == "S")
    T = hp.S;
  else
    throw ValidationError("--of must be one of z, z', Y, h, h0, A, M, S");
  time_rows(out, sp, "T_" + o.of, T);
  return kOk;
}

inline int cmd_sigma(const Options& o, Output& out) {
  auto l = load(o, false);
  const auto& sp = l.file.space;
  auto T = stopping_time(l, o.at);
  auto sigma = o.minus ? sigma_T_minus(sp, T) : sigma_T(sp, T);
  out.fields["sigma"] = std::string(o.minus ? "F_T-" : "F_T");
  for (auto c : canonical_cells(sp, sigma.cells)) {
    nlohmann::ordered_json r;
    r["cell"] = cell_string(sp, sigma.cells.cell(c));
    out.rows.push_back(r);
  }
  return kOk;
}

inline int cmd_hahn(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto hp = hellinger_process(sp, l.mu, l.nu);
  auto T = stopping_time(l, o.T_name);
  auto h = hahn_at_T(sp, hp, T);
  auto chk = check_hahn(l.mu, l.nu, h);
  out.fields["E"] = set_string(sp, h.E);
  out.fields["E^c"] = set_string(sp, h.E_complement);
  out.fields["measurable"] = chk.measurable;
  out.fields["mu_T~nu_T on E"] = chk.equivalent_on_E;
  out.fields["mu_T_|_nu_T on E^c"] = chk.singular_on_Ec;
  out.fields["prov"] = "exact";
  return chk.ok() ? kOk : kCheckFailed;
}

inline int cmd_septime(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto hp = hellinger_process(sp, l.mu, l.nu);
  auto st = separating_time(sp, hp);
  EventSet B(sp.atom_count());
  for (std::size_t i = 0; i < B.size(); ++i) B.set(i, st(i).is_delta());
  out.fields["B"] = set_string(sp, B);
  time_rows(out, sp, "S~", st);
  return kOk;
}

inline int cmd_normac(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto T = stopping_time(l, o.T_name);
  SweepConfig cfg;
  cfg.alpha_max_k = o.alpha_max_k;
  auto Q = midpoint(l.mu, l.nu);
  DecompositionReport d;
  if (o.mode == "Tminus")
    d = norm_ac_T_minus(sp, l.mu, l.nu, Q, T, o.alphas, cfg);
  else if (o.mode == "T")
    d = norm_ac_T(sp, l.mu, l.nu, T, {}, o.alphas, cfg);
  else if (o.mode == "predictable")
    d = norm_ac_predictable(sp, l.mu, l.nu, T, {}, o.alphas, cfg);
  else if (o.mode == "c3")
    d = norm_ac_discrete_cor(sp, l.mu, l.nu, Q, T, o.alphas, cfg);
  else
    throw ValidationError("--mode must be one of Tminus, T, predictable, c3");
  for (std::size_t k = 0; k < d.alphas.size(); ++k) {
    nlohmann::ordered_json r;
    r["alpha"] = num(d.alphas[k]);
    r["value"] = num(d.sweep[k]);
    r["prov"] = float_prov(o.tolerance);
    out.rows.push_back(r);
  }
  out.fields["mode"] = d.mode;
  out.fields["formula"] = num(d.formula_value);
  out.fields["oracle"] = to_string(d.oracle_value);
  out.fields["residual"] = num(d.residual);
  out.fields["lyapunov_monotone"] = d.lyapunov_monotone;
  out.fields["verdict"] = to_string(d.verdict);
  return d.lyapunov_monotone && d.density_matches ? kOk : kCheckFailed;
}

inline int cmd_kakutani(const Options& o, Output& out) {
  if (o.factors_path.empty()) throw ValidationError("--factors is required");
  auto f = parse_factor_file(read_file(o.factors_path));
  KakutaniConfig cfg;
  cfg.tail_bound = f.tail_bound;
  auto r = kakutani(f.generator, o.depth, cfg);
  out.fields["factors"] = f.name;
  out.fields["verdict"] = to_string(r.verdict);
  out.fields["depth"] = r.depth;
  out.fields["product_lower"] = num(r.lower);
  out.fields["product_upper"] = num(r.upper);
  out.fields["prov"] = float_prov(o.tolerance);
  return kOk;
}

inline int cmd_condexp(const Options& o, Output& out) {
  auto l = load(o);
  const auto& sp = l.file.space;
  auto hp = hellinger_process(sp, l.mu, l.nu);
  auto T = stopping_time(l, o.T_name);
  auto ce = cond_expect_at_T(hp.z.z, T, hp.Q);
  auto direct = cond_expect_at_T_direct(hp.z.z, T, hp.Q);
  auto left = left_limit_at_T(hp.z.z, T);
  auto K = k_factor(hp.z.z, T, hp.Q);
  bool agree = true;
  for (std::size_t i = 0; i < sp.atom_count(); ++i) {
    nlohmann::ordered_json r;
    r["atom"] = sp.label(i);
    r["T"] = T(i).to_string();
    r["E[z_T|F_T-]"] = to_string(ce[i]);
    r["oracle"] = to_string(direct[i]);
    r["z_T-"] = to_string(left[i]);
    r["K_T"] = to_string(K[i]);
    r["prov"] = "exact";
    out.rows.push_back(r);
    agree = agree && ce[i] == direct[i];
  }
  out.fields["formula_equals_oracle"] = agree;
  return agree ? kOk : kCheckFailed;
}

inline int cmd_verify(const Options& o, std::ostream& os) {
  SuiteOptions so;
  so.tolerance = o.tolerance;
  so.alpha_max_k = o.alpha_max_k;
  so.timing = o.timing;
  so.exhaustive = o.exhaustive;
  auto seeds = o.seeds.empty() ? std::to_string(o.seed) + ".." + std::to_string(o.seed + 99) : o.seeds;
  auto res = run_suite(o.suite, parse_seed_range(seeds), so);
  if (o.format == "json")
    os << to_json(res, o.suite, seeds, o.timing).dump(2) << "\n";
  else
    print_text(os, res, o.timing);
  return res.ok() ? kOk : kCheckFailed;
}

inline int cmd_gen(const Options& o, std::ostream& os) {
  InstanceSpec spec;
  spec.seed = o.seed;
  spec.atom_count = o.atoms;
  spec.horizon = o.horizon;
  spec.sparsity = o.sparsity;
  spec.force_singular_part = o.force_singular;
  spec.force_predictable_T = o.force_predictable;
  spec.product_mode = o.product;
  if (o.atoms < 2 || o.atoms > 64) throw ValidationError("--atoms must be in 2..64");
  if (o.horizon < 1 || o.horizon > 6) throw ValidationError("--horizon must be in 1..6");
  if (!(o.sparsity >= 0 && o.sparsity < 1)) throw ValidationError("--sparsity must be in [0,1)");
  if (static_cast<std::size_t>(o.atoms) > o.cap) throw SizeOverflow(o.cap);
  auto inst = gen_instance(spec);
  SpaceFile f{inst.space, {{"mu", inst.mu}, {"nu", inst.nu}}, {{"T", inst.T}}};
  os << serialize_space_file(f);
  return kOk;
}

}  // namespace detail

inline std::uint64_t default_seed() {
  if (const char* s = std::getenv("HELLINGER_LAB_SEED")) {
    std::string v(s);
    if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) return std::stoull(v);
  }
  return 0;
}

/// Parses argv and dispatches. Exit codes: 0 ok, 1 failed check, 2 usage, 3 input error.
inline int run_command(int argc, const char* const* argv, std::ostream& out = std::cout,
                       std::ostream& err = std::cerr) {
  Options o;
  o.seed = default_seed();
  CLI::App app{"Measure-pair calculus on finite filtered spaces", "hlab"};
  app.require_subcommand(1, 1);
  app.add_option("--tolerance", o.tolerance, "numeric tolerance")->capture_default_str();
  app.add_option("--alpha-max-k", o.alpha_max_k, "alpha grid reaches 1 - 2^-k")->capture_default_str();
  app.add_option("--cap", o.cap, "atom cap")->capture_default_str();
  app.add_option("--format", o.format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  app.add_flag("--timing", o.timing, "include elapsed time in verify reports");

  auto pair_opts = [&](CLI::App* s) {
    s->add_option("--space", o.space_path, "SpaceFile path")->required();
    s->add_option("--mu", o.mu_name, "measure name")->capture_default_str();
    s->add_option("--nu", o.nu_name, "measure name")->capture_default_str();
    s->fallthrough();
    return s;
  };
  auto* density = pair_opts(app.add_subcommand("density", "density processes z, z'"));
  auto* hellinger = pair_opts(app.add_subcommand("hellinger", "Hellinger integrals on every truncation level"));
  hellinger->add_option("--alpha", o.alphas, "alpha values")->delimiter(',');
  auto* hprocess = pair_opts(app.add_subcommand("hprocess", "Hellinger process of order 1/2"));
  auto* h0 = pair_opts(app.add_subcommand("h0", "Hellinger process of order 0 and H0"));
  auto* stopping = pair_opts(app.add_subcommand("stopping", "stopping time of a process"));
  stopping->add_option("--of", o.of, "z | z' | Y | h | h0 | A | M | S")->capture_default_str();
  auto* sigma = app.add_subcommand("sigma", "cells of F_T or F_T-");
  sigma->add_option("--space", o.space_path, "SpaceFile path")->required();
  sigma->add_option("--at", o.at, "stopping time name")->required();
  sigma->add_flag("--minus", o.minus, "F_T- instead of F_T");
  sigma->fallthrough();
  auto* hahn = pair_opts(app.add_subcommand("hahn", "Hahn decomposition at T"));
  hahn->add_option("-T", o.T_name, "stopping time name")->required();
  auto* septime = pair_opts(app.add_subcommand("septime", "separating time"));
  auto* normac = pair_opts(app.add_subcommand("normac", "norm of the absolutely continuous part"));
  normac->add_option("--mode", o.mode, "Tminus | T | predictable | c3")->capture_default_str();
  normac->add_option("--alphas", o.alphas, "alpha grid")->delimiter(',');
  normac->add_option("-T", o.T_name, "stopping time name (default inf)");
  auto* kak = app.add_subcommand("kakutani", "Kakutani dichotomy for product measures");
  kak->add_option("--factors", o.factors_path, "factor file")->required();
  kak->add_option("--depth", o.depth, "maximum number of factors")->capture_default_str();
  kak->fallthrough();
  auto* condexp = pair_opts(app.add_subcommand("condexp", "E[z_T | F_T-] and K_T"));
  condexp->add_option("-T", o.T_name, "stopping time name")->required();
  auto* verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("--suite", o.suite, "theorem1|theorem2|theorem4|theorem56|normac|h0|prop2|lemma2|kakutani|all")
      ->capture_default_str();
  verify->add_option("--seeds", o.seeds, "a..b or a,b,c (default seed..seed+99)");
  verify->add_flag("--exhaustive", o.exhaustive, "also run the 4-atom N=2 exhaustive tier");
  verify->fallthrough();
  auto* gen = app.add_subcommand("gen", "generate a random instance as a SpaceFile");
  gen->add_option("--seed", o.seed, "seed (HELLINGER_LAB_SEED)");
  gen->add_option("--atoms", o.atoms, "2..64")->capture_default_str();
  gen->add_option("--horizon", o.horizon, "1..6")->capture_default_str();
  gen->add_option("--sparsity", o.sparsity, "probability of a zero weight")->capture_default_str();
  gen->add_flag("--force-singular", o.force_singular);
  gen->add_flag("--force-predictable", o.force_predictable);
  gen->add_flag("--product", o.product);
  gen->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* active = &app;
    for (const auto* s : app.get_subcommands()) active = s;
    err << active->help();
    return kUsage;
  }

  try {
    if (*verify) return detail::cmd_verify(o, out);
    if (*gen) return detail::cmd_gen(o, out);
    Output result;
    int code = kOk;
    auto* sub = app.get_subcommands().front();
    result.command = sub->get_name();
    if (sub == density) code = detail::cmd_density(o, result);
    else if (sub == hellinger) code = detail::cmd_hellinger(o, result);
    else if (sub == hprocess) code = detail::cmd_hprocess(o, result);
    else if (sub == h0) code = detail::cmd_h0(o, result);
    else if (sub == stopping) code = detail::cmd_stopping(o, result);
    else if (sub == sigma) code = detail::cmd_sigma(o, result);
    else if (sub == hahn) code = detail::cmd_hahn(o, result);
    else if (sub == septime) code = detail::cmd_septime(o, result);
    else if (sub == normac) code = detail::cmd_normac(o, result);
    else if (sub == kak) code = detail::cmd_kakutani(o, result);
    else if (sub == condexp) code = detail::cmd_condexp(o, result);
    result.print(out, o.format);
    return code;
  } catch (const ParseError& e) {
    err << e.what() << "\n";
    return kInputError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace hlab::cli
