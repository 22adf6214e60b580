#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "decompose.hpp"
#include "hellinger.hpp"
#include "processes.hpp"
#include "space.hpp"

namespace hlab {

/// mt19937_64 with plain modulo reduction so sequences match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t next() { return eng_(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : eng_() % n; }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 eng_;
};

struct InstanceSpec {
  std::uint64_t seed = 0;
  int atom_count = 4;
  int horizon = 2;
  double sparsity = 0.25;
  bool force_singular_part = false;
  bool force_predictable_T = false;
  bool product_mode = false;
};

struct Instance {
  InstanceSpec spec;
  FilteredSpace space;
  Measure mu;
  Measure nu;
  StoppingTime T;
};

namespace detail {

inline std::vector<Rational> normalized(std::vector<long> w) {
  long total = 0;
  for (auto x : w) total += x;
  std::vector<Rational> out;
  for (auto x : w) out.emplace_back(x, total);
  for (auto& q : out) q.canonicalize();
  return out;
}

inline std::vector<Partition> random_chain(Rng& rng, std::size_t atoms, int horizon) {
  std::vector<Partition> levels(static_cast<std::size_t>(horizon) + 1);
  levels.back() = Partition::atomic(atoms);
  for (int t = horizon - 1; t >= 0; --t) {
    const auto& finer = levels[static_cast<std::size_t>(t) + 1];
    std::size_t k = finer.cell_count();
    std::size_t groups = 1 + rng.below(k);
    std::vector<long> cell_label(k);
    for (auto& l : cell_label) l = static_cast<long>(rng.below(groups));
    std::vector<long> labels(atoms);
    for (std::size_t i = 0; i < atoms; ++i) labels[i] = cell_label[finer.cell_of(i)];
    levels[static_cast<std::size_t>(t)] = Partition::from_labels(labels);
  }
  return levels;
}

inline std::vector<long> random_weights(Rng& rng, std::size_t atoms, double sparsity) {
  std::vector<long> w(atoms);
  for (auto& x : w) x = rng.chance(sparsity) ? 0 : static_cast<long>(1 + rng.below(16));
  bool any = false;
  for (auto x : w) any = any || x > 0;
  if (!any) w[rng.below(atoms)] = static_cast<long>(1 + rng.below(16));
  return w;
}

inline std::vector<ExtendedTime> greedy_time(Rng& rng, const FilteredSpace& space, bool predictable) {
  const int N = space.horizon();
  std::vector<ExtendedTime> T(space.atom_count(), kInf);
  std::vector<char> done(space.atom_count(), 0);
  // Predictable: decide {T = t} on F_{t-1} cells (F_0 cells for t = 0).
  for (int t = 0; t <= N; ++t) {
    const auto& part = space.at(predictable ? std::max(0, t - 1) : t);
    double p = 1.0 / static_cast<double>(N - t + 2);
    for (const auto& cell : part.cells()) {
      if (done[cell.front()]) continue;
      if (!rng.chance(p)) continue;
      for (auto a : cell) {
        T[a] = ExtendedTime::at(t);
        done[a] = 1;
      }
    }
  }
  return T;
}

}  // namespace detail

/// Spec for a seed: atoms 2..64, horizon 1..6, mixed sparsity and flags.
inline InstanceSpec instance_spec_for_seed(std::uint64_t seed) {
  Rng r(seed ^ 0x9e3779b97f4a7c15ULL);
  InstanceSpec s;
  s.seed = seed;
  s.atom_count = 2 + static_cast<int>(r.below(63));
  s.horizon = 1 + static_cast<int>(r.below(6));
  static constexpr double kSparsity[] = {0.0, 0.1, 0.25, 0.5};
  s.sparsity = kSparsity[r.below(4)];
  s.force_singular_part = r.below(4) == 0;
  s.force_predictable_T = r.below(4) == 0;
  s.product_mode = r.below(8) == 0;
  return s;
}

/// Small spec: atoms 2..8, horizon 1..3.
inline InstanceSpec small_spec_for_seed(std::uint64_t seed) {
  Rng r(seed ^ 0x51ed270b27a1f3c5ULL);
  InstanceSpec s;
  s.seed = seed;
  s.atom_count = 2 + static_cast<int>(r.below(7));
  s.horizon = 1 + static_cast<int>(r.below(3));
  static constexpr double kSparsity[] = {0.1, 0.25, 0.4, 0.5};
  s.sparsity = kSparsity[r.below(4)];
  s.force_singular_part = r.below(3) == 0;
  s.force_predictable_T = r.below(4) == 0;
  return s;
}

/// Deterministic in `spec`. T is uniform over all stopping times when there are fewer than
/// 4096 of them, greedy otherwise.
inline Instance gen_instance(const InstanceSpec& spec) {
  if (spec.atom_count < 1 || spec.horizon < 0) throw ValidationError("invalid instance spec");
  Rng rng(spec.seed);
  Instance inst;
  inst.spec = spec;
  if (spec.product_mode) {
    std::vector<Factor> factors;
    // Keep the product within 64 atoms.
    int depth = std::max(1, std::min(spec.horizon, 6));
    for (int k = 0; k < depth; ++k) {
      Factor f;
      f.atoms = {"0", "1"};
      auto m = detail::normalized({static_cast<long>(1 + rng.below(8)), static_cast<long>(1 + rng.below(8))});
      auto n = detail::normalized({static_cast<long>(1 + rng.below(8)), static_cast<long>(1 + rng.below(8))});
      if (spec.force_singular_part && k == 0) n = {Rational(1), Rational(0)};
      f.mu = m;
      f.nu = n;
      factors.push_back(f);
    }
    auto ps = product_space(factors, depth);
    inst.space = ps.space;
    inst.mu = ps.mu;
    inst.nu = ps.nu;
    inst.spec.atom_count = static_cast<int>(ps.space.atom_count());
    inst.spec.horizon = depth;
  } else {
    const auto n = static_cast<std::size_t>(spec.atom_count);
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < n; ++i) labels.push_back("w" + std::to_string(i));
    inst.space = build_space(labels, spec.horizon, detail::random_chain(rng, n, spec.horizon));
    auto mw = detail::random_weights(rng, n, spec.sparsity);
    auto nw = detail::random_weights(rng, n, spec.sparsity);
    if (spec.force_singular_part) {
      auto j = rng.below(n);
      nw[j] = 0;
      if (mw[j] == 0) mw[j] = static_cast<long>(1 + rng.below(16));
      bool any = false;
      for (auto x : nw) any = any || x > 0;
      if (!any) nw[(j + 1) % n] = 1;
    }
    inst.mu = Measure(detail::normalized(mw), "mu");
    inst.nu = Measure(detail::normalized(nw), "nu");
  }
  const auto& space = inst.space;
  std::vector<std::vector<ExtendedTime>> all;
  std::size_t count = 0;
  if (!spec.force_predictable_T && space.atom_count() <= 16) {
    count = enumerate_times(
        space, [&](const std::vector<ExtendedTime>& t) { all.push_back(t); }, 4096);
  }
  if (!all.empty() && count < 4096)
    inst.T = StoppingTime(space, all[rng.below(all.size())]);
  else
    inst.T = StoppingTime(space, detail::greedy_time(rng, space, spec.force_predictable_T));
  return inst;
}

struct Check {
  std::string claim;
  bool holds = true;
  std::string witness;
};

struct Report {
  std::string theorem;
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  double elapsed = 0;

  bool ok() const {
    for (const auto& c : checks)
      if (!c.holds) return false;
    return true;
  }
  void add(std::string claim, bool holds, std::string witness = {}) {
    checks.push_back({std::move(claim), holds, holds ? std::string{} : std::move(witness)});
  }
};

namespace detail {
inline std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

inline std::string atom_witness(const FilteredSpace& space, std::size_t atom, const std::string& what) {
  return "atom=" + space.label(atom) + " " + what;
}

using Times = std::vector<ExtendedTime>;

/// First Q-positive atom where two per-atom times differ.
inline std::optional<std::size_t> first_difference(const Times& a, const Times& b, const Measure& Q) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (Q[i] > 0 && !(a[i] == b[i])) return i;
  return std::nullopt;
}

inline void compare_times(Report& r, const FilteredSpace& space, const std::string& claim, const Times& a,
                          const Times& b, const Measure& Q) {
  auto d = first_difference(a, b, Q);
  r.add(claim, !d, d ? atom_witness(space, *d, "lhs=" + a[*d].to_string() + " rhs=" + b[*d].to_string()) : "");
}

inline void compare_times(Report& r, const FilteredSpace& space, const std::string& claim,
                          const StoppingTime& a, const StoppingTime& b, const Measure& Q) {
  compare_times(r, space, claim, a.times(), b.times(), Q);
}

/// T on B, INF elsewhere; only compared on Q-positive atoms, so adaptedness is not required.
inline Times restrict_pointwise(const StoppingTime& T, const EventSet& B) {
  Times t(T.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = B.contains(i) ? T(i) : kInf;
  return t;
}
}  // namespace detail

/// Everything derived from (space, μ, ν) that the per-T checks share.
struct PairContext {
  FilteredSpace space;
  Measure mu;
  Measure nu;
  HellingerProcess hp;
  StoppingTime H;
};

inline PairContext make_context(const FilteredSpace& space, const Measure& mu, const Measure& nu) {
  PairContext c{space, mu, nu, hellinger_process(space, mu, nu), {}};
  c.H = process_stopping_time(space, c.hp.dA, &c.hp.Q);
  return c;
}

/// μ_T ∼ ν_T on E and μ_T ⊥ ν_T on E^c, plus the same split through the separating time.
inline Report verify_hahn(const PairContext& ctx, const StoppingTime& T) {
  Report r{"theorem1", 0, {}, 0};
  auto hahn = hahn_at_T(ctx.space, ctx.hp, T);
  auto chk = check_hahn(ctx.mu, ctx.nu, hahn);
  auto w = chk.witness_cell ? "cell of F_T containing atom " +
                                  ctx.space.label(hahn.sigma.cells.cell(*chk.witness_cell).front())
                            : std::string{};
  r.add("E is F_T-measurable", chk.measurable, "E not a union of F_T cells");
  r.add("mu_T ~ nu_T on E", chk.equivalent_on_E, w);
  r.add("mu_T _|_ nu_T on E^c", chk.singular_on_Ec, w);
  auto st = separating_time(ctx.space, ctx.hp);
  EventSet before(ctx.space.atom_count());
  for (std::size_t i = 0; i < before.size(); ++i) before.set(i, T(i) < st(i));
  auto sep = check_hahn(ctx.mu, ctx.nu, before, hahn.sigma.cells);
  r.add("mu_T ~ nu_T on {T < S~}", sep.equivalent_on_E, "separating time split");
  r.add("mu_T _|_ nu_T on {T >= S~}", sep.singular_on_Ec, "separating time split");
  return r;
}

/// Stopping times of A, M, Y, z, z' against H, and the {H<S} identities. Set identities are compared
/// on Q-positive atoms.
inline Report verify_stopping_identities(const PairContext& ctx) {
  Report r{"theorem2", 0, {}, 0};
  const auto& sp = ctx.space;
  const auto& hp = ctx.hp;
  const auto& Q = hp.Q;
  const auto& H = ctx.H;
  const auto& S = hp.S;
  const int N = sp.horizon();
  detail::compare_times(r, sp, "H = stopping time of A", process_stopping_time(sp, hp.dA, &Q), H, Q);
  detail::compare_times(r, sp, "H = stopping time of Y", process_stopping_time(hp.y2, &Q), H, Q);
  detail::compare_times(r, sp, "H = stopping time of z", process_stopping_time(hp.z.z, &Q), H, Q);
  detail::compare_times(r, sp, "H = stopping time of z'", process_stopping_time(hp.zp.z, &Q), H, Q);
  auto TM = process_stopping_time(sp, hp.dM, &Q);
  {
    std::optional<std::size_t> bad;
    for (std::size_t i = 0; i < sp.atom_count() && !bad; ++i)
      if (Q[i] > 0 && TM(i) > H(i)) bad = i;
    r.add("stopping time of M <= H", !bad,
          bad ? detail::atom_witness(sp, *bad, "T_M=" + TM(*bad).to_string() + " H=" + H(*bad).to_string()) : "");
  }
  detail::compare_times(r, sp, "H = stopping time of M", TM, H, Q);

  std::optional<std::size_t> le, eq3, inc, equiv, eq_set, restr;
  auto after = [&](const StoppingTime& T) {
    std::vector<Rational> x(sp.atom_count());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = S(i).is_infinity() ? Rational(1) : Rational(0);
    return cond_expect_on(sigma_T(sp, T).cells, x, Q);
  };
  auto p_inf = after(H);
  // Oracle Hahn set: atoms charged by both measures.
  EventSet B(sp.atom_count());
  for (std::size_t i = 0; i < B.size(); ++i) B.set(i, ctx.mu[i] > 0 && ctx.nu[i] > 0);
  auto HBc = detail::restrict_pointwise(H, B.complement());
  EventSet eq(sp.atom_count()), lt(sp.atom_count());
  for (std::size_t i = 0; i < eq.size(); ++i) {
    eq.set(i, H(i) == S(i));
    lt.set(i, H(i) < S(i));
  }
  auto SH = detail::restrict_pointwise(H, eq);
  for (std::size_t i = 0; i < sp.atom_count(); ++i) {
    if (Q[i] == 0) continue;
    if (S(i) < H(i) && !le) le = i;
    const Rational& zH = hp.z.z.at(H(i), i);
    bool mid = zH > 0 && zH < 2;
    if (lt.contains(i) != mid && !eq3) eq3 = i;
    if (lt.contains(i) && !S(i).is_infinity() && !inc) inc = i;
    if (lt.contains(i) && !(ctx.mu[i] > 0 && ctx.nu[i] > 0) && !equiv) equiv = i;
    bool eq_rhs = p_inf[i] == 0 || H(i).is_infinity();
    if (eq.contains(i) != eq_rhs && !eq_set) eq_set = i;
    if (!(HBc[i] == S(i)) && !restr) restr = i;
  }
  auto w = [&](const std::optional<std::size_t>& a) {
    if (!a) return std::string{};
    return detail::atom_witness(sp, *a,
                                "H=" + H(*a).to_string() + " S=" + S(*a).to_string() +
                                    " z_H=" + to_string(hp.z.z.at(H(*a), *a)));
  };
  r.add("H <= S", !le, w(le));
  r.add("{H<S} = {0<z_H<2}", !eq3, w(eq3));
  r.add("{H<S} subset {S=inf}", !inc, w(inc));
  r.add("mu ~ nu on {H<S}", !equiv, w(equiv));
  detail::compare_times(r, sp, "S = H restricted to {H=S}", SH, S.times(), Q);
  r.add("{H=S} = {E[S=inf | F_H] = 0} u {H=inf}", !eq_set, w(eq_set));
  r.add("S = H restricted to B^c", !restr, w(restr));
  // {h_H = inf} is empty on a finite horizon; checked anyway.
  bool finite = true;
  for (std::size_t i = 0; i < sp.atom_count(); ++i) finite = finite && std::isfinite(hp.h.at(H(i), i));
  r.add("{h_H = inf} is empty", finite, "h_H infinite");
  (void)N;
  return r;
}

/// One-step quotient against the direct oracle, the z_{T-} K_T factorization, predictable case and the
/// {z_{T-} = 0} inclusion.
inline Report verify_condexp_at_T(const PairContext& ctx, const StoppingTime& T) {
  Report r{"theorem56", 0, {}, 0};
  const auto& sp = ctx.space;
  const auto& Q = ctx.hp.Q;
  for (int which = 0; which < 2; ++which) {
    const auto& z = which == 0 ? ctx.hp.z.z : ctx.hp.zp.z;
    const std::string name = which == 0 ? "z" : "z'";
    auto ce = cond_expect_at_T(z, T, Q);
    auto direct = cond_expect_at_T_direct(z, T, Q);
    auto left = left_limit_at_T(z, T);
    auto K = k_factor(z, T, Q);
    std::optional<std::size_t> quot, fact, pred, incl;
    bool predictable = is_predictable(sp, T);
    for (std::size_t i = 0; i < sp.atom_count(); ++i) {
      if (ce[i] != direct[i] && !quot) quot = i;
      if (ce[i] != left[i] * K[i] && !fact) fact = i;
      if (predictable && T(i) > ExtendedTime::at(0) && T(i) < kInf && (K[i] != 1 || ce[i] != left[i]) && !pred) pred = i;
      if (Q[i] > 0 && left[i] == 0 && direct[i] != 0 && !incl) incl = i;
    }
    auto w = [&](const std::optional<std::size_t>& a) {
      if (!a) return std::string{};
      return detail::atom_witness(sp, *a,
                                  "T=" + T(*a).to_string() + " formula=" + to_string(ce[*a]) +
                                      " oracle=" + to_string(direct[*a]) + " K=" + to_string(K[*a]));
    };
    r.add("one-step quotient = E[" + name + "_T | F_T-] oracle", !quot, w(quot));
    r.add("E[" + name + "_T | F_T-] = " + name + "_T- K_T", !fact, w(fact));
    if (predictable) r.add("predictable T: K_T = 1 and E[" + name + "_T | F_T-] = " + name + "_T-", !pred, w(pred));
    r.add("{" + name + "_T- = 0} subset {d(mu_T-)/dQ_T- = 0}", !incl, w(incl));
  }
  if (is_predictable(sp, T)) {
    // V_n = (T-1) ∧ n: z at V_N equals z_{T-}.
    auto V = announcing_sequence(sp, T);
    auto left = left_limit_at_T(ctx.hp.z.z, T);
    std::optional<std::size_t> bad;
    for (std::size_t i = 0; i < sp.atom_count() && !bad; ++i)
      if (ctx.hp.z.z.at(V.back()(i), i) != left[i]) bad = i;
    r.add("lim z_{V_n} = z_{T-}", !bad, bad ? detail::atom_witness(sp, *bad, "announcing limit") : "");
  }
  return r;
}

/// True when {z_{T-} = 0} is a strict subset of {E[z_T | F_{T-}] = 0} on Q-positive atoms.
inline bool left_null_strict(const PairContext& ctx, const StoppingTime& T) {
  auto ce = cond_expect_at_T(ctx.hp.z.z, T, ctx.hp.Q);
  auto left = left_limit_at_T(ctx.hp.z.z, T);
  for (std::size_t i = 0; i < left.size(); ++i)
    if (ctx.hp.Q[i] > 0 && ce[i] == 0 && left[i] != 0) return true;
  return false;
}

namespace detail {
/// Pointwise minimum over all constrained stopping times; second pass checks it is one of them.
inline std::optional<StoppingTime> pointwise_minimum(const FilteredSpace& space, const TimeConstraint& c,
                                                     bool& attained, std::size_t limit) {
  std::vector<ExtendedTime> best(space.atom_count(), kDelta);
  auto n = enumerate_times(
      space,
      [&](const std::vector<ExtendedTime>& t) {
        for (std::size_t i = 0; i < t.size(); ++i) best[i] = std::min(best[i], t[i]);
      },
      limit + 1, &c);
  if (n > limit || n == 0) return std::nullopt;
  attained = false;
  enumerate_times(
      space, [&](const std::vector<ExtendedTime>& t) { attained = attained || t == best; }, limit + 1, &c);
  return StoppingTime(space, best);
}
}  // namespace detail

/// Minimal W with W = S on N_0, by the closed rule min{t : cell_t(ω) ∩ N_0 ⊆ {S <= t}}.
inline StoppingTime minimal_w_rule(const FilteredSpace& space, const Hellinger0Process& h0) {
  std::vector<ExtendedTime> W(space.atom_count(), kInf);
  for (std::size_t i = 0; i < W.size(); ++i)
    for (int t = 0; t <= space.horizon(); ++t) {
      bool ok = true;
      for (auto a : space.at(t).cell(space.cell_of(t, i)))
        if (h0.N0.contains(a) && h0.S(a) > ExtendedTime::at(t)) ok = false;
      if (ok) {
        W[i] = ExtendedTime::at(t);
        break;
      }
    }
  return StoppingTime(space, std::move(W));
}

/// Minimal W with W = S on N_0 by exhaustive enumeration; nullopt when the search exceeds `limit`.
/// `attained` reports whether the pointwise minimum is itself admissible.
inline std::optional<StoppingTime> minimal_w_exhaustive(const FilteredSpace& space, const Hellinger0Process& h0,
                                                        bool& attained, std::size_t limit = 2'000'000) {
  TimeConstraint c;
  c.fixed.resize(space.atom_count());
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    if (h0.N0.contains(i)) c.fixed[i] = h0.S(i);
  return detail::pointwise_minimum(space, c, attained, limit);
}

/// Minimal U with X = X^U by exhaustive enumeration over U >= L (L = last change).
inline std::optional<StoppingTime> minimal_u_exhaustive(const FilteredSpace& space, const ChangeSet& cs,
                                                        bool& attained, std::size_t limit = 2'000'000) {
  TimeConstraint c;
  c.lower.assign(space.atom_count(), ExtendedTime::at(0));
  for (std::size_t t = 0; t < cs.changes.size(); ++t)
    for (std::size_t i = 0; i < space.atom_count(); ++i)
      if (cs.changes[t].contains(i)) c.lower[i] = ExtendedTime::at(static_cast<int>(t) + 1);
  if (cs.at_infinity)
    for (std::size_t i = 0; i < space.atom_count(); ++i)
      if (cs.at_infinity->contains(i)) c.lower[i] = kInf;
  return detail::pointwise_minimum(space, c, attained, limit);
}

/// H_0 against the minimal-W oracle, plus the H' and S identities.
inline Report verify_h0(const PairContext& ctx, bool exhaustive = true) {
  Report r{"h0", 0, {}, 0};
  const auto& sp = ctx.space;
  const auto& Q = ctx.hp.Q;
  auto h0 = hellinger0_process(sp, ctx.hp);
  auto H0 = stopping_time_h0(h0);
  detail::compare_times(r, sp, "H0 = min{t : cell_t cap N0 within {S<=t}}", H0, minimal_w_rule(sp, h0),
                        Measure(std::vector<Rational>(sp.atom_count(), Rational(1))));
  if (exhaustive && sp.atom_count() <= 8 && sp.horizon() <= 3) {
    bool attained = false;
    auto W = minimal_w_exhaustive(sp, h0, attained);
    if (W) {
      detail::compare_times(r, sp, "H0 = exhaustive minimal W with W = S on N0", H0, *W,
                            Measure(std::vector<Rational>(sp.atom_count(), Rational(1))));
      r.add("minimal W is admissible", attained, "pointwise minimum is not a feasible W");
    }
  }
  {
    std::optional<std::size_t> bad;
    for (std::size_t i = 0; i < sp.atom_count() && !bad; ++i)
      if (h0.N0.contains(i) && !(H0(i) == h0.S(i))) bad = i;
    r.add("H0 = S on N0", !bad, bad ? detail::atom_witness(sp, *bad, "H0=" + H0(*bad).to_string()) : "");
  }
  auto hp = s_zero_and_h_prime(sp, ctx.hp);
  const auto& H = ctx.H;
  const auto& S = ctx.hp.S;
  EventSet lt_S(sp.atom_count()), lt_Hp(sp.atom_count());
  for (std::size_t i = 0; i < sp.atom_count(); ++i) {
    lt_S.set(i, H(i) < S(i));
    lt_Hp.set(i, H(i) < hp.H_prime(i));
  }
  detail::compare_times(r, sp, "H' = H restricted to {H<S} u {h_H=inf}", hp.H_prime.times(),
                        detail::restrict_pointwise(H, lt_S), Q);
  detail::compare_times(r, sp, "S = H restricted to {H<H'} u {h_H=inf}", S.times(),
                        detail::restrict_pointwise(H, lt_Hp), Q);
  detail::compare_times(r, sp, "S0 = S", hp.S0, S, Q);
  return r;
}

/// process_stopping_time against the exhaustive minimal U >= last change, for z, z', Y, A and M.
inline Report verify_stopping_minimality(const PairContext& ctx) {
  Report r{"stopping", 0, {}, 0};
  const auto& sp = ctx.space;
  const auto& hp = ctx.hp;
  const Measure all(std::vector<Rational>(sp.atom_count(), Rational(1)));
  const std::pair<const char*, ChangeSet> sets[] = {
      {"z", change_set(hp.z.z)}, {"z'", change_set(hp.zp.z)}, {"Y", change_set(hp.y2)}, {"A", hp.dA}, {"M", hp.dM}};
  for (const auto& [name, cs] : sets) {
    bool attained = false;
    auto U = minimal_u_exhaustive(sp, cs, attained);
    if (!U) continue;
    detail::compare_times(r, sp, std::string("stopping time of ") + name + " = exhaustive minimum",
                          process_stopping_time(sp, cs), *U, all);
    r.add(std::string("minimal U for ") + name + " is a stopping time", attained);
  }
  return r;
}

/// The curve a_n(α), its limits and the dichotomy criteria on the truncation levels 0..N.
inline Report verify_curve(const FilteredSpace& space, const Measure& mu, const Measure& nu) {
  Report r{"theorem4", 0, {}, 0};
  std::vector<double> grid;
  for (int j = 1; j < 64; ++j) grid.push_back(j / 64.0);
  auto curve = hellinger_curve(space, mu, nu, grid, {});
  const int N = space.horizon();
  auto oracle = lebesgue(mu.weights(), nu.weights());
  // Range, limit and monotonicity.
  bool in_range = true, matches = true, monotone_n = true;
  for (std::size_t i = 0; i < curve.levels.size(); ++i)
    for (std::size_t j = 0; j < grid.size(); ++j) {
      double v = curve.values[i][j];
      if (v < 0 || v > 1 + 1e-12) in_range = false;
      if (i && v > curve.values[i - 1][j] + 1e-12) monotone_n = false;
    }
  for (std::size_t j = 0; j < grid.size(); ++j)
    if (std::fabs(curve.limit_estimate[j] - hellinger_integral(grid[j], mu, nu)) > 1e-12) matches = false;
  r.add("0 <= a_n(alpha) <= 1", in_range);
  r.add("a(alpha) = H(alpha; mu, nu)", matches);
  r.add("a_n(alpha) nonincreasing in n", monotone_n);
  {
    // |d/dα a_n| <= max |log(μ/ν)| over cells charged by both, so grid steps are bounded.
    bool lipschitz = true;
    std::string w;
    for (std::size_t i = 0; i < curve.levels.size(); ++i) {
      auto m = restrict(mu, space.at(curve.levels[i]));
      auto v = restrict(nu, space.at(curve.levels[i]));
      double L = 0;
      for (std::size_t c = 0; c < m.weights.size(); ++c)
        if (m.weights[c] > 0 && v.weights[c] > 0)
          L = std::max(L, std::fabs(std::log(to_double(m.weights[c]) / to_double(v.weights[c]))));
      for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
        double d = std::fabs(curve.values[i][j + 1] - curve.values[i][j]);
        if (d > (grid[j + 1] - grid[j]) * L * (1 + 1e-9) + 1e-15) {
          lipschitz = false;
          w = "n=" + std::to_string(curve.levels[i]) + " alpha=" + detail::fmt(grid[j]);
        }
      }
    }
    r.add("a_n(alpha) continuous on the grid", lipschitz, w);
  }
  // Singularity criteria.
  bool singular = oracle.verdict() == PairVerdict::singular;
  bool any_a0 = false, all_a0 = true, any_b0 = false, all_b0 = true;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    bool a0 = curve.limit_estimate[j] == 0.0, b0 = curve.b[j] == 0.0;
    any_a0 = any_a0 || a0;
    all_a0 = all_a0 && a0;
    any_b0 = any_b0 || b0;
    all_b0 = all_b0 && b0;
  }
  r.add("mu _|_ nu <=> exists a(alpha) = 0", singular == any_a0);
  r.add("mu _|_ nu <=> a = 0 identically", singular == all_a0);
  r.add("mu _|_ nu <=> exists b(alpha) = 0", singular == any_b0);
  r.add("mu _|_ nu <=> b = 0 identically", singular == all_b0);
  r.add("not singular <=> a(alpha) > 0 for all alpha", !singular == !any_a0);
  r.add("not singular <=> b(alpha) > 0 for all alpha", !singular == !any_b0);
  // Absolute continuity: uniformity surrogate.
  bool ac = oracle.verdict() == PairVerdict::equivalent || oracle.verdict() == PairVerdict::absolutely_continuous;
  bool eqv = oracle.verdict() == PairVerdict::equivalent;
  bool up = curve.uniform_gap_up <= CurveConfig{}.uniform_tolerance;
  bool down = curve.uniform_gap_down <= CurveConfig{}.uniform_tolerance;
  r.add("mu << nu <=> a_n -> 1 uniformly as alpha -> 1", ac == up, "gap=" + detail::fmt(curve.uniform_gap_up));
  r.add("mu ~ nu <=> uniform at both ends", eqv == (up && down),
        "gaps=" + detail::fmt(curve.uniform_gap_up) + "," + detail::fmt(curve.uniform_gap_down));
  // Norm of the a.c. part.
  double at_max = hellinger_integral(1.0 - std::ldexp(1.0, -20), restrict(mu, space.at(N)), restrict(nu, space.at(N)));
  double norm = to_double(oracle.norm_mu_a());
  r.add("lim a(alpha) = ||mu_a|| within 1e-5", std::fabs(at_max - norm) <= 1e-5,
        "value=" + detail::fmt(at_max) + " oracle=" + detail::fmt(norm));
  // Density at the last level against the oracle density.
  auto last = lebesgue(restrict(mu, space.at(N)), restrict(nu, space.at(N)));
  bool dens = true;
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    if (nu[i] > 0 && last.density_a[space.cell_of(N, i)] != oracle.density_a[i]) dens = false;
  r.add("d mu_a / d nu = lim d mu_n / d nu_n", dens);
  return r;
}

/// T + 1, with values past the horizon sent to INF.
inline StoppingTime shifted_time(const FilteredSpace& space, const StoppingTime& T) {
  std::vector<ExtendedTime> t(T.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    t[i] = T(i).is_finite() && T(i).value() < space.horizon() ? ExtendedTime::at(T(i).value() + 1) : kInf;
  return StoppingTime(space, std::move(t));
}

/// The four norm formulas against their oracles: |value(α_max) - oracle| <= tol and the
/// Lyapunov-normalized sweep is nondecreasing.
inline Report verify_norm_formulas(const PairContext& ctx, const StoppingTime& T, double tol = 1e-5,
                                         int alpha_max_k = 20) {
  SweepConfig cfg;
  cfg.alpha_max_k = alpha_max_k;
  Report r{"normac", 0, {}, 0};
  const auto& sp = ctx.space;
  auto add = [&](const DecompositionReport& d) {
    r.add(d.mode + ": |value - oracle| <= tol", d.residual <= tol,
          "value=" + detail::fmt(d.formula_value) + " oracle=" + to_string(d.oracle_value));
    r.add(d.mode + ": Lyapunov sweep nondecreasing", d.lyapunov_monotone);
    r.add(d.mode + ": density limit matches", d.density_matches);
  };
  add(norm_ac_T_minus(sp, ctx.mu, ctx.nu, ctx.hp.Q, T, {}, cfg));
  add(norm_ac_T(sp, ctx.mu, ctx.nu, T, {}, {}, cfg));
  add(norm_ac_discrete_cor(sp, ctx.mu, ctx.nu, ctx.hp.Q, T, {}, cfg));
  {
    // (T + 1) ∧ INF is predictable whenever T is a stopping time.
    const StoppingTime U = is_predictable(sp, T) ? T : shifted_time(sp, T);
    auto d = norm_ac_predictable(sp, ctx.mu, ctx.nu, U, {}, {}, cfg);
    add(d);
    auto tm = norm_ac_T_minus(sp, ctx.mu, ctx.nu, ctx.hp.Q, U, {}, cfg);
    r.add("predictable: announcing sequence value = T- value",
          std::fabs(d.formula_value - tm.formula_value) <= 1e-12 && d.oracle_value == tm.oracle_value);
  }
  auto loc = local_ac_sequence(sp, ctx.mu, ctx.nu);
  r.add("||mu_n^1|| nonincreasing", loc.nonincreasing);
  r.add("local a.c. difference bound", loc.difference_bound_holds, "slack=" + detail::fmt(loc.worst_slack));
  return r;
}

/// liminf chain on an eventually constant sequence f_1..f_{n0} = f (per atom), window n <= n0 + 5.
inline Report check_liminf_chain(const std::vector<std::vector<Rational>>& f_sequence,
                                       const std::vector<Rational>& f_limit, const Measure& m, double tol = 1e-9) {
  Report r{"prop2", 0, {}, 0};
  const std::size_t n0 = f_sequence.size();
  std::vector<std::vector<Rational>> window = f_sequence;
  for (int k = 0; k < 5; ++k) window.push_back(f_limit);
  // α-grid reaching k = 40 so the α -> 1 limit resolves below the tolerance.
  auto alphas = alpha_grid_up(40);
  auto integral = [&](const std::vector<Rational>& f) {
    Rational s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * m[i];
    return s;
  };
  auto power_integral = [&](const std::vector<Rational>& f, double a) {
    double s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += power(to_double(f[i]), a) * to_double(m[i]);
    return s;
  };
  const Rational limit_int = integral(f_limit);
  // Tail of the window: the sequence is constant from n0 on.
  Rational lo = integral(window[n0]), hi = lo;
  for (std::size_t n = n0; n < window.size(); ++n) {
    lo = std::min(lo, integral(window[n]));
    hi = std::max(hi, integral(window[n]));
  }
  double lo_alpha = 1e300, hi_alpha = -1e300;
  for (std::size_t n = n0; n < window.size(); ++n) {
    double v = power_integral(window[n], alphas.back());
    lo_alpha = std::min(lo_alpha, v);
    hi_alpha = std::max(hi_alpha, v);
  }
  const double fint = to_double(limit_int);
  r.add("liminf int f_n^alpha = int f", std::fabs(lo_alpha - fint) <= tol,
        "lhs=" + detail::fmt(lo_alpha) + " rhs=" + detail::fmt(fint));
  r.add("int f <= liminf int f_n", limit_int <= lo);
  r.add("liminf int f_n <= limsup int f_n", lo <= hi);
  r.add("limsup int f_n = limsup int f_n^alpha", std::fabs(to_double(hi) - hi_alpha) <= tol,
        "lhs=" + detail::fmt(to_double(hi)) + " rhs=" + detail::fmt(hi_alpha));
  // The Lyapunov step: [int f_n^α dm]^(1/α) <= int f_n dm · ||m||^((1-α)/α).
  bool lyap = true;
  const double mass = to_double(m.total());
  for (const auto& f : window)
    for (double a : alphas) {
      double lhs = std::pow(power_integral(f, a), 1.0 / a);
      double rhs = to_double(integral(f)) * std::pow(mass, (1.0 - a) / a);
      if (lhs > rhs * (1 + 1e-12) + 1e-15) lyap = false;
    }
  r.add("Lyapunov bound on the window", lyap);
  bool conv = lo == hi && hi == limit_int;
  bool alpha_lim = std::fabs(lo_alpha - fint) <= tol && std::fabs(hi_alpha - fint) <= tol;
  r.add("lim int f_n = int f <=> alpha-limits agree", conv == alpha_lim);
  bool nonzero = limit_int != 0;
  for (const auto& f : window) nonzero = nonzero && integral(f) != 0;
  bool f_pos = true;
  for (std::size_t i = 0; i < f_limit.size(); ++i) f_pos = f_pos && (m[i] == 0 || f_limit[i] > 0);
  if (nonzero && f_pos) {
    double worst = 0;
    for (const auto& f : window) {
      double d = to_double(integral(f));
      worst = std::max(worst, std::fabs(power_integral(f, alphas.back()) / std::pow(d, alphas.back()) - 1.0));
    }
    bool normed = limit_int != 0 && worst <= tol;
    r.add("lim int f_n = int f <=> normalized powers tend to 1", conv == normed, "worst=" + detail::fmt(worst));
  }
  return r;
}

/// Random eventually constant sequence for the liminf chain.
inline Report liminf_trial(std::uint64_t seed, double tol = 1e-9) {
  Rng rng(seed ^ 0x2545f4914f6cdd1dULL);
  std::size_t k = 2 + rng.below(7);
  std::vector<long> mw(k);
  for (auto& x : mw) x = static_cast<long>(1 + rng.below(8));
  Measure m(detail::normalized(mw));
  std::size_t n0 = 1 + rng.below(6);
  auto rand_f = [&](bool allow_zero) {
    std::vector<Rational> f(k);
    for (auto& x : f) {
      long num = allow_zero && rng.chance(0.2) ? 0 : static_cast<long>(1 + rng.below(12));
      x = Rational(num, static_cast<long>(1 + rng.below(4)));
      x.canonicalize();
    }
    return f;
  };
  std::vector<std::vector<Rational>> seq;
  auto limit = rand_f(rng.chance(0.3));
  for (std::size_t n = 0; n < n0; ++n) seq.push_back(rng.chance(0.5) ? rand_f(true) : limit);
  auto r = check_liminf_chain(seq, limit, m, tol);
  r.seed = seed;
  return r;
}

/// Perturbation bound for μ ∼ ν and μ + μ0 ∼ ν + ν0 on the α-grid.
inline Report check_perturbation_bound(const Measure& mu, const Measure& nu, const Measure& mu0, const Measure& nu0,
                                  double tol = 1e-9) {
  Report r{"lemma2", 0, {}, 0};
  auto sum_mu = mu + mu0, sum_nu = nu + nu0;
  bool pre1 = mu.support() == nu.support(), pre2 = sum_mu.support() == sum_nu.support();
  r.add("mu ~ nu", pre1);
  r.add("mu + mu0 ~ nu + nu0", pre2);
  std::vector<double> alphas;
  for (int j = 1; j < 32; ++j) alphas.push_back(j / 32.0);
  for (double a : alpha_grid_up(20)) alphas.push_back(a);
  double worst = 1e300;
  std::string where;
  const double m = to_double(mu.total()), n = to_double(nu.total()), m0 = to_double(mu0.total()),
               n0 = to_double(nu0.total());
  for (double a : alphas) {
    double lhs = std::fabs(hellinger_integral(a, sum_mu, sum_nu) - hellinger_integral(a, mu, nu));
    double rhs = 2 * power(m, a) * power(n0, 1 - a) + 2 * power(m0, a) * power(n, 1 - a) +
                 4 * power(m0, a) * power(n0, 1 - a);
    if (rhs - lhs < worst) {
      worst = rhs - lhs;
      where = "alpha=" + detail::fmt(a) + " lhs=" + detail::fmt(lhs) + " rhs=" + detail::fmt(rhs);
    }
  }
  r.add("perturbation bound", worst >= -tol, where);
  return r;
}

inline Report perturbation_trial(std::uint64_t seed, double tol = 1e-9) {
  Rng rng(seed ^ 0x94d049bb133111ebULL);
  std::size_t k = 2 + rng.below(10);
  std::vector<Rational> mu(k), nu(k), mu0(k), nu0(k);
  auto w = [&](long hi) {
    Rational q(static_cast<long>(1 + rng.below(static_cast<std::uint64_t>(hi))), 16);
    q.canonicalize();
    return q;
  };
  for (std::size_t i = 0; i < k; ++i) {
    bool core = rng.chance(0.6);
    if (core) {
      mu[i] = w(16);
      nu[i] = w(16);
    }
    // Perturbations: zero, small or large, keeping μ + μ0 ∼ ν + ν0.
    int mode = static_cast<int>(rng.below(4));
    if (mode == 1 || (!core && mode != 0)) mu0[i] = rng.chance(0.5) ? w(2) : w(16);
    if (mode == 2 || (!core && mode != 0)) nu0[i] = rng.chance(0.5) ? w(2) : w(16);
    if (!core && (mu0[i] > 0) != (nu0[i] > 0)) {
      if (mu0[i] == 0) mu0[i] = w(4);
      if (nu0[i] == 0) nu0[i] = w(4);
    }
  }
  bool any = false;
  for (std::size_t i = 0; i < k; ++i) any = any || mu[i] > 0;
  if (!any) {
    mu[0] = Rational(1, 2);
    nu[0] = Rational(1, 2);
  }
  auto r = check_perturbation_bound(Measure(mu), Measure(nu), Measure(mu0), Measure(nu0), tol);
  r.seed = seed;
  return r;
}

/// Named Bernoulli factor families for the Kakutani check.
struct FactorFamily {
  std::string name;
  FactorGenerator generator;
  KakutaniVerdict truth;
  std::function<double(std::size_t)> tail_bound;  // may be empty
};

inline Factor bernoulli_factor(const Rational& p, const Rational& q) {
  return Factor{{"H", "T"}, {p, Rational(1) - p}, {q, Rational(1) - q}};
}

inline std::vector<FactorFamily> kakutani_families() {
  std::vector<FactorFamily> f;
  f.push_back({"identical", [](std::size_t) { return bernoulli_factor(Rational(1, 2), Rational(1, 2)); },
               KakutaniVerdict::absolutely_continuous, [](std::size_t) { return 0.0; }});
  f.push_back({"constant deviation", [](std::size_t) { return bernoulli_factor(Rational(1, 2), Rational(3, 4)); },
               KakutaniVerdict::singular, {}});
  // ν_k = Bernoulli(1/2 + ε_k), ε_k = 2^-(k+1); 1 - f_k <= (2 - √2) ε_k^2 · 2 for ε_k <= 1/4.
  f.push_back({"summable deviation",
               [](std::size_t k) {
                 mpz_class den = 1;
                 mpz_pow_ui(den.get_mpz_t(), mpz_class(2).get_mpz_t(), static_cast<unsigned long>(k + 1));
                 Rational eps(mpz_class(1), den);
                 return bernoulli_factor(Rational(1, 2), Rational(Rational(1, 2) + eps));
               },
               KakutaniVerdict::absolutely_continuous,
               [](std::size_t m) {
                 return (2.0 - std::sqrt(2.0)) * 2.0 * std::pow(4.0, -static_cast<double>(m + 1)) / 3.0;
               }});
  return f;
}

/// Verdict against the closed-form truth, plus truncation consistency with the curve criteria at depths <= 12.
inline Report verify_kakutani(const FactorFamily& fam, std::size_t max_depth = 1000) {
  Report r{"kakutani", 0, {}, 0};
  KakutaniConfig cfg;
  cfg.tail_bound = fam.tail_bound;
  auto res = kakutani(fam.generator, max_depth, cfg);
  r.add(fam.name + ": verdict " + to_string(fam.truth), res.verdict == fam.truth,
        "got " + to_string(res.verdict) + " at depth " + std::to_string(res.depth) + " p=" + detail::fmt(res.upper));
  bool nonincreasing = true;
  for (std::size_t k = 1; k < res.partial_products.size(); ++k)
    if (res.partial_products[k] > res.partial_products[k - 1]) nonincreasing = false;
  r.add(fam.name + ": partial products nonincreasing, factors <= 1", nonincreasing && res.factors_bounded);
  if (res.verdict == KakutaniVerdict::singular)
    r.add(fam.name + ": partial product below 1e-9", res.upper < 1e-9, detail::fmt(res.upper));
  // Truncations: a_n(1/2) on the product space equals p_n; verdict consistent with the uniform-limit criterion.
  const std::size_t deepest = 12;
  std::vector<Factor> factors;
  for (std::size_t k = 1; k <= deepest; ++k) factors.push_back(fam.generator(k));
  auto ps = product_space(factors, static_cast<int>(deepest));
  auto full = kakutani(fam.generator, deepest, {});
  bool agree = true, consistent = true;
  std::string w;
  for (int n = 1; n <= static_cast<int>(deepest); ++n) {
    double an = hellinger_integral(0.5, restrict(ps.mu, ps.space.at(n)), restrict(ps.nu, ps.space.at(n)));
    double pn = full.partial_products[static_cast<std::size_t>(n) - 1];
    if (std::fabs(an - pn) > 1e-12 * std::max(1.0, pn)) {
      agree = false;
      w = "n=" + std::to_string(n) + " a_n=" + detail::fmt(an) + " p_n=" + detail::fmt(pn);
    }
    // Singular families drive b(1/2) to 0; a.c. families keep a_n(1/2) above the bracket's lower end.
    if (res.verdict == KakutaniVerdict::absolutely_continuous && an < res.lower - 1e-12) consistent = false;
    if (res.verdict == KakutaniVerdict::singular && n > 1) {
      double prev = full.partial_products[static_cast<std::size_t>(n) - 2];
      if (!(pn < prev)) consistent = false;
    }
    if (an <= 0) consistent = false;  // every finite truncation is ≪, never singular
  }
  r.add(fam.name + ": a_n(1/2) = p_n up to depth 12", agree, w);
  r.add(fam.name + ": truncation verdicts consistent with the curve criteria", consistent);
  return r;
}

/// Every chain F_0 ⊇ F_1 ⊇ F_2 = atomic on four atoms (60 chains).
inline std::vector<FilteredSpace> all_four_atom_spaces() {
  // All 15 set partitions of {0,1,2,3} as restricted growth strings.
  std::vector<std::vector<long>> parts;
  for (long a = 0; a < 1; ++a)
    for (long b = 0; b <= a + 1; ++b)
      for (long c = 0; c <= std::max(a, b) + 1; ++c)
        for (long d = 0; d <= std::max({a, b, c}) + 1; ++d) parts.push_back({a, b, c, d});
  std::vector<FilteredSpace> out;
  const std::vector<std::string> labels{"a", "b", "c", "d"};
  for (const auto& p1 : parts)
    for (const auto& p0 : parts) {
      auto P1 = Partition::from_labels(p1), P0 = Partition::from_labels(p0);
      if (!P1.refines(P0)) continue;
      out.push_back(build_space(labels, 2, {P0, P1, Partition::atomic(4)}));
    }
  return out;
}

/// 225 support patterns (nonempty μ support × nonempty ν support) with fixed base weights.
inline std::vector<std::pair<Measure, Measure>> four_atom_measure_patterns() {
  std::vector<std::pair<Measure, Measure>> out;
  const long base_mu[] = {3, 1, 2, 5}, base_nu[] = {1, 4, 3, 2};
  for (int sm = 1; sm < 16; ++sm)
    for (int sn = 1; sn < 16; ++sn) {
      std::vector<long> m(4), n(4);
      for (int i = 0; i < 4; ++i) {
        m[static_cast<std::size_t>(i)] = (sm >> i) & 1 ? base_mu[i] : 0;
        n[static_cast<std::size_t>(i)] = (sn >> i) & 1 ? base_nu[i] : 0;
      }
      out.emplace_back(Measure(detail::normalized(m), "mu"), Measure(detail::normalized(n), "nu"));
    }
  return out;
}

/// Exhaustive tier: every 4-atom N=2 chain, every support pattern, every stopping time.
/// Visitor receives (context, stopping times) once per measure pair.
template <class F>
void for_each_exhaustive_pair(F&& visit) {
  for (const auto& space : all_four_atom_spaces()) {
    auto times = all_stopping_times(space);
    for (const auto& [mu, nu] : four_atom_measure_patterns()) visit(make_context(space, mu, nu), times);
  }
}

}  // namespace hlab
