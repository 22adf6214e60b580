#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "hellinger.hpp"
#include "processes.hpp"
#include "rational.hpp"
#include "space.hpp"

namespace hlab {

/// Lebesgue decomposition of two measures given on the same cells.
struct LebesgueDecomposition {
  std::vector<Rational> mu_a, mu_s, nu_a, nu_s;
  std::vector<Rational> density_a;  // dμ_a/dν on {ν > 0}, 0 elsewhere

  Rational norm_mu_a() const {
    Rational s = 0;
    for (const auto& w : mu_a) s += w;
    return s;
  }
  Rational norm_nu_a() const {
    Rational s = 0;
    for (const auto& w : nu_a) s += w;
    return s;
  }
  PairVerdict verdict() const {
    bool mu_sing = false, nu_sing = false, any = false;
    for (std::size_t c = 0; c < mu_a.size(); ++c) {
      if (mu_s[c] > 0) mu_sing = true;
      if (nu_s[c] > 0) nu_sing = true;
      if (mu_a[c] > 0) any = true;
    }
    if (!any) return PairVerdict::singular;
    if (!mu_sing && !nu_sing) return PairVerdict::equivalent;
    if (!mu_sing) return PairVerdict::absolutely_continuous;
    return PairVerdict::mixed;
  }
};

inline LebesgueDecomposition lebesgue(const std::vector<Rational>& m, const std::vector<Rational>& n) {
  LebesgueDecomposition d;
  for (std::size_t c = 0; c < m.size(); ++c) {
    bool both = m[c] > 0 && n[c] > 0;
    d.mu_a.push_back(n[c] > 0 ? m[c] : Rational(0));
    d.mu_s.push_back(n[c] > 0 ? Rational(0) : m[c]);
    d.nu_a.push_back(m[c] > 0 ? n[c] : Rational(0));
    d.nu_s.push_back(m[c] > 0 ? Rational(0) : n[c]);
    d.density_a.push_back(both ? Rational(m[c] / n[c]) : Rational(0));
  }
  return d;
}

inline LebesgueDecomposition lebesgue(const CellMeasure& m, const CellMeasure& n) {
  if (!(m.partition == n.partition)) throw ValidationError("lebesgue needs measures on the same cells");
  return lebesgue(m.weights, n.weights);
}

struct HahnDecomposition {
  EventSet E;
  EventSet E_complement;
  SigmaAlgebra sigma;
};

/// E = ({T < S} ∪ {T = S = INF}) ∩ {h_T < ∞}; h is finite here, so the last factor is Ω.
inline HahnDecomposition hahn_at_T(const FilteredSpace& space, const HellingerProcess& hp, const StoppingTime& T) {
  detail::require_no_delta(T);
  EventSet E(space.atom_count());
  for (std::size_t i = 0; i < E.size(); ++i) {
    bool finite_h = std::isfinite(hp.h.at(T(i), i));
    E.set(i, finite_h && (T(i) < hp.S(i) || (T(i) == hp.S(i) && T(i).is_infinity())));
  }
  return {E, E.complement(), sigma_T(space, T)};
}

struct HahnCheck {
  bool measurable = true;     // E is a union of sigma cells
  bool equivalent_on_E = true;
  bool singular_on_Ec = true;
  std::optional<std::size_t> witness_cell;
  bool ok() const { return measurable && equivalent_on_E && singular_on_Ec; }
};

/// Oracle: on each cell C of sigma, μ and ν charge C ∩ E together or not at all, and never both
/// charge C ∩ E^c.
inline HahnCheck check_hahn(const Measure& mu, const Measure& nu, const EventSet& E, const Partition& sigma) {
  HahnCheck r;
  r.measurable = sigma.is_union_of_cells(E);
  for (std::size_t c = 0; c < sigma.cell_count(); ++c) {
    Rational me = 0, ne = 0, mc = 0, nc = 0;
    for (auto a : sigma.cell(c)) {
      if (E.contains(a)) {
        me += mu[a];
        ne += nu[a];
      } else {
        mc += mu[a];
        nc += nu[a];
      }
    }
    if ((me > 0) != (ne > 0)) {
      r.equivalent_on_E = false;
      if (!r.witness_cell) r.witness_cell = c;
    }
    if (mc > 0 && nc > 0) {
      r.singular_on_Ec = false;
      if (!r.witness_cell) r.witness_cell = c;
    }
  }
  return r;
}

inline HahnCheck check_hahn(const Measure& mu, const Measure& nu, const HahnDecomposition& d) {
  return check_hahn(mu, nu, d.E, d.sigma.cells);
}

/// S̃ = δ on B = {0 < Y_N < 2}, S off B. Throws ValidationError unless z + z' = 2 on Q-positive atoms.
inline StoppingTime separating_time(const FilteredSpace& space, const HellingerProcess& hp) {
  const int N = space.horizon();
  std::vector<ExtendedTime> t(space.atom_count());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (hp.Q[i] > 0 && hp.z.z.at(N, i) + hp.zp.z.at(N, i) != 2)
      throw ValidationError("z + z' != 2 at atom " + std::to_string(i));
    const Rational& y2 = hp.y2.at(N, i);
    bool in_B = y2 > 0 && y2 < 4;
    t[i] = in_B ? kDelta : hp.S(i);
  }
  return StoppingTime(space, std::move(t), true);
}

/// E_ν[z 1_{Ω∖A} | G] / E_ν[Ω∖A | G] per atom of Ω∖A; atoms of A get 0.
inline std::vector<Rational> restricted_density(const std::vector<Rational>& z, const EventSet& A,
                                                const Partition& G, const Measure& nu) {
  std::vector<Rational> out(z.size(), Rational(0));
  for (const auto& cell : G.cells()) {
    Rational num = 0, den = 0;
    for (auto a : cell)
      if (!A.contains(a)) {
        num += z[a] * nu[a];
        den += nu[a];
      }
    Rational v = den == 0 ? Rational(0) : Rational(num / den);
    for (auto a : cell)
      if (!A.contains(a)) out[a] = v;
  }
  return out;
}

/// Pullback: given α ≤ p(μ) on the cells of p, the part μ^1 of μ with p(μ^1) = α,
/// allocated proportionally inside each cell.
inline Measure part_pullback(const Measure& mu, const Partition& p, const std::vector<Rational>& alpha) {
  auto pushed = restrict(mu, p);
  std::vector<Rational> w(mu.size(), Rational(0));
  for (std::size_t c = 0; c < p.cell_count(); ++c) {
    if (alpha[c] < 0 || alpha[c] > pushed.weights[c])
      throw ValidationError("alpha is not dominated by the pushforward on cell " + std::to_string(c));
    if (pushed.weights[c] == 0) continue;
    for (auto a : p.cell(c)) w[a] = mu[a] * alpha[c] / pushed.weights[c];
  }
  return Measure(std::move(w), mu.name());
}

struct DecompositionReport {
  std::string mode;
  double norm_ac = 0;
  double formula_value = 0;  // at the largest alpha
  Rational oracle_value = 0;
  double residual = 0;
  PairVerdict verdict = PairVerdict::mixed;
  std::vector<double> alphas;
  std::vector<double> sweep;  // formula value per alpha
  std::vector<double> tail3;
  bool lyapunov_monotone = true;
  bool density_matches = true;
};

struct SweepConfig {
  int alpha_max_k = 20;
  // Slack for the floating Lyapunov comparison.
  double lyapunov_slack = 1e-12;
};

namespace detail {
inline void finish_report(DecompositionReport& r, const LebesgueDecomposition& oracle) {
  r.oracle_value = oracle.norm_mu_a();
  r.verdict = oracle.verdict();
  r.formula_value = r.sweep.back();
  r.norm_ac = r.formula_value;
  r.residual = std::fabs(r.formula_value - to_double(r.oracle_value));
  for (std::size_t j = r.sweep.size() >= 3 ? r.sweep.size() - 3 : 0; j < r.sweep.size(); ++j) r.tail3.push_back(r.sweep[j]);
}

inline bool lyapunov_monotone(const std::vector<double>& alphas, const std::vector<double>& values, double slack) {
  for (std::size_t j = 1; j < values.size(); ++j) {
    double prev = std::pow(values[j - 1], 1.0 / alphas[j - 1]);
    double cur = std::pow(values[j], 1.0 / alphas[j]);
    if (cur < prev - slack) return false;
  }
  return true;
}

inline std::vector<double> sorted_alphas(std::vector<double> alphas, int kmax) {
  if (alphas.empty()) alphas = alpha_grid_up(kmax);
  std::sort(alphas.begin(), alphas.end());
  return alphas;
}

// Sweep of Σ_cells m^α n^(1-α) and the density check against the oracle on the same cells.
inline DecompositionReport cell_sweep(std::string mode, const CellMeasure& m, const CellMeasure& n,
                                      const std::vector<double>& alphas, const SweepConfig& cfg) {
  DecompositionReport r;
  r.mode = std::move(mode);
  r.alphas = alphas;
  for (double a : alphas) r.sweep.push_back(hellinger_integral(a, m, n));
  r.lyapunov_monotone = lyapunov_monotone(alphas, r.sweep, cfg.lyapunov_slack);
  finish_report(r, lebesgue(m, n));
  return r;
}
}  // namespace detail

/// ‖(μ_{T-})_a‖ through the one-step sum
/// ∫_{T=0} Y_0(α) dP_0 + ∫_{N<T} Y_N(α) dP_N + Σ_k ∫ E[z_k 1{T=k}|F_{k-1}]^α E[z'_k 1{T=k}|F_{k-1}]^(1-α) dP_{k-1}.
inline DecompositionReport norm_ac_T_minus(const FilteredSpace& space, const Measure& mu, const Measure& nu,
                                           const Measure& P, const StoppingTime& T, std::vector<double> alphas,
                                           const SweepConfig& cfg = {}) {
  detail::require_no_delta(T);
  const int N = space.horizon();
  auto dz = density_process(space, mu, P);
  auto dzp = density_process(space, nu, P);
  dz.require_locally_ac();
  dzp.require_locally_ac();
  alphas = detail::sorted_alphas(std::move(alphas), cfg.alpha_max_k);

  // Integrand pieces as (P-weight, E[z ...], E[z' ...]) so every α reuses them.
  struct Piece {
    double p, x, y;
  };
  std::vector<Piece> pieces;
  const auto& f0 = space.at(0);
  for (const auto& cell : f0.cells()) {
    if (!(T(cell.front()) == ExtendedTime::at(0))) continue;
    pieces.push_back({to_double(P.of(cell)), to_double(dz.z.at(0, cell.front())), to_double(dzp.z.at(0, cell.front()))});
  }
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    if (T(i).is_infinity()) pieces.push_back({to_double(P[i]), to_double(dz.z.at(N, i)), to_double(dzp.z.at(N, i))});
  for (int k = 1; k <= N; ++k) {
    EventSet stop = T.equal_to(ExtendedTime::at(k));
    for (const auto& cell : space.at(k - 1).cells()) {
      Rational pc = P.of(cell);
      if (pc == 0) continue;
      Rational ex = 0, ey = 0;
      for (const auto& d : space.at(k).cells()) {
        auto a = d.front();
        if (space.cell_of(k - 1, a) != space.cell_of(k - 1, cell.front()) || !stop.contains(a)) continue;
        Rational pd = P.of(d);
        ex += dz.z.at(k, a) * pd;
        ey += dzp.z.at(k, a) * pd;
      }
      if (ex == 0 && ey == 0) continue;
      pieces.push_back({to_double(pc), to_double(Rational(ex / pc)), to_double(Rational(ey / pc))});
    }
  }
  DecompositionReport r;
  r.mode = "Tminus";
  r.alphas = alphas;
  for (double a : alphas) {
    double s = 0;
    for (const auto& p : pieces) s += p.p * power(p.x, a) * power(p.y, 1.0 - a);
    r.sweep.push_back(s);
  }
  r.lyapunov_monotone = detail::lyapunov_monotone(alphas, r.sweep, cfg.lyapunov_slack);
  auto sigma = sigma_T_minus(space, T);
  detail::finish_report(r, lebesgue(restrict(mu, sigma), restrict(nu, sigma)));
  return r;
}

/// ‖(μ_T)_a‖ as the α-limit of H(α; μ_{T∧V_n}, ν_{T∧V_n}) at the last n; V_n = n by default.
inline DecompositionReport norm_ac_T(const FilteredSpace& space, const Measure& mu, const Measure& nu,
                                     const StoppingTime& T, std::vector<StoppingTime> V, std::vector<double> alphas,
                                     const SweepConfig& cfg = {}) {
  detail::require_no_delta(T);
  if (V.empty())
    for (int n = 0; n <= space.horizon(); ++n) V.push_back(StoppingTime::constant(space, ExtendedTime::at(n)));
  for (std::size_t n = 1; n < V.size(); ++n)
    for (std::size_t i = 0; i < space.atom_count(); ++i)
      if (V[n](i) < V[n - 1](i)) throw ValidationError("V_n must be nondecreasing");
  alphas = detail::sorted_alphas(std::move(alphas), cfg.alpha_max_k);
  auto stopped_at = pointwise_min(space, T, V.back());
  auto sigma = sigma_T(space, stopped_at);
  auto m = restrict(mu, sigma), n = restrict(nu, sigma);
  auto r = detail::cell_sweep("T", m, n, alphas, cfg);
  // Oracle on F_T itself.
  auto sigmaT = sigma_T(space, T);
  auto oracle = lebesgue(restrict(mu, sigmaT), restrict(nu, sigmaT));
  r.oracle_value = oracle.norm_mu_a();
  r.verdict = oracle.verdict();
  r.residual = std::fabs(r.formula_value - to_double(r.oracle_value));
  // Density limit d(μ_{T∧V_n})_a/dν_{T∧V_n} against the oracle density, per atom.
  auto limit = lebesgue(m, n);
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    if (limit.density_a[sigma.cells.cell_of(i)] != oracle.density_a[sigmaT.cells.cell_of(i)]) r.density_matches = false;
  return r;
}

/// Announcing-sequence validation: V_n stopping times, nondecreasing, V_n < T on {T > 0}, and the
/// last V_n equal to T - 1 on {0 < T <= N}, N on {T = INF}.
inline void validate_announcing(const FilteredSpace& space, const StoppingTime& T, const std::vector<StoppingTime>& V) {
  if (V.empty()) throw NotAnnouncing("empty announcing sequence");
  for (std::size_t n = 0; n < V.size(); ++n)
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
      if (n && V[n](i) < V[n - 1](i)) throw NotAnnouncing("announcing sequence is not nondecreasing");
      if (T(i) > ExtendedTime::at(0) && !(V[n](i) < T(i))) throw NotAnnouncing("V_n >= T on {T > 0}");
    }
  const auto& last = V.back();
  for (std::size_t i = 0; i < space.atom_count(); ++i) {
    ExtendedTime want = T(i) == ExtendedTime::at(0) ? ExtendedTime::at(0)
                        : T(i).is_infinity()       ? ExtendedTime::at(space.horizon())
                                                   : ExtendedTime::at(T(i).value() - 1);
    if (!(last(i) == want)) throw NotAnnouncing("announcing sequence does not reach T - 1");
  }
}

/// ‖(μ_{T-})_a‖ for predictable T as the α-limit of H(α; μ_{V_n}, ν_{V_n}).
inline DecompositionReport norm_ac_predictable(const FilteredSpace& space, const Measure& mu, const Measure& nu,
                                               const StoppingTime& T, std::vector<StoppingTime> V,
                                               std::vector<double> alphas, const SweepConfig& cfg = {}) {
  detail::require_no_delta(T);
  if (V.empty()) V = announcing_sequence(space, T);
  validate_announcing(space, T, V);
  alphas = detail::sorted_alphas(std::move(alphas), cfg.alpha_max_k);
  auto sigma = sigma_T(space, V.back());
  auto m = restrict(mu, sigma), n = restrict(nu, sigma);
  auto r = detail::cell_sweep("predictable", m, n, alphas, cfg);
  auto past = sigma_T_minus(space, T);
  auto oracle = lebesgue(restrict(mu, past), restrict(nu, past));
  r.oracle_value = oracle.norm_mu_a();
  r.verdict = oracle.verdict();
  r.residual = std::fabs(r.formula_value - to_double(r.oracle_value));
  auto limit = lebesgue(m, n);
  for (std::size_t i = 0; i < space.atom_count(); ++i)
    if (limit.density_a[sigma.cells.cell_of(i)] != oracle.density_a[past.cells.cell_of(i)]) r.density_matches = false;
  return r;
}

/// ‖(μ_T)_a‖ through Σ_{k<N} ∫_{T=k} Y_k(α) dP_k + ∫_{N<=T} Y_N(α) dP_N, densities relative to P.
inline DecompositionReport norm_ac_discrete_cor(const FilteredSpace& space, const Measure& mu, const Measure& nu,
                                                const Measure& P, const StoppingTime& T, std::vector<double> alphas,
                                                const SweepConfig& cfg = {}) {
  detail::require_no_delta(T);
  const int N = space.horizon();
  auto dz = density_process(space, mu, P);
  auto dzp = density_process(space, nu, P);
  dz.require_locally_ac();
  dzp.require_locally_ac();
  alphas = detail::sorted_alphas(std::move(alphas), cfg.alpha_max_k);
  struct Piece {
    double p, x, y;
  };
  std::vector<Piece> pieces;
  for (int k = 0; k <= N; ++k)
    for (const auto& cell : space.at(k).cells()) {
      auto a = cell.front();
      bool take = k < N ? T(a) == ExtendedTime::at(k) : ExtendedTime::at(N) <= T(a);
      if (!take) continue;
      pieces.push_back({to_double(P.of(cell)), to_double(dz.z.at(k, a)), to_double(dzp.z.at(k, a))});
    }
  DecompositionReport r;
  r.mode = "c3";
  r.alphas = alphas;
  for (double al : alphas) {
    double s = 0;
    for (const auto& p : pieces) s += p.p * power(p.x, al) * power(p.y, 1.0 - al);
    r.sweep.push_back(s);
  }
  r.lyapunov_monotone = detail::lyapunov_monotone(alphas, r.sweep, cfg.lyapunov_slack);
  auto sigma = sigma_T(space, T);
  detail::finish_report(r, lebesgue(restrict(mu, sigma), restrict(nu, sigma)));
  return r;
}

/// ‖μ_n^1‖ for n = 0..N (a.c. part of μ_n relative to ν_n) and the limit d.
struct LocalAcSequence {
  std::vector<Rational> norms;
  Rational limit = 0;
  bool nonincreasing = true;
  // Difference check |I_n(α) - Ĩ_n(α)| <= 3 ‖μ_n^1 - μ̃_n‖^α ‖ν‖^(1-α) on the α-grid.
  bool difference_bound_holds = true;
  double worst_slack = 0;
};

inline LocalAcSequence local_ac_sequence(const FilteredSpace& space, const Measure& mu, const Measure& nu,
                                         const std::vector<double>& alphas = alpha_grid_up(20)) {
  LocalAcSequence out;
  // μ̃: a.c. part of μ relative to ν on the terminal (atomic) level.
  Measure tilde = mu.restricted_to(nu.support());
  const double nu_norm = to_double(nu.total());
  out.worst_slack = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= space.horizon(); ++n) {
    auto m = restrict(mu, space.at(n)), v = restrict(nu, space.at(n)), mt = restrict(tilde, space.at(n));
    auto norm = lebesgue(m, v).norm_mu_a();
    if (!out.norms.empty() && norm > out.norms.back()) out.nonincreasing = false;
    out.norms.push_back(norm);
    double gap = to_double(Rational(norm - mt.total()));
    for (double a : alphas) {
      double lhs = std::fabs(hellinger_integral(a, m, v) - hellinger_integral(a, mt, v));
      double rhs = 3.0 * power(std::max(gap, 0.0), a) * power(nu_norm, 1.0 - a);
      out.worst_slack = std::min(out.worst_slack, rhs - lhs);
      if (lhs > rhs + 1e-12) out.difference_bound_holds = false;
    }
  }
  out.limit = out.norms.back();
  return out;
}

enum class KakutaniVerdict { absolutely_continuous, singular, undecided };

inline std::string to_string(KakutaniVerdict v) {
  switch (v) {
    case KakutaniVerdict::absolutely_continuous: return "absolutely_continuous";
    case KakutaniVerdict::singular: return "singular";
    case KakutaniVerdict::undecided: return "undecided";
  }
  return "?";
}

struct KakutaniConfig {
  double singular_threshold = 1e-9;
  double tail_tolerance = 1e-9;
  // Upper bound on Σ_{k>m} (1 - f_k); without it the a.c. verdict is never issued.
  std::function<double(std::size_t m)> tail_bound;
};

struct KakutaniResult {
  KakutaniVerdict verdict = KakutaniVerdict::undecided;
  std::size_t depth = 0;  // factors used
  std::vector<double> factors;
  std::vector<double> partial_products;
  double lower = 0, upper = 1;  // bracket for the infinite product
  bool factors_bounded = true;  // f_k <= 1 for all k
};

/// Factor k (1-based) of the sequence.
using FactorGenerator = std::function<Factor(std::size_t k)>;

/// Per-factor affinity ∫ sqrt(dμ_k/dν_k) dν_k = Σ sqrt(μ_k ν_k). Throws FactorNotAC(k) unless μ_k ≪ ν_k.
inline double factor_affinity(const Factor& f, std::size_t k) {
  double s = 0;
  for (std::size_t j = 0; j < f.atoms.size(); ++j) {
    if (f.mu[j] > 0 && f.nu[j] == 0) throw FactorNotAC(k);
    s += std::sqrt(to_double(f.mu[j]) * to_double(f.nu[j]));
  }
  return s;
}

inline KakutaniResult kakutani(const FactorGenerator& factors, std::size_t max_depth, const KakutaniConfig& cfg = {}) {
  KakutaniResult r;
  double p = 1;
  for (std::size_t k = 1; k <= max_depth; ++k) {
    double f = factor_affinity(factors(k), k);
    if (f > 1.0 + 1e-15) r.factors_bounded = false;
    p *= f;
    r.factors.push_back(f);
    r.partial_products.push_back(p);
    r.depth = k;
    r.upper = p;
    if (p < cfg.singular_threshold) {
      r.verdict = KakutaniVerdict::singular;
      r.lower = 0;
      return r;
    }
    if (cfg.tail_bound) {
      double tail = cfg.tail_bound(k);
      r.lower = p * std::max(0.0, 1.0 - tail);
      if (tail < cfg.tail_tolerance) {
        r.verdict = KakutaniVerdict::absolutely_continuous;
        return r;
      }
    }
  }
  return r;
}

}  // namespace hlab
