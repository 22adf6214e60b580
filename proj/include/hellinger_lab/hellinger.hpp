#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "errors.hpp"
#include "processes.hpp"
#include "rational.hpp"
#include "space.hpp"

namespace hlab {

/// {1 - 2^-k : k = 1..kmax}.
inline std::vector<double> alpha_grid_up(int kmax = 20) {
  std::vector<double> a;
  for (int k = 1; k <= kmax; ++k) a.push_back(1.0 - std::ldexp(1.0, -k));
  return a;
}

/// {2^-k : k = 1..kmax}, listed from 1/2 downwards.
inline std::vector<double> alpha_grid_down(int kmax = 20) {
  std::vector<double> a;
  for (int k = 1; k <= kmax; ++k) a.push_back(std::ldexp(1.0, -k));
  return a;
}

/// Y(α) = z^α z'^(1-α), 0^α = 0.
inline RealProcess y_alpha(const RationalProcess& z, const RationalProcess& zp, double alpha) {
  RealProcess y{z.space, {}, std::nullopt};
  for (std::size_t t = 0; t < z.values.size(); ++t) {
    std::vector<double> row(z.values[t].size());
    for (std::size_t c = 0; c < row.size(); ++c)
      row[c] = power(to_double(z.values[t][c]), alpha) * power(to_double(zp.values[t][c]), 1.0 - alpha);
    y.values.push_back(std::move(row));
  }
  return y;
}

/// Σ m_i^α n_i^(1-α) over paired weights.
inline double hellinger_sum(const std::vector<Rational>& m, const std::vector<Rational>& n, double alpha) {
  double s = 0;
  for (std::size_t i = 0; i < m.size(); ++i) s += power(to_double(m[i]), alpha) * power(to_double(n[i]), 1.0 - alpha);
  return s;
}

/// H(α; μ, ν) = E_P[z^α z'^(1-α)] with z, z' densities relative to P on atoms.
/// Throws NotDominating if P misses mass of μ or ν.
inline double hellinger_integral(double alpha, const Measure& mu, const Measure& nu, const Measure& P) {
  double s = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (P[i] == 0) {
      if (mu[i] > 0 || nu[i] > 0) throw NotDominating("P does not dominate (mu + nu)/2 at atom " + std::to_string(i));
      continue;
    }
    double z = to_double(Rational(mu[i] / P[i]));
    double zp = to_double(Rational(nu[i] / P[i]));
    s += power(z, alpha) * power(zp, 1.0 - alpha) * to_double(P[i]);
  }
  return s;
}

inline double hellinger_integral(double alpha, const Measure& mu, const Measure& nu) {
  return hellinger_sum(mu.weights(), nu.weights(), alpha);
}

/// H(α; μ|G, ν|G) for measures restricted to the same cells.
inline double hellinger_integral(double alpha, const CellMeasure& mu, const CellMeasure& nu) {
  return hellinger_sum(mu.weights, nu.weights, alpha);
}

enum class PairVerdict { equivalent, absolutely_continuous, singular, mixed };

inline std::string to_string(PairVerdict v) {
  switch (v) {
    case PairVerdict::equivalent: return "equivalent";
    case PairVerdict::absolutely_continuous: return "absolutely_continuous";
    case PairVerdict::singular: return "singular";
    case PairVerdict::mixed: return "mixed";
  }
  return "?";
}

/// a_n(α) over truncation levels. values[i][j] is level levels[i], alpha alphas[j].
struct HellingerCurve {
  std::vector<int> levels;
  std::vector<double> alphas;
  std::vector<std::vector<double>> values;
  std::vector<double> b;               // min over levels, per alpha
  std::vector<double> limit_estimate;  // value at the deepest level, per alpha
  double uniform_gap_up = 0;           // max_n (1 - a_n(α)) at the largest alpha
  double uniform_gap_down = 0;         // max_n (1 - a_n(α)) at the smallest alpha
  bool singular = false;               // some a(α) is exactly 0
  PairVerdict verdict = PairVerdict::mixed;
};

struct CurveConfig {
  // Verdict thresholds for the "a_n(α) → 1 uniformly in n" surrogate.
  double uniform_tolerance = 1e-4;
  int kmax = 20;
};

inline HellingerCurve hellinger_curve(const FilteredSpace& space, const Measure& mu, const Measure& nu,
                                      std::vector<double> alphas, std::vector<int> levels,
                                      const CurveConfig& cfg = {}) {
  HellingerCurve c;
  if (levels.empty())
    for (int n = 0; n <= space.horizon(); ++n) levels.push_back(n);
  std::sort(levels.begin(), levels.end());
  std::sort(alphas.begin(), alphas.end());
  c.levels = levels;
  c.alphas = alphas;
  for (int n : levels) {
    auto m = restrict(mu, space.at(n));
    auto v = restrict(nu, space.at(n));
    std::vector<double> row;
    for (double a : alphas) row.push_back(hellinger_integral(a, m, v));
    c.values.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    double lo = c.values.front()[j];
    for (const auto& row : c.values) lo = std::min(lo, row[j]);
    c.b.push_back(lo);
    c.limit_estimate.push_back(c.values.back()[j]);
    if (c.values.back()[j] == 0.0) c.singular = true;
  }
  // Uniformity surrogate on the extreme grid points.
  double a_up = 1.0 - std::ldexp(1.0, -cfg.kmax), a_down = std::ldexp(1.0, -cfg.kmax);
  for (int n : levels) {
    auto m = restrict(mu, space.at(n));
    auto v = restrict(nu, space.at(n));
    c.uniform_gap_up = std::max(c.uniform_gap_up, 1.0 - hellinger_integral(a_up, m, v));
    c.uniform_gap_down = std::max(c.uniform_gap_down, 1.0 - hellinger_integral(a_down, m, v));
  }
  bool ac = c.uniform_gap_up <= cfg.uniform_tolerance;
  bool ca = c.uniform_gap_down <= cfg.uniform_tolerance;
  if (c.singular)
    c.verdict = PairVerdict::singular;
  else if (ac && ca)
    c.verdict = PairVerdict::equivalent;
  else if (ac)
    c.verdict = PairVerdict::absolutely_continuous;
  else
    c.verdict = PairVerdict::mixed;
  return c;
}

/// Hellinger process of order 1/2 with its ingredients. Change sets are exact: A (and h) change on
/// an F_{t-1} cell iff some Q-positive child has Y_t^2 different from Y_{t-1}^2.
struct HellingerProcess {
  Measure Q;
  DensityProcess z;
  DensityProcess zp;
  RationalProcess y2;  // z z'
  RealProcess Y;
  RealProcess A;
  RealProcess M;
  RealProcess h;
  ChangeSet dA;  // also the change set of h
  ChangeSet dM;
  StoppingTime S;
};

namespace detail {
inline RealProcess sqrt_of(const RationalProcess& y2) {
  RealProcess y{y2.space, {}, std::nullopt};
  for (const auto& row : y2.values) {
    std::vector<double> r(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) r[c] = std::sqrt(to_double(row[c]));
    y.values.push_back(std::move(r));
  }
  return y;
}
}  // namespace detail

inline HellingerProcess hellinger_process(const FilteredSpace& space, const Measure& mu, const Measure& nu) {
  HellingerProcess hp;
  hp.Q = midpoint(mu, nu);
  const auto& Q = hp.Q;
  hp.z = density_process(space, mu, Q);
  hp.zp = density_process(space, nu, Q);
  hp.y2 = RationalProcess{space, {}, std::nullopt};
  for (std::size_t t = 0; t < hp.z.z.values.size(); ++t) {
    std::vector<Rational> row(hp.z.z.values[t].size());
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = hp.z.z.values[t][c] * hp.zp.z.values[t][c];
    hp.y2.values.push_back(std::move(row));
  }
  hp.Y = detail::sqrt_of(hp.y2);
  hp.S = first_zero_time(hp.z.z, hp.zp.z);

  const int N = space.horizon();
  const std::size_t n0 = space.at(0).cell_count();
  hp.A = {space, {std::vector<double>(n0, 0.0)}, std::nullopt};
  hp.h = {space, {std::vector<double>(n0, 0.0)}, std::nullopt};
  hp.M = {space, {hp.Y.values[0]}, std::nullopt};

  for (int t = 1; t <= N; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const auto& prev = space.at(t - 1);
    const auto& part = space.at(t);
    std::vector<double> A(part.cell_count()), M(part.cell_count()), h(part.cell_count());
    EventSet changedA(space.atom_count()), changedM(space.atom_count());
    std::vector<std::vector<std::size_t>> children(prev.cell_count());
    for (std::size_t d = 0; d < part.cell_count(); ++d) children[prev.cell_of(part.cell(d).front())].push_back(d);

    for (std::size_t c = 0; c < prev.cell_count(); ++c) {
      const Rational qC = Q.of(prev.cell(c));
      const Rational& y2C = hp.y2.values[ts - 1][c];
      const double yC = hp.Y.values[ts - 1][c];
      const double AC = hp.A.values[ts - 1][c];
      const double MC = hp.M.values[ts - 1][c];
      const double hC = hp.h.values[ts - 1][c];

      bool flat = true;       // all Q-positive children keep Y^2
      bool level = true;      // all Q-positive children share one Y^2
      const Rational* first = nullptr;
      for (auto d : children[c]) {
        if (Q.of(part.cell(d)) == 0) continue;
        const Rational& y2D = hp.y2.values[ts][d];
        if (y2D != y2C) flat = false;
        if (!first) first = &y2D;
        else if (*first != y2D) level = false;
      }
      if (qC == 0) flat = level = true;

      double dA = 0;
      if (!flat) {
        // Σ q_D (Y_C - Y_D) / q_C with the difference of square roots taken as a quotient.
        for (auto d : children[c]) {
          const Rational qD = Q.of(part.cell(d));
          if (qD == 0) continue;
          const double yD = hp.Y.values[ts][d];
          if (yC + yD == 0) continue;
          double diff = to_double(Rational(y2C - hp.y2.values[ts][d]));
          dA += to_double(Rational(qD / qC)) * diff / (yC + yD);
        }
        dA = std::max(dA, 0.0);
      }
      for (auto d : children[c]) {
        const double yD = hp.Y.values[ts][d];
        A[d] = flat ? AC : AC + dA;
        h[d] = flat ? hC : (yC > 0 ? hC + dA / yC : hC);
        const bool nullD = Q.of(part.cell(d)) == 0;
        double m = yD + A[d];
        bool moved;
        if (nullD)
          moved = m != MC;
        else if (level)
          moved = false;
        else
          moved = std::fabs(m - MC) > 1e-12;
        M[d] = moved ? m : MC;
        for (auto a : part.cell(d)) {
          if (!flat) changedA.set(a);
          if (moved) changedM.set(a);
        }
      }
    }
    hp.A.values.push_back(std::move(A));
    hp.M.values.push_back(std::move(M));
    hp.h.values.push_back(std::move(h));
    hp.dA.changes.push_back(std::move(changedA));
    hp.dM.changes.push_back(std::move(changedM));
  }
  return hp;
}

/// Hellinger process of order 0: compensator of the jump of z at S when z' vanishes at S.
struct Hellinger0Process {
  RationalProcess A0;  // per-atom jump accumulation, adapted
  RationalProcess h0;
  EventSet N0;         // {0 < S <= N, z'_S = 0 < z'_{S-1}}, on F_S cells with Q > 0
  StoppingTime S;
};

inline Hellinger0Process hellinger0_process(const FilteredSpace& space, const HellingerProcess& hp) {
  const int N = space.horizon();
  const auto& z = hp.z.z;
  const auto& zp = hp.zp.z;
  Hellinger0Process out{{}, {}, EventSet(space.atom_count()), hp.S};
  for (std::size_t i = 0; i < space.atom_count(); ++i) {
    auto s = hp.S(i);
    if (!s.is_finite() || s.value() == 0) continue;
    int t = s.value();
    if (hp.Q.of(space.at(t).cell(space.cell_of(t, i))) == 0) continue;
    if (zp.at(t, i) == 0 && zp.at(t - 1, i) > 0) out.N0.set(i);
  }
  std::vector<std::vector<Rational>> a0(static_cast<std::size_t>(N) + 1, std::vector<Rational>(space.atom_count()));
  for (int t = 1; t <= N; ++t)
    for (std::size_t i = 0; i < space.atom_count(); ++i) {
      Rational jump = 0;
      if (out.N0.contains(i) && hp.S(i) == ExtendedTime::at(t)) jump = z.at(t, i) / z.at(t - 1, i);
      a0[static_cast<std::size_t>(t)][i] = a0[static_cast<std::size_t>(t) - 1][i] + jump;
    }
  out.A0 = RationalProcess::from_atoms(space, a0);
  out.h0 = RationalProcess{space, {std::vector<Rational>(space.at(0).cell_count(), Rational(0))}, std::nullopt};
  for (int t = 1; t <= N; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    const auto& part = space.at(t);
    std::vector<Rational> jumps(part.cell_count());
    for (std::size_t d = 0; d < part.cell_count(); ++d) {
      auto a = part.cell(d).front();
      jumps[d] = out.A0.at(t, a) - out.A0.at(t - 1, a);
    }
    auto dh = cond_expect(space, jumps, t, hp.Q, t - 1);
    std::vector<Rational> row(part.cell_count());
    for (std::size_t d = 0; d < part.cell_count(); ++d) {
      auto c = space.at(t - 1).cell_of(part.cell(d).front());
      row[d] = out.h0.values[ts - 1][c] + dh[c];
    }
    out.h0.values.push_back(std::move(row));
  }
  return out;
}

/// H_0: the stopping time of h(0).
inline StoppingTime stopping_time_h0(const Hellinger0Process& h0) {
  return process_stopping_time(h0.h0);
}

/// S^0, h' = h + t 1_{]S^0, ∞[} (with a jump to +inf at INF on {S^0 < INF}) and H' = its stopping time.
struct HPrime {
  StoppingTime S0;
  RealProcess h_prime;
  ChangeSet changes;
  StoppingTime H_prime;
};

inline HPrime s_zero_and_h_prime(const FilteredSpace& space, const HellingerProcess& hp) {
  const int N = space.horizon();
  const std::size_t n = space.atom_count();
  // S_n = S for n beyond 1 / (smallest positive density value), so scanning up to there decides ∪_n {S_n = S}.
  Rational smallest = 2;
  for (const auto* proc : {&hp.z.z, &hp.zp.z})
    for (const auto& row : proc->values)
      for (const auto& v : row)
        if (v > 0 && v < smallest) smallest = v;
  mpz_class bound_z = mpz_class(smallest.get_den() / smallest.get_num()) + 2;
  long bound = bound_z.fits_slong_p() ? bound_z.get_si() : std::numeric_limits<long>::max();
  EventSet hit(n);
  auto probe = [&](long k) {
    auto Sk = threshold_time(hp.z.z, hp.zp.z, k);
    for (std::size_t i = 0; i < n; ++i)
      if (Sk(i) == hp.S(i)) hit.set(i);
  };
  for (long k = 1; k <= std::min(bound, 64L); ++k) probe(k);
  if (bound > 64) probe(bound);
  std::vector<ExtendedTime> s0(n);
  for (std::size_t i = 0; i < n; ++i) s0[i] = hit.contains(i) ? hp.S(i) : kInf;
  HPrime out{StoppingTime(space, s0), {space, {}, std::nullopt}, {}, {}};

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(N) + 1, std::vector<double>(n));
  for (int t = 0; t <= N; ++t)
    for (std::size_t i = 0; i < n; ++i)
      rows[static_cast<std::size_t>(t)][i] = hp.h.at(t, i) + (ExtendedTime::at(t) > s0[i] ? t : 0);
  out.h_prime = RealProcess::from_atoms(space, rows);
  std::vector<double> term(n);
  EventSet inf_jump(n);
  for (std::size_t i = 0; i < n; ++i) {
    bool jumps = s0[i] < kInf;
    term[i] = jumps ? std::numeric_limits<double>::infinity() : hp.h.at(N, i);
    inf_jump.set(i, jumps);
  }
  out.h_prime.terminal = std::move(term);
  for (int t = 1; t <= N; ++t) {
    EventSet e = hp.dA.changes[static_cast<std::size_t>(t) - 1];
    for (std::size_t i = 0; i < n; ++i)
      if (ExtendedTime::at(t) > s0[i]) e.set(i);
    out.changes.changes.push_back(std::move(e));
  }
  out.changes.at_infinity = inf_jump;
  out.H_prime = process_stopping_time(space, out.changes, &hp.Q);
  return out;
}

}  // namespace hlab
