#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "partition.hpp"
#include "rational.hpp"
#include "space.hpp"
#include "time.hpp"

namespace hlab {

namespace detail {
template <class V>
V convert(const Rational& q) {
  if constexpr (std::is_same_v<V, Rational>)
    return q;
  else
    return static_cast<V>(q.get_d());
}
}  // namespace detail

/// One value per (t, cell of F_t), t = 0..N. An optional terminal value per atom stands for t = INF
/// (processes with a jump "at infinity").
template <class V>
struct AdaptedProcess {
  FilteredSpace space;
  std::vector<std::vector<V>> values;
  std::optional<std::vector<V>> terminal;

  const V& at(int t, std::size_t atom) const {
    return values[static_cast<std::size_t>(t)][space.cell_of(t, atom)];
  }
  const V& at(ExtendedTime t, std::size_t atom) const {
    if (t.is_infinity() && terminal) return (*terminal)[atom];
    return at(t.level(space.horizon()), atom);
  }

  /// Per-atom values at time t.
  std::vector<V> atoms_at(int t) const {
    std::vector<V> out(space.atom_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(t, i);
    return out;
  }

  /// Builds from per-atom values; throws NotMeasurable if some row is not constant on F_t cells.
  static AdaptedProcess from_atoms(const FilteredSpace& space, const std::vector<std::vector<V>>& rows) {
    if (rows.size() != static_cast<std::size_t>(space.horizon()) + 1)
      throw ValidationError("process needs one row per time");
    AdaptedProcess p{space, {}, std::nullopt};
    for (int t = 0; t <= space.horizon(); ++t) {
      const auto& part = space.at(t);
      const auto& row = rows[static_cast<std::size_t>(t)];
      std::vector<V> cells(part.cell_count());
      for (std::size_t c = 0; c < part.cell_count(); ++c) {
        const auto& members = part.cell(c);
        cells[c] = row[members.front()];
        for (auto a : members)
          if (!(row[a] == cells[c]))
            throw NotMeasurable("process is not adapted at time " + std::to_string(t));
      }
      p.values.push_back(std::move(cells));
    }
    return p;
  }

  friend bool operator==(const AdaptedProcess& a, const AdaptedProcess& b) {
    return a.values == b.values && a.terminal == b.terminal;
  }
};

using RationalProcess = AdaptedProcess<Rational>;
using RealProcess = AdaptedProcess<double>;

inline RealProcess to_real(const RationalProcess& x) {
  RealProcess r{x.space, {}, std::nullopt};
  for (const auto& row : x.values) {
    std::vector<double> d(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) d[c] = to_double(row[c]);
    r.values.push_back(std::move(d));
  }
  if (x.terminal) {
    std::vector<double> d;
    for (const auto& v : *x.terminal) d.push_back(to_double(v));
    r.terminal = std::move(d);
  }
  return r;
}

/// E_ρ[X | F_s] for X given on F_t cells, s <= t. Cells with ρ = 0 get 0.
template <class V>
std::vector<V> cond_expect(const FilteredSpace& space, const std::vector<V>& x, int t, const Measure& rho, int s) {
  const auto& fine = space.at(t);
  const auto& coarse = space.at(s);
  std::vector<V> num(coarse.cell_count(), V(0));
  std::vector<Rational> den(coarse.cell_count(), Rational(0));
  for (std::size_t d = 0; d < fine.cell_count(); ++d) {
    Rational w = rho.of(fine.cell(d));
    auto c = coarse.cell_of(fine.cell(d).front());
    num[c] += x[d] * detail::convert<V>(w);
    den[c] += w;
  }
  for (std::size_t c = 0; c < num.size(); ++c) num[c] = den[c] == 0 ? V(0) : V(num[c] / detail::convert<V>(den[c]));
  return num;
}

/// Direct E_ρ[x | G] for per-atom values x and G given by its cells; returned per atom.
template <class V>
std::vector<V> cond_expect_on(const Partition& g, const std::vector<V>& x, const Measure& rho) {
  std::vector<V> out(x.size(), V(0));
  for (const auto& cell : g.cells()) {
    V num(0);
    Rational den = 0;
    for (auto a : cell) {
      num += x[a] * detail::convert<V>(rho[a]);
      den += rho[a];
    }
    V value = den == 0 ? V(0) : V(num / detail::convert<V>(den));
    for (auto a : cell) out[a] = value;
  }
  return out;
}

/// Density of m relative to ρ on every F_t. Cells with m > 0 = ρ are flagged; their rational slot
/// holds 0 and `real_at` reads them as +inf.
struct DensityProcess {
  RationalProcess z;
  std::vector<std::vector<char>> infinite;

  bool locally_ac() const {
    for (const auto& row : infinite)
      for (char f : row)
        if (f) return false;
    return true;
  }
  bool flagged(int t, std::size_t atom) const {
    return infinite[static_cast<std::size_t>(t)][z.space.cell_of(t, atom)] != 0;
  }
  double real_at(int t, std::size_t atom) const {
    return flagged(t, atom) ? std::numeric_limits<double>::infinity() : to_double(z.at(t, atom));
  }
  /// Throws NotLocallyAC at the first flagged cell.
  void require_locally_ac() const {
    for (std::size_t t = 0; t < infinite.size(); ++t)
      for (std::size_t c = 0; c < infinite[t].size(); ++c)
        if (infinite[t][c]) throw NotLocallyAC(static_cast<int>(t), c);
  }
};

inline DensityProcess density_process(const FilteredSpace& space, const Measure& m, const Measure& rho) {
  DensityProcess d{{space, {}, std::nullopt}, {}};
  for (int t = 0; t <= space.horizon(); ++t) {
    const auto& part = space.at(t);
    std::vector<Rational> row(part.cell_count());
    std::vector<char> inf(part.cell_count(), 0);
    for (std::size_t c = 0; c < part.cell_count(); ++c) {
      Rational num = m.of(part.cell(c));
      Rational den = rho.of(part.cell(c));
      if (den == 0) {
        row[c] = 0;
        inf[c] = num > 0;
      } else {
        row[c] = num / den;
      }
    }
    d.z.values.push_back(std::move(row));
    d.infinite.push_back(std::move(inf));
  }
  return d;
}

template <class V>
struct DoobMeyer {
  AdaptedProcess<V> M;
  AdaptedProcess<V> A;
};

/// Y = M - A with ΔA_t = E_Q[Y_{t-1} - Y_t | F_{t-1}]. Throws NotSupermartingale(t, cell) when
/// ΔA < 0 on a Q-positive cell (below -1e-12 for floating values). ΔA = 0 on Q-null cells.
template <class V>
DoobMeyer<V> doob_meyer(const AdaptedProcess<V>& Y, const Measure& Q) {
  const auto& space = Y.space;
  const int N = space.horizon();
  DoobMeyer<V> out{{space, {}, std::nullopt}, {space, {}, std::nullopt}};
  out.A.values.push_back(std::vector<V>(space.at(0).cell_count(), V(0)));
  out.M.values.push_back(Y.values[0]);
  for (int t = 1; t <= N; ++t) {
    auto expected = cond_expect(space, Y.values[static_cast<std::size_t>(t)], t, Q, t - 1);
    const auto& prev = space.at(t - 1);
    std::vector<V> dA(prev.cell_count(), V(0));
    for (std::size_t c = 0; c < prev.cell_count(); ++c) {
      if (Q.of(prev.cell(c)) == 0) continue;
      V d = Y.values[static_cast<std::size_t>(t) - 1][c] - expected[c];
      if constexpr (std::is_same_v<V, Rational>) {
        if (d < 0) throw NotSupermartingale(t, c);
      } else {
        if (d < -1e-12) throw NotSupermartingale(t, c);
        if (d < 0) d = 0;
      }
      dA[c] = d;
    }
    const auto& part = space.at(t);
    std::vector<V> A(part.cell_count()), M(part.cell_count());
    for (std::size_t c = 0; c < part.cell_count(); ++c) {
      auto parent = prev.cell_of(part.cell(c).front());
      A[c] = out.A.values[static_cast<std::size_t>(t) - 1][parent] + dA[parent];
      M[c] = Y.values[static_cast<std::size_t>(t)][c] + A[c];
    }
    out.A.values.push_back(std::move(A));
    out.M.values.push_back(std::move(M));
  }
  return out;
}

/// X^T_t = X_{t ∧ T}.
template <class V>
AdaptedProcess<V> stopped(const AdaptedProcess<V>& X, const StoppingTime& T) {
  detail::require_no_delta(T);
  const auto& space = X.space;
  std::vector<std::vector<V>> rows;
  for (int t = 0; t <= space.horizon(); ++t) {
    std::vector<V> row(space.atom_count());
    for (std::size_t i = 0; i < row.size(); ++i) {
      int s = T(i) <= ExtendedTime::at(t) ? T(i).value() : t;
      row[i] = X.at(s, i);
    }
    rows.push_back(std::move(row));
  }
  auto out = AdaptedProcess<V>::from_atoms(space, rows);
  if (X.terminal) {
    std::vector<V> term(space.atom_count());
    for (std::size_t i = 0; i < term.size(); ++i) term[i] = T(i).is_finite() ? X.at(T(i), i) : (*X.terminal)[i];
    out.terminal = std::move(term);
  }
  return out;
}

/// X^{T-}_t = X_t on {t < T}, 0 on {t >= T}.
template <class V>
AdaptedProcess<V> interrupted(const AdaptedProcess<V>& X, const StoppingTime& T) {
  detail::require_no_delta(T);
  const auto& space = X.space;
  std::vector<std::vector<V>> rows;
  for (int t = 0; t <= space.horizon(); ++t) {
    std::vector<V> row(space.atom_count());
    for (std::size_t i = 0; i < row.size(); ++i) row[i] = ExtendedTime::at(t) < T(i) ? X.at(t, i) : V(0);
    rows.push_back(std::move(row));
  }
  return AdaptedProcess<V>::from_atoms(space, rows);
}

/// Where a process changes: changes[t-1] holds {X_t != X_{t-1}} for t = 1..N; `at_infinity`
/// holds {X_INF != X_N} for processes with a terminal value.
struct ChangeSet {
  std::vector<EventSet> changes;
  std::optional<EventSet> at_infinity;
};

template <class V>
ChangeSet change_set(const AdaptedProcess<V>& X) {
  const auto& space = X.space;
  ChangeSet cs;
  for (int t = 1; t <= space.horizon(); ++t) {
    EventSet e(space.atom_count());
    for (std::size_t i = 0; i < e.size(); ++i) e.set(i, !(X.at(t, i) == X.at(t - 1, i)));
    cs.changes.push_back(std::move(e));
  }
  if (X.terminal) {
    EventSet e(space.atom_count());
    for (std::size_t i = 0; i < e.size(); ++i) e.set(i, !((*X.terminal)[i] == X.at(space.horizon(), i)));
    cs.at_infinity = std::move(e);
  }
  return cs;
}

/// Minimal stopping time H with X = X^H. L = last change time (INF for a jump at infinity),
/// H(ω) = min{t : the F_t cell of ω lies in {L <= t}}. With `null_reference`, atoms of zero
/// mass are treated as never changing, which gives the minimal time up to null sets.
inline StoppingTime process_stopping_time(const FilteredSpace& space, const ChangeSet& cs,
                                          const Measure* null_reference = nullptr) {
  const std::size_t n = space.atom_count();
  std::vector<ExtendedTime> last(n, ExtendedTime::at(0));
  for (std::size_t t = 0; t < cs.changes.size(); ++t)
    for (std::size_t i = 0; i < n; ++i)
      if (cs.changes[t].contains(i)) last[i] = ExtendedTime::at(static_cast<int>(t) + 1);
  if (cs.at_infinity)
    for (std::size_t i = 0; i < n; ++i)
      if (cs.at_infinity->contains(i)) last[i] = kInf;
  if (null_reference)
    for (std::size_t i = 0; i < n; ++i)
      if ((*null_reference)[i] == 0) last[i] = ExtendedTime::at(0);
  std::vector<ExtendedTime> H(n, kInf);
  for (int t = 0; t <= space.horizon(); ++t) {
    const auto& part = space.at(t);
    for (const auto& cell : part.cells()) {
      bool settled = true;
      for (auto a : cell)
        if (last[a] > ExtendedTime::at(t)) settled = false;
      if (!settled) continue;
      for (auto a : cell)
        if (H[a] == kInf) H[a] = ExtendedTime::at(t);
    }
  }
  return StoppingTime(space, std::move(H));
}

template <class V>
StoppingTime process_stopping_time(const AdaptedProcess<V>& X, const Measure* null_reference = nullptr) {
  return process_stopping_time(X.space, change_set(X), null_reference);
}

/// S = inf{t : z_t = 0 or z'_t = 0}.
inline StoppingTime first_zero_time(const RationalProcess& z, const RationalProcess& zp) {
  const auto& space = z.space;
  std::vector<ExtendedTime> S(space.atom_count(), kInf);
  for (std::size_t i = 0; i < S.size(); ++i)
    for (int t = 0; t <= space.horizon(); ++t)
      if (z.at(t, i) == 0 || zp.at(t, i) == 0) {
        S[i] = ExtendedTime::at(t);
        break;
      }
  return StoppingTime(space, std::move(S));
}

/// S_n = inf{t : z_t < 1/n or z'_t < 1/n}, n >= 1.
inline StoppingTime threshold_time(const RationalProcess& z, const RationalProcess& zp, long n) {
  const auto& space = z.space;
  Rational bound(1, n);
  std::vector<ExtendedTime> S(space.atom_count(), kInf);
  for (std::size_t i = 0; i < S.size(); ++i)
    for (int t = 0; t <= space.horizon(); ++t)
      if (z.at(t, i) < bound || zp.at(t, i) < bound) {
        S[i] = ExtendedTime::at(t);
        break;
      }
  return StoppingTime(space, std::move(S));
}

/// z_{T-}: z_0 on {T = 0}, z_{T-1} on {0 < T <= N}, z_N on {T = INF}. Per atom.
inline std::vector<Rational> left_limit_at_T(const RationalProcess& z, const StoppingTime& T) {
  detail::require_no_delta(T);
  const int N = z.space.horizon();
  std::vector<Rational> out(T.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    int s = T(i).is_infinity() ? N : std::max(0, T(i).value() - 1);
    out[i] = z.at(s, i);
  }
  return out;
}

/// E_ρ[z_T | F_{T-}] through the one-step quotient E[z_n 1{T=n} | F_{n-1}] / E[1{T=n} | F_{n-1}]
/// on {T = n}, and z_T on {T = 0} ∪ {T = INF}. Per atom.
inline std::vector<Rational> cond_expect_at_T(const RationalProcess& z, const StoppingTime& T, const Measure& rho) {
  detail::require_no_delta(T);
  const auto& space = z.space;
  const int N = space.horizon();
  std::vector<Rational> out(T.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (T(i) == ExtendedTime::at(0)) out[i] = z.at(0, i);
    if (T(i).is_infinity()) out[i] = z.at(N, i);
  }
  for (int n = 1; n <= N; ++n) {
    EventSet stop = T.equal_to(ExtendedTime::at(n));
    const auto& prev = space.at(n - 1);
    for (const auto& cell : prev.cells()) {
      Rational num = 0, den = 0;
      for (auto a : cell)
        if (stop.contains(a)) {
          num += z.at(n, a) * rho[a];
          den += rho[a];
        }
      Rational value = den == 0 ? Rational(0) : Rational(num / den);
      for (auto a : cell)
        if (stop.contains(a)) out[a] = value;
    }
  }
  return out;
}

/// Oracle: E_ρ[z_T | F_{T-}] computed on the cells of F_{T-} directly.
inline std::vector<Rational> cond_expect_at_T_direct(const RationalProcess& z, const StoppingTime& T,
                                                     const Measure& rho) {
  std::vector<Rational> zT(T.size());
  for (std::size_t i = 0; i < zT.size(); ++i) zT[i] = z.at(T(i), i);
  return cond_expect_on(sigma_T_minus(z.space, T).cells, zT, rho);
}

/// K_T with E[z_T | F_{T-}] = z_{T-} K_T; K_T = 1 on {T = 0} ∪ {T = INF} ∪ {z_{T-} = 0}.
inline std::vector<Rational> k_factor(const RationalProcess& z, const StoppingTime& T, const Measure& rho) {
  auto ce = cond_expect_at_T(z, T, rho);
  auto left = left_limit_at_T(z, T);
  std::vector<Rational> K(T.size(), Rational(1));
  for (std::size_t i = 0; i < K.size(); ++i) {
    if (T(i) == ExtendedTime::at(0) || T(i).is_infinity() || left[i] == 0) continue;
    K[i] = ce[i] / left[i];
  }
  return K;
}

/// Announcing sequence V_n = 0 on {T = 0}, (T - 1) ∧ n elsewhere, n = 0..N; only meaningful for
/// predictable T. Throws NotAnnouncing if some V_n fails to be a stopping time.
inline std::vector<StoppingTime> announcing_sequence(const FilteredSpace& space, const StoppingTime& T) {
  detail::require_no_delta(T);
  std::vector<StoppingTime> out;
  for (int n = 0; n <= space.horizon(); ++n) {
    std::vector<ExtendedTime> v(T.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (T(i) == ExtendedTime::at(0))
        v[i] = ExtendedTime::at(0);
      else if (T(i).is_infinity())
        v[i] = ExtendedTime::at(n);
      else
        v[i] = ExtendedTime::at(std::min(T(i).value() - 1, n));
    }
    try {
      out.emplace_back(space, std::move(v));
    } catch (const NotAStoppingTime&) {
      throw NotAnnouncing("V_" + std::to_string(n) + " is not a stopping time; T is not predictable");
    }
  }
  return out;
}

/// {T = n} ∈ F_{n-1} for every 1 <= n <= N.
inline bool is_predictable(const FilteredSpace& space, const StoppingTime& T) {
  for (int n = 1; n <= space.horizon(); ++n)
    if (!space.at(n - 1).is_union_of_cells(T.equal_to(ExtendedTime::at(n)))) return false;
  return true;
}

}  // namespace hlab
