#pragma once
// Brute-force reference computations, written against atoms and subsets only so they share no
// code path with the library.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hellinger_lab/hellinger_lab.hpp"

namespace oracle {

using hlab::ExtendedTime;
using hlab::FilteredSpace;
using hlab::Rational;

inline bool union_of_cells(const hlab::Partition& p, std::uint64_t set) {
  for (const auto& cell : p.cells()) {
    bool in = (set >> cell.front()) & 1;
    for (auto a : cell)
      if (((set >> a) & 1) != in) return false;
  }
  return true;
}

inline std::uint64_t mask_of(const std::vector<ExtendedTime>& T, ExtendedTime bound) {
  std::uint64_t m = 0;
  for (std::size_t i = 0; i < T.size(); ++i)
    if (T[i] <= bound) m |= std::uint64_t{1} << i;
  return m;
}

/// Every per-atom assignment in {0..N, INF} with {T <= t} in F_t.
inline std::vector<std::vector<ExtendedTime>> stopping_times(const FilteredSpace& sp) {
  const int N = sp.horizon();
  const std::size_t n = sp.atom_count();
  std::vector<std::vector<ExtendedTime>> out;
  std::vector<int> digits(n, 0);
  const int base = N + 2;
  while (true) {
    std::vector<ExtendedTime> T(n);
    for (std::size_t i = 0; i < n; ++i) T[i] = digits[i] == N + 1 ? hlab::kInf : ExtendedTime::at(digits[i]);
    bool ok = true;
    for (int t = 0; t <= N && ok; ++t) ok = union_of_cells(sp.at(t), mask_of(T, ExtendedTime::at(t)));
    if (ok) out.push_back(T);
    std::size_t k = 0;
    while (k < n && ++digits[k] == base) digits[k++] = 0;
    if (k == n) break;
  }
  return out;
}

/// Partition whose cells are the atoms of the σ-algebra given by a family of subsets.
inline std::vector<long> atoms_of(std::size_t n, const std::vector<std::uint64_t>& family) {
  std::vector<long> label(n, -1);
  long next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] >= 0) continue;
    label[i] = next;
    for (std::size_t j = i + 1; j < n; ++j) {
      bool same = true;
      for (auto s : family)
        if (((s >> i) & 1) != ((s >> j) & 1)) same = false;
      if (same) label[j] = next;
    }
    ++next;
  }
  return label;
}

/// F_T = {A in F_N : A ∩ {T <= t} in F_t for all t}, by scanning all subsets.
inline std::vector<long> sigma_T(const FilteredSpace& sp, const std::vector<ExtendedTime>& T) {
  const std::size_t n = sp.atom_count();
  std::vector<std::uint64_t> members;
  for (std::uint64_t A = 0; A < (std::uint64_t{1} << n); ++A) {
    bool ok = union_of_cells(sp.at(sp.horizon()), A);
    for (int t = 0; t <= sp.horizon() && ok; ++t)
      ok = union_of_cells(sp.at(t), A & mask_of(T, ExtendedTime::at(t)));
    if (ok) members.push_back(A);
  }
  return atoms_of(n, members);
}

/// F_{T-}: generated by F_0 and A ∩ {t < T}, A in F_t.
inline std::vector<long> sigma_T_minus(const FilteredSpace& sp, const std::vector<ExtendedTime>& T) {
  const std::size_t n = sp.atom_count();
  std::vector<std::uint64_t> gens;
  const std::uint64_t all = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t A = 0; A <= all; ++A) {
    if (union_of_cells(sp.at(0), A)) gens.push_back(A);
    for (int t = 0; t <= sp.horizon(); ++t)
      if (union_of_cells(sp.at(t), A)) gens.push_back(A & ~mask_of(T, ExtendedTime::at(t)) & all);
  }
  return atoms_of(n, gens);
}

inline bool same_partition(const hlab::Partition& p, const std::vector<long>& labels) {
  return p == hlab::Partition::from_labels(labels);
}

inline Rational mass(const hlab::Measure& m, const std::vector<std::size_t>& cell) {
  Rational s = 0;
  for (auto a : cell) s += m[a];
  return s;
}

/// z_t on every atom: μ(cell)/Q(cell), 0 on Q-null cells.
inline std::vector<std::vector<Rational>> density(const FilteredSpace& sp, const hlab::Measure& m,
                                                  const hlab::Measure& Q) {
  std::vector<std::vector<Rational>> z(static_cast<std::size_t>(sp.horizon()) + 1,
                                       std::vector<Rational>(sp.atom_count()));
  for (int t = 0; t <= sp.horizon(); ++t)
    for (const auto& cell : sp.at(t).cells()) {
      Rational q = mass(Q, cell), v = q == 0 ? Rational(0) : Rational(mass(m, cell) / q);
      for (auto a : cell) z[static_cast<std::size_t>(t)][a] = v;
    }
  return z;
}

inline double hellinger(double alpha, const std::vector<Rational>& mu, const std::vector<Rational>& nu) {
  double s = 0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu[i] > 0 && nu[i] > 0) s += std::pow(mu[i].get_d(), alpha) * std::pow(nu[i].get_d(), 1 - alpha);
  return s;
}

/// Mass of μ on atoms charged by ν.
inline Rational norm_ac(const std::vector<Rational>& mu, const std::vector<Rational>& nu) {
  Rational s = 0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (nu[i] > 0) s += mu[i];
  return s;
}

/// Compensator of Y = sqrt(z z') by ΔA_t = Y_{t-1} - E_Q[Y_t | F_{t-1}], per atom.
inline std::vector<std::vector<double>> compensator(const FilteredSpace& sp, const hlab::Measure& mu,
                                                    const hlab::Measure& nu) {
  auto Q = hlab::midpoint(mu, nu);
  auto z = density(sp, mu, Q), zp = density(sp, nu, Q);
  const std::size_t n = sp.atom_count();
  auto Y = [&](int t, std::size_t a) {
    return std::sqrt(Rational(z[static_cast<std::size_t>(t)][a] * zp[static_cast<std::size_t>(t)][a]).get_d());
  };
  std::vector<std::vector<double>> A(static_cast<std::size_t>(sp.horizon()) + 1, std::vector<double>(n, 0.0));
  for (int t = 1; t <= sp.horizon(); ++t)
    for (const auto& cell : sp.at(t - 1).cells()) {
      double q = mass(Q, cell).get_d(), e = 0;
      for (auto a : cell) e += Q[a].get_d() * Y(t, a);
      double d = q == 0 ? 0.0 : Y(t - 1, cell.front()) - e / q;
      for (auto a : cell) A[static_cast<std::size_t>(t)][a] = A[static_cast<std::size_t>(t) - 1][a] + d;
    }
  return A;
}

/// Smallest stopping time T with X_t = X_{t ∧ T} for all t, by scanning every stopping time.
template <class V>
std::vector<ExtendedTime> minimal_freezing_time(const FilteredSpace& sp, const std::vector<std::vector<V>>& X) {
  std::vector<ExtendedTime> best(sp.atom_count(), hlab::kDelta);
  for (const auto& T : stopping_times(sp)) {
    bool freezes = true;
    for (std::size_t a = 0; a < sp.atom_count() && freezes; ++a)
      for (int t = 0; t <= sp.horizon(); ++t) {
        int s = T[a].is_finite() ? std::min(t, T[a].value()) : t;
        if (!(X[static_cast<std::size_t>(t)][a] == X[static_cast<std::size_t>(s)][a])) freezes = false;
      }
    if (freezes)
      for (std::size_t a = 0; a < best.size(); ++a) best[a] = std::min(best[a], T[a]);
  }
  return best;
}

inline FilteredSpace space_a() {
  return hlab::build_space({"a", "b", "c", "d"}, 2,
                           {hlab::Partition::trivial(4), hlab::Partition::from_labels(std::vector<long>{0, 0, 1, 1}),
                            hlab::Partition::atomic(4)});
}

inline hlab::Measure mu_a() {
  return hlab::Measure({Rational(1, 2), Rational(1, 4), Rational(1, 4), Rational(0)}, "mu");
}
inline hlab::Measure nu_a() {
  return hlab::Measure({Rational(1, 4), Rational(1, 4), Rational(0), Rational(1, 2)}, "nu");
}

inline std::vector<ExtendedTime> times(std::initializer_list<int> t) {
  std::vector<ExtendedTime> out;
  for (int x : t) out.push_back(x < 0 ? hlab::kInf : ExtendedTime::at(x));
  return out;
}

}  // namespace oracle
