#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "partition.hpp"
#include "rational.hpp"
#include "time.hpp"

namespace hlab {

inline constexpr std::size_t kDefaultAtomCap = std::size_t{1} << 20;

/// Finite filtered space: atoms, horizon N and a refining chain F_0 ⊆ ... ⊆ F_N with F_N atomic.
/// Immutable; copies share the underlying data.
class FilteredSpace {
 public:
  FilteredSpace() = default;

  std::size_t atom_count() const { return data_->atoms.size(); }
  int horizon() const { return data_->horizon; }
  const std::vector<std::string>& atoms() const { return data_->atoms; }
  const std::string& label(std::size_t atom) const { return data_->atoms[atom]; }

  const Partition& at(int t) const { return data_->partitions.at(static_cast<std::size_t>(t)); }
  const Partition& at(ExtendedTime t) const { return at(t.level(horizon())); }
  const std::vector<Partition>& partitions() const { return data_->partitions; }

  std::size_t cell_of(int t, std::size_t atom) const { return at(t).cell_of(atom); }

  std::optional<std::size_t> index_of(const std::string& label) const {
    for (std::size_t i = 0; i < data_->atoms.size(); ++i)
      if (data_->atoms[i] == label) return i;
    return std::nullopt;
  }

  /// Smallest t with `set` a union of F_t cells, if any.
  std::optional<int> measurability_time(const EventSet& set) const {
    for (int t = 0; t <= horizon(); ++t)
      if (at(t).is_union_of_cells(set)) return t;
    return std::nullopt;
  }

  bool same_as(const FilteredSpace& other) const {
    if (data_ == other.data_) return true;
    return data_->atoms == other.data_->atoms && data_->horizon == other.data_->horizon &&
           data_->partitions == other.data_->partitions;
  }

  bool valid() const { return data_ != nullptr; }

 private:
  struct Data {
    std::vector<std::string> atoms;
    int horizon = 0;
    std::vector<Partition> partitions;
  };
  std::shared_ptr<const Data> data_;

  friend FilteredSpace build_space(std::vector<std::string>, int, std::vector<Partition>);
};

/// Validates and builds a space. Throws RefinementViolation(t), NonAtomicTerminal, InvalidPartition.
inline FilteredSpace build_space(std::vector<std::string> atoms, int horizon, std::vector<Partition> partitions) {
  if (horizon < 0) throw ValidationError("horizon must be nonnegative");
  if (atoms.empty()) throw ValidationError("atom set must be nonempty");
  if (partitions.size() != static_cast<std::size_t>(horizon) + 1)
    throw ValidationError("expected " + std::to_string(horizon + 1) + " partitions, got " +
                          std::to_string(partitions.size()));
  std::set<std::string> unique(atoms.begin(), atoms.end());
  if (unique.size() != atoms.size()) throw ValidationError("duplicate atom labels");
  for (const auto& p : partitions)
    if (p.atom_count() != atoms.size()) throw InvalidPartition("partition does not cover the atom set");
  for (int t = 0; t < horizon; ++t)
    if (!partitions[static_cast<std::size_t>(t) + 1].refines(partitions[static_cast<std::size_t>(t)]))
      throw RefinementViolation(t);
  if (!partitions.back().is_atomic()) throw NonAtomicTerminal();
  FilteredSpace s;
  auto data = std::make_shared<FilteredSpace::Data>();
  data->atoms = std::move(atoms);
  data->horizon = horizon;
  data->partitions = std::move(partitions);
  s.data_ = std::move(data);
  return s;
}

/// Convenience overload taking cells as lists of atom labels.
inline FilteredSpace build_space(std::vector<std::string> atoms, int horizon,
                                 const std::vector<std::vector<std::vector<std::string>>>& cells) {
  std::vector<Partition> partitions;
  for (const auto& level : cells) {
    std::vector<std::vector<std::size_t>> indexed;
    for (const auto& cell : level) {
      std::vector<std::size_t> members;
      for (const auto& label : cell) {
        auto it = std::find(atoms.begin(), atoms.end(), label);
        if (it == atoms.end()) throw InvalidPartition("unknown atom '" + label + "'");
        members.push_back(static_cast<std::size_t>(it - atoms.begin()));
      }
      indexed.push_back(std::move(members));
    }
    partitions.push_back(Partition::from_cells(atoms.size(), indexed));
  }
  return build_space(std::move(atoms), horizon, std::move(partitions));
}

/// Nonnegative rational weights on atoms.
class Measure {
 public:
  Measure() = default;
  Measure(std::vector<Rational> weights, std::string name = {}) : weights_(std::move(weights)), name_(std::move(name)) {
    for (const auto& w : weights_)
      if (w < 0) throw ValidationError("measure '" + name_ + "' has a negative weight");
  }

  static Measure zero(std::size_t atoms, std::string name = {}) {
    return Measure(std::vector<Rational>(atoms, Rational(0)), std::move(name));
  }

  std::size_t size() const { return weights_.size(); }
  const Rational& operator[](std::size_t atom) const { return weights_[atom]; }
  const std::vector<Rational>& weights() const { return weights_; }
  const std::string& name() const { return name_; }

  Rational total() const {
    Rational s = 0;
    for (const auto& w : weights_) s += w;
    return s;
  }
  bool is_probability() const { return total() == 1; }

  Rational of(const EventSet& set) const {
    Rational s = 0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
      if (set.contains(i)) s += weights_[i];
    return s;
  }
  Rational of(const std::vector<std::size_t>& atoms) const {
    Rational s = 0;
    for (auto a : atoms) s += weights_[a];
    return s;
  }

  EventSet support() const {
    EventSet e(size());
    for (std::size_t i = 0; i < size(); ++i) e.set(i, weights_[i] > 0);
    return e;
  }

  Measure restricted_to(const EventSet& set) const {
    std::vector<Rational> w(size());
    for (std::size_t i = 0; i < size(); ++i) w[i] = set.contains(i) ? weights_[i] : Rational(0);
    return Measure(std::move(w), name_);
  }

  friend Measure operator+(const Measure& a, const Measure& b) {
    std::vector<Rational> w(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) w[i] = a[i] + b[i];
    return Measure(std::move(w));
  }
  friend Measure operator*(const Rational& c, const Measure& m) {
    std::vector<Rational> w(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) w[i] = c * m[i];
    return Measure(std::move(w), m.name_);
  }
  friend bool operator==(const Measure& a, const Measure& b) { return a.weights_ == b.weights_; }

 private:
  std::vector<Rational> weights_;
  std::string name_;
};

/// Q = (μ + ν)/2.
inline Measure midpoint(const Measure& mu, const Measure& nu) {
  return Measure((Rational(1, 2) * (mu + nu)).weights(), "Q");
}

/// A measure restricted to the σ-algebra of a partition: one weight per cell.
struct CellMeasure {
  Partition partition;
  std::vector<Rational> weights;

  Rational total() const {
    Rational s = 0;
    for (const auto& w : weights) s += w;
    return s;
  }
  friend bool operator==(const CellMeasure&, const CellMeasure&) = default;
};

enum class SigmaOrigin { filtration, stopped, strict_past, product };

struct SigmaAlgebra {
  Partition cells;
  SigmaOrigin origin = SigmaOrigin::filtration;
};

inline CellMeasure restrict(const Measure& m, const Partition& p) {
  CellMeasure out{p, std::vector<Rational>(p.cell_count(), Rational(0))};
  for (std::size_t i = 0; i < m.size(); ++i) out.weights[p.cell_of(i)] += m[i];
  return out;
}
inline CellMeasure restrict(const Measure& m, const SigmaAlgebra& sigma) { return restrict(m, sigma.cells); }

/// Map atom → extended time. Adaptedness is checked on construction.
class StoppingTime {
 public:
  StoppingTime() = default;

  /// Throws NotAStoppingTime if {T <= t} is not F_t-measurable for some t, or if DELTA
  /// appears without `separating`.
  StoppingTime(const FilteredSpace& space, std::vector<ExtendedTime> times, bool separating = false)
      : times_(std::move(times)), separating_(separating) {
    if (times_.size() != space.atom_count()) throw ValidationError("stopping time has wrong atom count");
    for (auto t : times_) {
      if (t.is_delta() && !separating_) throw NotAStoppingTime("DELTA is reserved for separating times", -1);
      if (t.is_finite() && t.value() > space.horizon())
        throw NotAStoppingTime("finite value beyond the horizon", t.value());
    }
    for (int t = 0; t <= space.horizon(); ++t)
      if (!space.at(t).is_union_of_cells(at_most(ExtendedTime::at(t)))) throw NotAStoppingTime(t);
  }

  static StoppingTime constant(const FilteredSpace& space, ExtendedTime t) {
    return StoppingTime(space, std::vector<ExtendedTime>(space.atom_count(), t), t.is_delta());
  }

  std::size_t size() const { return times_.size(); }
  ExtendedTime operator()(std::size_t atom) const { return times_[atom]; }
  const std::vector<ExtendedTime>& times() const { return times_; }
  bool separating() const { return separating_; }
  bool has_delta() const {
    for (auto t : times_)
      if (t.is_delta()) return true;
    return false;
  }

  EventSet at_most(ExtendedTime t) const {
    EventSet e(size());
    for (std::size_t i = 0; i < size(); ++i) e.set(i, times_[i] <= t);
    return e;
  }
  EventSet equal_to(ExtendedTime t) const {
    EventSet e(size());
    for (std::size_t i = 0; i < size(); ++i) e.set(i, times_[i] == t);
    return e;
  }
  EventSet greater_than(ExtendedTime t) const { return at_most(t).complement(); }

  friend bool operator==(const StoppingTime& a, const StoppingTime& b) { return a.times_ == b.times_; }

 private:
  std::vector<ExtendedTime> times_;
  bool separating_ = false;
};

inline StoppingTime pointwise_min(const FilteredSpace& space, const StoppingTime& a, const StoppingTime& b) {
  std::vector<ExtendedTime> t(a.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = std::min(a(i), b(i));
  return StoppingTime(space, std::move(t), a.separating() || b.separating());
}

namespace detail {
inline void require_no_delta(const StoppingTime& T) {
  if (T.has_delta()) throw NotAStoppingTime("operation is undefined for DELTA-valued times", -1);
}
}  // namespace detail

/// F_T: atoms share a cell iff T agrees and they share the F_{T∧N} cell.
inline SigmaAlgebra sigma_T(const FilteredSpace& space, const StoppingTime& T) {
  detail::require_no_delta(T);
  std::vector<std::pair<ExtendedTime, std::size_t>> keys(space.atom_count());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = {T(i), space.at(T(i)).cell_of(i)};
  return {Partition::from_keys(keys), SigmaOrigin::stopped};
}

/// F_{T-} by the atomic rule: same F_0 cell, same T, same F_t cell for every t < T.
inline SigmaAlgebra sigma_T_minus(const FilteredSpace& space, const StoppingTime& T) {
  detail::require_no_delta(T);
  struct Key {
    std::size_t f0;
    ExtendedTime t;
    std::size_t past;
    auto operator<=>(const Key&) const = default;
  };
  std::vector<Key> keys(space.atom_count());
  for (std::size_t i = 0; i < keys.size(); ++i) {
    std::size_t past = 0;
    if (T(i) > ExtendedTime::at(0)) {
      int last = T(i).is_finite() ? T(i).value() - 1 : space.horizon();
      past = space.cell_of(last, i);
    }
    keys[i] = {space.cell_of(0, i), T(i), past};
  }
  return {Partition::from_keys(keys), SigmaOrigin::strict_past};
}

/// F_{T-} as the σ-algebra generated by F_0 and the sets A ∩ {t < T}, A a cell of F_t.
inline SigmaAlgebra sigma_T_minus_generated(const FilteredSpace& space, const StoppingTime& T) {
  detail::require_no_delta(T);
  std::vector<EventSet> gens;
  const auto& f0 = space.at(0);
  for (std::size_t c = 0; c < f0.cell_count(); ++c) gens.push_back(f0.cell_set(c));
  for (int t = 0; t <= space.horizon(); ++t) {
    EventSet later = T.greater_than(ExtendedTime::at(t));
    const auto& p = space.at(t);
    for (std::size_t c = 0; c < p.cell_count(); ++c) gens.push_back(p.cell_set(c) & later);
  }
  return {generated_by(space.atom_count(), gens), SigmaOrigin::strict_past};
}

/// G on the time grid {0, step, 2·step, ...} ∪ {N}: generated by F_0 and F_s ∩ {s < T}.
/// Joining over finer grids increases to F_{T-}; step = 1 already gives F_{T-}.
inline SigmaAlgebra grid_past(const FilteredSpace& space, const StoppingTime& T, int step) {
  detail::require_no_delta(T);
  if (step < 1) throw ValidationError("grid step must be positive");
  std::vector<int> points;
  for (int s = 0; s <= space.horizon(); s += step) points.push_back(s);
  if (points.back() != space.horizon()) points.push_back(space.horizon());
  std::vector<EventSet> gens;
  const auto& f0 = space.at(0);
  for (std::size_t c = 0; c < f0.cell_count(); ++c) gens.push_back(f0.cell_set(c));
  for (int s : points) {
    EventSet later = T.greater_than(ExtendedTime::at(s));
    const auto& p = space.at(s);
    for (std::size_t c = 0; c < p.cell_count(); ++c) gens.push_back(p.cell_set(c) & later);
  }
  return {generated_by(space.atom_count(), gens), SigmaOrigin::strict_past};
}

/// T_B: T on B, INF off B. Throws NotMeasurable unless B ∈ F_T.
inline StoppingTime stop_restrict(const FilteredSpace& space, const StoppingTime& T, const EventSet& B) {
  if (!sigma_T(space, T).cells.is_union_of_cells(B)) throw NotMeasurable("restriction set is not in F_T");
  std::vector<ExtendedTime> t(T.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = B.contains(i) ? T(i) : kInf;
  return StoppingTime(space, std::move(t));
}

/// Per-atom restrictions for enumeration: `lower` bounds the value from below; `fixed`, when set,
/// pins it.
struct TimeConstraint {
  std::vector<ExtendedTime> lower;
  std::vector<std::optional<ExtendedTime>> fixed;
};

/// Calls `visit` with the values of every stopping time in {0..N, INF} meeting `constraint`.
/// Returns the count; stops after `limit`.
inline std::size_t enumerate_times(const FilteredSpace& space,
                                   const std::function<void(const std::vector<ExtendedTime>&)>& visit,
                                   std::size_t limit = static_cast<std::size_t>(-1),
                                   const TimeConstraint* constraint = nullptr) {
  const int N = space.horizon();
  std::vector<ExtendedTime> times(space.atom_count(), kInf);
  std::size_t count = 0;
  auto may_stop = [&](const std::vector<std::size_t>& members, ExtendedTime t) {
    if (!constraint) return true;
    for (auto a : members) {
      if (!constraint->lower.empty() && constraint->lower[a] > t) return false;
      if (!constraint->fixed.empty() && constraint->fixed[a] && !(*constraint->fixed[a] == t)) return false;
    }
    return true;
  };
  auto may_continue = [&](const std::vector<std::size_t>& members, ExtendedTime t) {
    if (!constraint || constraint->fixed.empty()) return true;
    for (auto a : members)
      if (constraint->fixed[a] && *constraint->fixed[a] == t) return false;
    return true;
  };
  // Active cells at level t are exactly the cells whose atoms have not stopped yet.
  std::function<void(int, const std::vector<std::size_t>&)> recurse = [&](int t, const std::vector<std::size_t>& active) {
    if (count >= limit) return;
    const auto& p = space.at(t);
    const std::size_t k = active.size();
    if (k >= 8 * sizeof(unsigned long long)) throw SizeOverflow(limit);
    std::vector<char> can_stop(k), can_go(k);
    for (std::size_t j = 0; j < k; ++j) {
      can_stop[j] = may_stop(p.cell(active[j]), ExtendedTime::at(t));
      // At the horizon "continuing" means INF.
      can_go[j] = may_continue(p.cell(active[j]), ExtendedTime::at(t)) &&
                  (t < N || may_stop(p.cell(active[j]), kInf));
      if (!can_stop[j] && !can_go[j]) return;
    }
    for (unsigned long long mask = 0; mask < (1ULL << k); ++mask) {
      if (count >= limit) return;
      bool feasible = true;
      for (std::size_t j = 0; j < k && feasible; ++j) feasible = ((mask >> j) & 1ULL) ? can_stop[j] : can_go[j];
      if (!feasible) continue;
      std::vector<std::size_t> next;
      for (std::size_t j = 0; j < k; ++j) {
        const auto& members = p.cell(active[j]);
        bool stop = (mask >> j) & 1ULL;
        for (auto a : members) times[a] = stop ? ExtendedTime::at(t) : kInf;
        if (!stop && t < N) {
          std::set<std::size_t> children;
          for (auto a : members) children.insert(space.cell_of(t + 1, a));
          next.insert(next.end(), children.begin(), children.end());
        }
      }
      if (t == N || next.empty()) {
        ++count;
        visit(times);
      } else {
        recurse(t + 1, next);
        for (auto c : next)
          for (auto a : space.at(t + 1).cell(c)) times[a] = kInf;
      }
    }
  };
  std::vector<std::size_t> roots(space.at(0).cell_count());
  for (std::size_t c = 0; c < roots.size(); ++c) roots[c] = c;
  recurse(0, roots);
  return count;
}

inline std::size_t enumerate_stopping_times(const FilteredSpace& space,
                                            const std::function<void(const StoppingTime&)>& visit,
                                            std::size_t limit = static_cast<std::size_t>(-1)) {
  return enumerate_times(
      space, [&](const std::vector<ExtendedTime>& t) { visit(StoppingTime(space, t)); }, limit);
}

inline std::vector<StoppingTime> all_stopping_times(const FilteredSpace& space,
                                                    std::size_t limit = static_cast<std::size_t>(-1)) {
  std::vector<StoppingTime> out;
  enumerate_stopping_times(space, [&](const StoppingTime& T) { out.push_back(T); }, limit);
  return out;
}

/// One factor of a product space.
struct Factor {
  std::vector<std::string> atoms;
  std::vector<Rational> mu;
  std::vector<Rational> nu;
};

struct ProductSpace {
  FilteredSpace space;
  Measure mu;
  Measure nu;
};

/// Direct product of `depth` factors (cycling through `factors`); F_t groups atoms by their
/// first t coordinates. Throws SizeOverflow when the atom count would exceed `cap`.
inline ProductSpace product_space(const std::vector<Factor>& factors, int depth, std::size_t cap = kDefaultAtomCap) {
  if (factors.empty() || depth < 1) throw ValidationError("product needs at least one factor and depth >= 1");
  std::size_t count = 1;
  for (int k = 0; k < depth; ++k) {
    const auto& f = factors[static_cast<std::size_t>(k) % factors.size()];
    if (f.atoms.empty() || f.mu.size() != f.atoms.size() || f.nu.size() != f.atoms.size())
      throw ValidationError("malformed factor " + std::to_string(k));
    Rational nu_mass = 0;
    for (const auto& w : f.nu) nu_mass += w;
    if (nu_mass <= 0) throw ValidationError("factor " + std::to_string(k) + " has zero nu mass");
    if (count > cap / f.atoms.size()) throw SizeOverflow(cap);
    count *= f.atoms.size();
  }
  std::vector<std::vector<std::size_t>> coords(1);
  for (int k = 0; k < depth; ++k) {
    const auto& f = factors[static_cast<std::size_t>(k) % factors.size()];
    std::vector<std::vector<std::size_t>> next;
    next.reserve(coords.size() * f.atoms.size());
    for (const auto& c : coords)
      for (std::size_t j = 0; j < f.atoms.size(); ++j) {
        auto d = c;
        d.push_back(j);
        next.push_back(std::move(d));
      }
    coords = std::move(next);
  }
  std::vector<std::string> labels(count);
  std::vector<Rational> mu(count, Rational(1)), nu(count, Rational(1));
  for (std::size_t i = 0; i < count; ++i) {
    for (int k = 0; k < depth; ++k) {
      const auto& f = factors[static_cast<std::size_t>(k) % factors.size()];
      auto j = coords[i][static_cast<std::size_t>(k)];
      if (k) labels[i] += '.';
      labels[i] += f.atoms[j];
      mu[i] *= f.mu[j];
      nu[i] *= f.nu[j];
    }
  }
  std::vector<Partition> partitions;
  for (int t = 0; t <= depth; ++t) {
    // Coordinates are in lexicographic order, so a prefix id is i / (product of later sizes).
    std::size_t block = 1;
    for (int k = t; k < depth; ++k) block *= factors[static_cast<std::size_t>(k) % factors.size()].atoms.size();
    std::vector<long> l(count);
    for (std::size_t i = 0; i < count; ++i) l[i] = static_cast<long>(i / block);
    partitions.push_back(Partition::from_labels(l));
  }
  auto space = build_space(std::move(labels), depth, std::move(partitions));
  return {space, Measure(std::move(mu), "mu"), Measure(std::move(nu), "nu")};
}

}  // namespace hlab
