#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "errors.hpp"

namespace hlab {

/// Subset of the atom set, stored as a membership mask.
class EventSet {
 public:
  EventSet() = default;
  explicit EventSet(std::size_t atoms, bool value = false) : members_(atoms, value ? 1 : 0) {}
  explicit EventSet(std::vector<char> members) : members_(std::move(members)) {}

  static EventSet of(std::size_t atoms, std::span<const std::size_t> indices) {
    EventSet e(atoms);
    for (auto i : indices) e.members_.at(i) = 1;
    return e;
  }

  std::size_t size() const { return members_.size(); }
  bool contains(std::size_t atom) const { return members_[atom] != 0; }
  void set(std::size_t atom, bool value = true) { members_[atom] = value ? 1 : 0; }

  std::size_t count() const { return static_cast<std::size_t>(std::count(members_.begin(), members_.end(), 1)); }
  bool empty() const { return count() == 0; }
  bool full() const { return count() == size(); }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < members_.size(); ++i)
      if (members_[i]) out.push_back(i);
    return out;
  }

  EventSet complement() const {
    EventSet e(size());
    for (std::size_t i = 0; i < size(); ++i) e.members_[i] = members_[i] ? 0 : 1;
    return e;
  }

  friend EventSet operator&(const EventSet& a, const EventSet& b) {
    EventSet e(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) e.members_[i] = (a.members_[i] && b.members_[i]) ? 1 : 0;
    return e;
  }
  friend EventSet operator|(const EventSet& a, const EventSet& b) {
    EventSet e(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) e.members_[i] = (a.members_[i] || b.members_[i]) ? 1 : 0;
    return e;
  }
  friend EventSet operator-(const EventSet& a, const EventSet& b) { return a & b.complement(); }

  bool subset_of(const EventSet& other) const {
    for (std::size_t i = 0; i < size(); ++i)
      if (members_[i] && !other.members_[i]) return false;
    return true;
  }

  friend bool operator==(const EventSet&, const EventSet&) = default;

  const std::vector<char>& mask() const { return members_; }

 private:
  std::vector<char> members_;
};

/// A partition of {0, ..., n-1}. Cells are numbered by their smallest atom, so two partitions
/// describing the same sets compare equal.
class Partition {
 public:
  Partition() = default;

  /// Groups atoms with equal labels; labels are arbitrary integers.
  static Partition from_labels(std::span<const long> labels) {
    Partition p;
    p.cell_of_.resize(labels.size());
    std::map<long, std::size_t> renumber;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = renumber.try_emplace(labels[i], p.cells_.size());
      if (inserted) p.cells_.emplace_back();
      p.cell_of_[i] = it->second;
      p.cells_[it->second].push_back(i);
    }
    return p;
  }

  /// Groups atoms by an arbitrary ordered key.
  template <class Key>
  static Partition from_keys(const std::vector<Key>& keys) {
    std::map<Key, long> ids;
    std::vector<long> labels(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto [it, inserted] = ids.try_emplace(keys[i], static_cast<long>(ids.size()));
      labels[i] = it->second;
    }
    return from_labels(labels);
  }

  /// Builds from explicit cells; throws InvalidPartition unless they are disjoint, nonempty and cover.
  static Partition from_cells(std::size_t atoms, const std::vector<std::vector<std::size_t>>& cells) {
    std::vector<long> labels(atoms, -1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (cells[c].empty()) throw InvalidPartition("empty cell");
      for (auto a : cells[c]) {
        if (a >= atoms) throw InvalidPartition("atom index out of range");
        if (labels[a] != -1) throw InvalidPartition("cells overlap");
        labels[a] = static_cast<long>(c);
      }
    }
    for (auto l : labels)
      if (l == -1) throw InvalidPartition("cells do not cover the atom set");
    return from_labels(labels);
  }

  static Partition trivial(std::size_t atoms) { return from_labels(std::vector<long>(atoms, 0)); }

  static Partition atomic(std::size_t atoms) {
    std::vector<long> labels(atoms);
    for (std::size_t i = 0; i < atoms; ++i) labels[i] = static_cast<long>(i);
    return from_labels(labels);
  }

  std::size_t atom_count() const { return cell_of_.size(); }
  std::size_t cell_count() const { return cells_.size(); }
  std::size_t cell_of(std::size_t atom) const { return cell_of_[atom]; }
  const std::vector<std::size_t>& cell(std::size_t c) const { return cells_[c]; }
  const std::vector<std::vector<std::size_t>>& cells() const { return cells_; }

  bool is_atomic() const { return cells_.size() == cell_of_.size(); }

  /// True when every cell of *this lies inside a cell of `coarser`.
  bool refines(const Partition& coarser) const {
    for (const auto& c : cells_) {
      auto target = coarser.cell_of(c.front());
      for (auto a : c)
        if (coarser.cell_of(a) != target) return false;
    }
    return true;
  }

  /// True when `set` is a union of cells.
  bool is_union_of_cells(const EventSet& set) const {
    for (const auto& c : cells_) {
      bool first = set.contains(c.front());
      for (auto a : c)
        if (set.contains(a) != first) return false;
    }
    return true;
  }

  EventSet cell_set(std::size_t c) const { return EventSet::of(atom_count(), cells_[c]); }

  friend bool operator==(const Partition& a, const Partition& b) { return a.cell_of_ == b.cell_of_; }

 private:
  std::vector<std::size_t> cell_of_;
  std::vector<std::vector<std::size_t>> cells_;
};

/// Common refinement: the partition of the σ-algebra generated by both.
inline Partition join(const Partition& a, const Partition& b) {
  std::vector<std::pair<std::size_t, std::size_t>> keys(a.atom_count());
  for (std::size_t i = 0; i < keys.size(); ++i) keys[i] = {a.cell_of(i), b.cell_of(i)};
  return Partition::from_keys(keys);
}

/// Atoms of the σ-algebra generated by a family of sets: atoms with identical membership patterns.
inline Partition generated_by(std::size_t atoms, const std::vector<EventSet>& generators) {
  std::vector<std::vector<char>> keys(atoms, std::vector<char>(generators.size()));
  for (std::size_t g = 0; g < generators.size(); ++g)
    for (std::size_t i = 0; i < atoms; ++i) keys[i][g] = generators[g].contains(i) ? 1 : 0;
  return Partition::from_keys(keys);
}

}  // namespace hlab
