#pragma once

#include <cassert>
#include <compare>
#include <limits>
#include <string>

namespace hlab {

/// A point of {0, 1, ..., N, INF, DELTA}, ordered 0 < 1 < ... < INF < DELTA.
class ExtendedTime {
 public:
  constexpr ExtendedTime() = default;

  static constexpr ExtendedTime at(int t) {
    assert(t >= 0);
    return ExtendedTime(t);
  }
  static constexpr ExtendedTime infinity() { return ExtendedTime(kInfinity); }
  static constexpr ExtendedTime delta() { return ExtendedTime(kDelta); }

  constexpr bool is_finite() const { return raw_ < kInfinity; }
  constexpr bool is_infinity() const { return raw_ == kInfinity; }
  constexpr bool is_delta() const { return raw_ == kDelta; }

  constexpr int value() const {
    assert(is_finite());
    return raw_;
  }

  /// Index of the partition describing F at this time on a horizon-N space: INF maps to N.
  constexpr int level(int horizon) const {
    assert(!is_delta());
    return raw_ < horizon ? raw_ : horizon;
  }

  constexpr auto operator<=>(const ExtendedTime&) const = default;

  std::string to_string() const {
    if (is_infinity()) return "inf";
    if (is_delta()) return "delta";
    return std::to_string(raw_);
  }

 private:
  static constexpr int kInfinity = std::numeric_limits<int>::max() - 1;
  static constexpr int kDelta = std::numeric_limits<int>::max();
  constexpr explicit ExtendedTime(int raw) : raw_(raw) {}
  int raw_ = 0;
};

inline constexpr ExtendedTime kInf = ExtendedTime::infinity();
inline constexpr ExtendedTime kDelta = ExtendedTime::delta();

}  // namespace hlab
