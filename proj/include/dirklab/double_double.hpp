#pragma once

#include <cmath>
#include <iosfwd>
#include <limits>
#include <ostream>

#include <Eigen/Core>

namespace dirklab {

/// Unevaluated sum of two doubles giving roughly 31 significant decimal
/// digits. Stands in for IEEE binary128 in the extended precision level.
/// Requires strict IEEE double arithmetic (no -ffast-math).
struct DoubleDouble {
  double hi = 0.0;
  double lo = 0.0;

  constexpr DoubleDouble() = default;
  constexpr DoubleDouble(double x) : hi(x), lo(0.0) {}
  constexpr DoubleDouble(double h, double l) : hi(h), lo(l) {}
  constexpr explicit DoubleDouble(int x) : hi(static_cast<double>(x)), lo(0.0) {}
};

namespace dd_detail {

struct Pair {
  double s, e;
};

// Error-free sum, |a| >= |b| assumed.
inline Pair quick_two_sum(double a, double b) {
  const double s = a + b;
  return {s, b - (s - a)};
}

// Error-free sum for arbitrary a, b (Knuth).
inline Pair two_sum(double a, double b) {
  const double s = a + b;
  const double v = s - a;
  return {s, (a - (s - v)) + (b - v)};
}

// Error-free product via FMA.
inline Pair two_prod(double a, double b) {
  const double p = a * b;
  return {p, std::fma(a, b, -p)};
}

}  // namespace dd_detail

inline DoubleDouble operator+(DoubleDouble a, DoubleDouble b) {
  using namespace dd_detail;
  Pair s = two_sum(a.hi, b.hi);
  Pair t = two_sum(a.lo, b.lo);
  s.e += t.s;
  s = quick_two_sum(s.s, s.e);
  s.e += t.e;
  s = quick_two_sum(s.s, s.e);
  return {s.s, s.e};
}

inline DoubleDouble operator-(DoubleDouble a) { return {-a.hi, -a.lo}; }
inline DoubleDouble operator-(DoubleDouble a, DoubleDouble b) { return a + (-b); }

inline DoubleDouble operator*(DoubleDouble a, DoubleDouble b) {
  using namespace dd_detail;
  Pair p = two_prod(a.hi, b.hi);
  p.e += a.hi * b.lo + a.lo * b.hi;
  p = quick_two_sum(p.s, p.e);
  return {p.s, p.e};
}

inline DoubleDouble operator/(DoubleDouble a, DoubleDouble b) {
  using namespace dd_detail;
  const double q1 = a.hi / b.hi;
  DoubleDouble r = a - b * DoubleDouble(q1);
  const double q2 = r.hi / b.hi;
  r = r - b * DoubleDouble(q2);
  const double q3 = r.hi / b.hi;
  Pair s = quick_two_sum(q1, q2);
  return DoubleDouble(s.s, s.e) + DoubleDouble(q3);
}

inline DoubleDouble& operator+=(DoubleDouble& a, DoubleDouble b) { return a = a + b; }
inline DoubleDouble& operator-=(DoubleDouble& a, DoubleDouble b) { return a = a - b; }
inline DoubleDouble& operator*=(DoubleDouble& a, DoubleDouble b) { return a = a * b; }
inline DoubleDouble& operator/=(DoubleDouble& a, DoubleDouble b) { return a = a / b; }

inline bool operator==(DoubleDouble a, DoubleDouble b) { return a.hi == b.hi && a.lo == b.lo; }
inline bool operator!=(DoubleDouble a, DoubleDouble b) { return !(a == b); }
inline bool operator<(DoubleDouble a, DoubleDouble b) {
  return a.hi < b.hi || (a.hi == b.hi && a.lo < b.lo);
}
inline bool operator>(DoubleDouble a, DoubleDouble b) { return b < a; }
inline bool operator<=(DoubleDouble a, DoubleDouble b) { return !(b < a); }
inline bool operator>=(DoubleDouble a, DoubleDouble b) { return !(a < b); }

inline DoubleDouble abs(DoubleDouble a) { return a.hi < 0.0 ? -a : a; }

inline DoubleDouble sqrt(DoubleDouble a) {
  if (a.hi == 0.0) return {};
  // One Newton step on a double seed squares the accuracy.
  const DoubleDouble s(std::sqrt(a.hi));
  const DoubleDouble t = s + a / s;
  return t * DoubleDouble(0.5);
}

inline double to_double(DoubleDouble a) { return a.hi + a.lo; }
inline double to_double(double a) { return a; }

inline bool isfinite(DoubleDouble a) { return std::isfinite(a.hi) && std::isfinite(a.lo); }

inline std::ostream& operator<<(std::ostream& os, DoubleDouble a) {
  return os << to_double(a);
}

}  // namespace dirklab

namespace Eigen {

template <>
struct NumTraits<dirklab::DoubleDouble> : GenericNumTraits<dirklab::DoubleDouble> {
  typedef dirklab::DoubleDouble Real;
  typedef dirklab::DoubleDouble NonInteger;
  typedef dirklab::DoubleDouble Nested;
  typedef dirklab::DoubleDouble Literal;

  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 10,
    MulCost = 20
  };

  static inline Real epsilon() { return Real(1.2e-32); }
  static inline Real dummy_precision() { return Real(1e-28); }
  static inline Real highest() { return Real(std::numeric_limits<double>::max()); }
  static inline Real lowest() { return Real(-std::numeric_limits<double>::max()); }
  static inline int digits10() { return 31; }
};

}  // namespace Eigen
