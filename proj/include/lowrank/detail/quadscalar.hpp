#pragma once

// Quad-precision scalar for the dynamics oracles. A thin wrapper around
// __float128 so Eigen's dense solvers can be instantiated on it: math
// functions are found through ADL, which does not work for the bare builtin.

#include <quadmath.h>

#include <Eigen/Dense>
#include <limits>

namespace lowrank::qp {

struct Quad {
  __float128 v;
  Quad() : v(0) {}
  Quad(__float128 x) : v(x) {}
  Quad(double x) : v(x) {}
  Quad(int x) : v(x) {}
  Quad(long x) : v(x) {}
  explicit operator double() const { return static_cast<double>(v); }
};

inline Quad operator+(Quad a, Quad b) { return {a.v + b.v}; }
inline Quad operator-(Quad a, Quad b) { return {a.v - b.v}; }
inline Quad operator*(Quad a, Quad b) { return {a.v * b.v}; }
inline Quad operator/(Quad a, Quad b) { return {a.v / b.v}; }
inline Quad operator-(Quad a) { return {-a.v}; }
inline Quad& operator+=(Quad& a, Quad b) { a.v += b.v; return a; }
inline Quad& operator-=(Quad& a, Quad b) { a.v -= b.v; return a; }
inline Quad& operator*=(Quad& a, Quad b) { a.v *= b.v; return a; }
inline Quad& operator/=(Quad& a, Quad b) { a.v /= b.v; return a; }
inline bool operator<(Quad a, Quad b) { return a.v < b.v; }
inline bool operator>(Quad a, Quad b) { return a.v > b.v; }
inline bool operator<=(Quad a, Quad b) { return a.v <= b.v; }
inline bool operator>=(Quad a, Quad b) { return a.v >= b.v; }
inline bool operator==(Quad a, Quad b) { return a.v == b.v; }
inline bool operator!=(Quad a, Quad b) { return a.v != b.v; }

inline Quad sqrt(Quad a) { return {sqrtq(a.v)}; }
inline Quad abs(Quad a) { return {fabsq(a.v)}; }
inline Quad fabs(Quad a) { return {fabsq(a.v)}; }
inline Quad hypot(Quad a, Quad b) { return {hypotq(a.v, b.v)}; }
inline Quad log(Quad a) { return {logq(a.v)}; }
inline Quad exp(Quad a) { return {expq(a.v)}; }
inline Quad pow(Quad a, Quad b) { return {powq(a.v, b.v)}; }
inline Quad atan2(Quad a, Quad b) { return {atan2q(a.v, b.v)}; }
inline Quad cos(Quad a) { return {cosq(a.v)}; }
inline Quad sin(Quad a) { return {sinq(a.v)}; }
inline bool isfinite(Quad a) { return finiteq(a.v) != 0; }
inline bool isinf(Quad a) { return isinfq(a.v) != 0; }
inline bool isnan(Quad a) { return isnanq(a.v) != 0; }

using MatrixQ = Eigen::Matrix<Quad, Eigen::Dynamic, Eigen::Dynamic>;
using VectorQ = Eigen::Matrix<Quad, Eigen::Dynamic, 1>;

}  // namespace lowrank::qp

namespace std {
template <>
struct numeric_limits<lowrank::qp::Quad> {
  static constexpr bool is_specialized = true;
  static lowrank::qp::Quad epsilon() { return {FLT128_EPSILON}; }
  static lowrank::qp::Quad min() { return {FLT128_MIN}; }
  static lowrank::qp::Quad max() { return {FLT128_MAX}; }
  static lowrank::qp::Quad lowest() { return {-FLT128_MAX}; }
  static lowrank::qp::Quad infinity() { return {HUGE_VALQ}; }
  static lowrank::qp::Quad quiet_NaN() { return {nanq("")}; }
  static constexpr int digits = FLT128_MANT_DIG;
  static constexpr int digits10 = FLT128_DIG;
  static constexpr bool is_signed = true;
  static constexpr bool is_integer = false;
  static constexpr bool is_exact = false;
  static constexpr int radix = 2;
  static constexpr bool has_infinity = true;
  static constexpr bool has_quiet_NaN = true;
};
}  // namespace std

namespace Eigen {
template <>
struct NumTraits<lowrank::qp::Quad> : GenericNumTraits<lowrank::qp::Quad> {
  typedef lowrank::qp::Quad Real;
  typedef lowrank::qp::Quad NonInteger;
  typedef lowrank::qp::Quad Nested;
  static inline Real epsilon() { return {FLT128_EPSILON}; }
  static inline Real dummy_precision() { return {FLT128_EPSILON * 1024}; }
  static inline Real highest() { return {FLT128_MAX}; }
  static inline Real lowest() { return {-FLT128_MAX}; }
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 2,
    AddCost = 4,
    MulCost = 8
  };
};
}  // namespace Eigen
