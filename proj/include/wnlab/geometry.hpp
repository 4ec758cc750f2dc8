#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wnlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
};

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// x^perp := (x2, -x1). Together with u = perp-grad of the stream function this
/// gives vorticity = d2 u1 - d1 u2.
constexpr Vec2 perp(const Vec2& a) { return {a.y, -a.x}; }

/// Symmetric 2x2 matrix (Hessians).
struct Mat2 {
  double xx = 0.0;
  double xy = 0.0;
  double yx = 0.0;
  double yy = 0.0;
};

/// Reduce a coordinate to [0, 1).
inline double wrap_unit(double v) {
  double r = v - std::floor(v);
  return r >= 1.0 ? 0.0 : r;
}

inline Vec2 wrap_unit(const Vec2& p) { return {wrap_unit(p.x), wrap_unit(p.y)}; }

/// Reduce a coordinate to the minimal image in [-1/2, 1/2).
inline double min_image(double v) { return v - std::floor(v + 0.5); }

inline Vec2 min_image(const Vec2& d) { return {min_image(d.x), min_image(d.y)}; }

inline double torus_distance(const Vec2& a, const Vec2& b) { return norm(min_image(a - b)); }

// Error types shared across modules.

class SingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InsufficientSamplesError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace wnlab
