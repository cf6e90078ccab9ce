#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace cmm {

inline constexpr double two_pi = 6.28318530717958647692528676655900577;
inline constexpr double pi = 3.14159265358979323846264338327950288;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  constexpr Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
  constexpr Vec2& operator*=(double s) { x *= s; y *= s; return *this; }

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline bool is_finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

/// Row-major 2x2 matrix [[a, b], [c, d]].
struct Mat2 {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

  constexpr double det() const { return a * d - b * c; }
  /// Adjugate; for 2x2 this is [[d, -b], [-c, a]] and is linear in the entries.
  constexpr Mat2 adj() const { return {d, -b, -c, a}; }
  constexpr Vec2 col(int m) const { return m == 0 ? Vec2{a, c} : Vec2{b, d}; }

  friend constexpr Mat2 operator*(const Mat2& l, const Mat2& r) {
    return {l.a * r.a + l.b * r.c, l.a * r.b + l.b * r.d,
            l.c * r.a + l.d * r.c, l.c * r.b + l.d * r.d};
  }
  friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
    return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
  }
  friend constexpr Mat2 operator+(const Mat2& l, const Mat2& r) {
    return {l.a + r.a, l.b + r.b, l.c + r.c, l.d + r.d};
  }
  friend constexpr Mat2 operator*(double s, const Mat2& m) {
    return {s * m.a, s * m.b, s * m.c, s * m.d};
  }
  friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

/// Uniform periodic grid; node (i, j) sits at (i*lx/nx, j*ly/ny) and is stored
/// at flat index j*nx + i.
struct GridSpec {
  int nx = 0;
  int ny = 0;
  double lx = two_pi;
  double ly = two_pi;

  static GridSpec square(int n, double l = two_pi) { return {n, n, l, l}; }

  constexpr double hx() const { return lx / nx; }
  constexpr double hy() const { return ly / ny; }
  constexpr std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  }
  constexpr std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(nx) +
           static_cast<std::size_t>(i);
  }
  Vec2 node(int i, int j) const { return {i * lx / nx, j * ly / ny}; }
  Vec2 node(std::size_t k) const {
    return node(static_cast<int>(k % static_cast<std::size_t>(nx)),
                static_cast<int>(k / static_cast<std::size_t>(nx)));
  }

  void validate() const {
    if (nx < 4 || ny < 4)
      throw std::invalid_argument("grid needs at least 4 nodes per axis, got " +
                                  std::to_string(nx) + "x" + std::to_string(ny));
    if (!(lx > 0.0) || !(ly > 0.0) || !std::isfinite(lx) || !std::isfinite(ly))
      throw std::invalid_argument("grid lengths must be positive and finite");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

}  // namespace cmm
