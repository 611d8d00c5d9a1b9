#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace l1heat {

/// Coordinates in R^d, d <= 2. Unused components are zero.
using Point = std::array<double, 2>;

/// Vertex indices of a simplex; only the first dim+1 entries are used.
using Simplex = std::array<std::size_t, 3>;

/// Barycentric coordinates; only the first dim+1 entries are used.
using Barycentric = std::array<double, 3>;

inline constexpr std::size_t no_index = std::numeric_limits<std::size_t>::max();

inline Point operator+(const Point& a, const Point& b) { return {a[0] + b[0], a[1] + b[1]}; }
inline Point operator-(const Point& a, const Point& b) { return {a[0] - b[0], a[1] - b[1]}; }
inline Point operator*(double s, const Point& a) { return {s * a[0], s * a[1]}; }
inline double dot(const Point& a, const Point& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double length(const Point& a) { return std::sqrt(dot(a, a)); }
inline double cross(const Point& a, const Point& b) { return a[0] * b[1] - a[1] * b[0]; }

/// Per-element geometry of a P1 simplex: measure and the constant gradients of
/// the barycentric (hat) functions.
struct ElementGeometry {
    double measure = 0.0;
    double diameter = 0.0;
    std::array<Point, 3> grad_lambda{};
};

} // namespace l1heat
