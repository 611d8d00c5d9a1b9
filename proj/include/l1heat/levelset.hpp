#pragma once

// Exact measures and integrals of affine functions on a simplex, from the
// vertex values only. All routines take the simplex measure and dim+1 values.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace l1heat::levelset {

/// Vertex values sorted in decreasing order (a >= b >= c; c unused for d = 1).
struct Sorted {
    double a = 0.0, b = 0.0, c = 0.0;
};

inline Sorted sort_desc(int dim, std::span<const double> v)
{
    if (dim == 1) {
        return {std::max(v[0], v[1]), std::min(v[0], v[1]), std::min(v[0], v[1])};
    }
    std::array<double, 3> s{v[0], v[1], v[2]};
    std::sort(s.begin(), s.end(), std::greater<>());
    return {s[0], s[1], s[2]};
}

/// Integral of max(u, 0) over the simplex.
inline double positive_part_integral(int dim, std::span<const double> v, double measure)
{
    if (dim == 1) {
        const double a = std::max(v[0], v[1]);
        const double c = std::min(v[0], v[1]);
        if (c >= 0.0) {
            return measure * 0.5 * (a + c);
        }
        if (a <= 0.0) {
            return 0.0;
        }
        return measure * a * a / (2.0 * (a - c));
    }
    const auto [a, b, c] = sort_desc(2, v);
    if (c >= 0.0) {
        return measure * (a + b + c) / 3.0;
    }
    if (a <= 0.0) {
        return 0.0;
    }
    if (b >= 0.0) {
        // only c negative: remove the corner triangle at c
        return measure * (a + b + c) / 3.0 - measure * c * c * c / (3.0 * (c - a) * (c - b));
    }
    // only a positive
    return measure * a * a * a / (3.0 * (a - b) * (a - c));
}

/// Integral of |u| over the simplex.
inline double abs_integral(int dim, std::span<const double> v, double measure)
{
    std::array<double, 3> neg{-v[0], -v[1], dim == 2 ? -v[2] : 0.0};
    return positive_part_integral(dim, v, measure) +
           positive_part_integral(dim, std::span<const double>(neg.data(), v.size()), measure);
}

/// |{x : u(x) > lambda}|.
inline double superlevel_measure(int dim, std::span<const double> v, double measure, double lambda)
{
    const auto [a, b, c] = sort_desc(dim, v);
    if (lambda >= a) {
        return 0.0;
    }
    if (lambda < c) {
        return measure;
    }
    if (dim == 1) {
        return measure * (a - lambda) / (a - c);
    }
    if (lambda >= b) {
        return measure * (a - lambda) * (a - lambda) / ((a - b) * (a - c));
    }
    return measure * (1.0 - (lambda - c) * (lambda - c) / ((b - c) * (a - c)));
}

/// |{x : u(x) >= lambda}|; differs from the strict version only for constant u.
inline double superlevel_measure_ge(int dim, std::span<const double> v, double measure, double lambda)
{
    const auto s = sort_desc(dim, v);
    if (s.a == s.c) {
        return s.a >= lambda ? measure : 0.0;
    }
    return superlevel_measure(dim, v, measure, lambda);
}

/// |{x : |u(x)| > lambda}| for lambda >= 0.
inline double abs_superlevel_measure(int dim, std::span<const double> v, double measure, double lambda)
{
    std::array<double, 3> neg{-v[0], -v[1], dim == 2 ? -v[2] : 0.0};
    return superlevel_measure(dim, v, measure, lambda) +
           superlevel_measure(dim, std::span<const double>(neg.data(), v.size()), measure, lambda);
}

/// Quadratic a2*l^2 + a1*l + a0 valid on [lo, hi), describing part of the
/// distribution function of an affine function.
struct DistributionSegment {
    double lo = 0.0;
    double hi = 0.0;
    // Exact input data; the coefficients are expanded by the consumer in
    // extended precision.
    enum class Kind { constant, top, middle, linear } kind = Kind::constant;
    double measure = 0.0;
    Sorted s;
};

/// Segments of lambda -> |{u > lambda}| restricted to lambda >= 0.
///
/// Sub-intervals shorter than rel_collapse times the value range are folded
/// into their neighbours (a jump), which changes the measure by at most
/// rel_collapse * measure.
inline void distribution_segments(int dim, std::span<const double> v, double measure,
                                  std::vector<DistributionSegment>& out, double rel_collapse = 1e-9)
{
    Sorted s = sort_desc(dim, v);
    if (s.a <= 0.0) {
        return;
    }
    using K = DistributionSegment::Kind;
    const double range = s.a - s.c;
    const auto push = [&](double lo, double hi, K kind) {
        lo = std::max(lo, 0.0);
        if (hi > lo) {
            out.push_back({lo, hi, kind, measure, s});
        }
    };
    if (range <= rel_collapse * std::abs(s.a)) {
        push(0.0, s.a, K::constant);
        return;
    }
    if (dim == 1) {
        push(0.0, s.c, K::constant);
        push(s.c, s.a, K::linear);
        return;
    }
    if (s.b - s.c <= rel_collapse * range) {
        s.b = s.c;
    }
    if (s.a - s.b <= rel_collapse * range) {
        s.b = s.a;
    }
    push(0.0, s.c, K::constant);
    if (s.b > s.c) {
        push(s.c, s.b, K::middle);
    }
    if (s.a > s.b) {
        push(s.b, s.a, K::top);
    }
}

} // namespace l1heat::levelset
