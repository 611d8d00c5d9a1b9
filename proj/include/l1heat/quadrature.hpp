#pragma once

#include "l1heat/errors.hpp"
#include "l1heat/geometry.hpp"
#include "l1heat/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace l1heat {

/// Element quadrature settings. Adaptive subdivision compares the rule on a
/// cell against the rule on its children and recurses where the absolute
/// difference exceeds abs_tol.
struct QuadratureSpec {
    int order = 4;
    bool adaptive = true;
    int max_depth = 20;
    double abs_tol = 1e-9;
    /// Throw QuadratureError instead of recording when max_depth is hit.
    bool strict = false;
    /// Cells containing this point are subdivided down to max_depth whatever
    /// the error estimate says; meant for integrable point singularities.
    std::optional<Point> focus = std::nullopt;
};

/// Copy of spec focused on p unless it already has a focus.
inline QuadratureSpec focused(QuadratureSpec spec, const std::optional<Point>& p)
{
    if (!spec.focus) {
        spec.focus = p;
    }
    return spec;
}

/// Bookkeeping of adaptive integrations: how often the depth limit was hit and
/// the accumulated |fine - coarse| estimate on those cells.
struct QuadratureReport {
    std::size_t depth_limited_cells = 0;
    double estimated_error = 0.0;
    int deepest_level = 0;

    void merge(const QuadratureReport& o)
    {
        depth_limited_cells += o.depth_limited_cells;
        estimated_error += o.estimated_error;
        deepest_level = std::max(deepest_level, o.deepest_level);
    }
    bool clean() const noexcept { return depth_limited_cells == 0; }
};

struct GaussRule {
    std::vector<double> nodes;   // on [0, 1]
    std::vector<double> weights; // sum to 1
};

/// n-point Gauss-Legendre rule mapped to [0, 1] (exact for degree 2n - 1).
inline GaussRule gauss_legendre(int n)
{
    if (n < 1) {
        throw ValidationError("gauss_legendre: need at least one point");
    }
    GaussRule r;
    r.nodes.resize(static_cast<std::size_t>(n));
    r.weights.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) {
                p1 = x;
                p0 = 1.0;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        // recompute derivative at the converged root
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        r.nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
        r.weights[static_cast<std::size_t>(i)] = 0.5 * w;
    }
    return r;
}

struct QuadPoint {
    Barycentric bary;
    double weight; // relative to the simplex measure
};

namespace detail {

inline std::vector<QuadPoint> symmetric_triangle_orbit(double a, double w)
{
    const double b = 1.0 - 2.0 * a;
    if (std::abs(a - b) < 1e-15) {
        return {{{a, a, a}, w}};
    }
    return {{{a, a, b}, w}, {{a, b, a}, w}, {{b, a, a}, w}};
}

inline std::vector<QuadPoint> make_rule(int dim, int order)
{
    std::vector<QuadPoint> rule;
    if (dim == 1) {
        const auto g = gauss_legendre(std::max(1, (order + 2) / 2));
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            rule.push_back({{1.0 - g.nodes[i], g.nodes[i], 0.0}, g.weights[i]});
        }
        return rule;
    }
    const auto add = [&rule](double a, double w) {
        auto orbit = symmetric_triangle_orbit(a, w);
        rule.insert(rule.end(), orbit.begin(), orbit.end());
    };
    if (order <= 1) {
        add(1.0 / 3.0, 1.0);
    } else if (order == 2) {
        add(1.0 / 6.0, 1.0 / 3.0);
    } else if (order <= 4) {
        // Dunavant degree 4, 6 points
        add(0.445948490915965, 0.223381589678011);
        add(0.091576213509771, 0.109951743655322);
    } else {
        // Dunavant degree 5, 7 points
        add(1.0 / 3.0, 0.225);
        add(0.470142064105115, 0.132394152788506);
        add(0.101286507323456, 0.125939180544827);
    }
    return rule;
}

} // namespace detail

/// Reference rule on the unit simplex in barycentric form, weights summing to 1.
inline const std::vector<QuadPoint>& reference_rule(int dim, int order)
{
    static const std::array<std::array<std::vector<QuadPoint>, 8>, 2> rules = [] {
        std::array<std::array<std::vector<QuadPoint>, 8>, 2> r;
        for (int d = 1; d <= 2; ++d) {
            for (int o = 0; o < 8; ++o) {
                r[static_cast<std::size_t>(d - 1)][static_cast<std::size_t>(o)] = detail::make_rule(d, o);
            }
        }
        return r;
    }();
    if (dim < 1 || dim > 2) {
        throw ValidationError("reference_rule: unsupported dimension");
    }
    return rules[static_cast<std::size_t>(dim - 1)][static_cast<std::size_t>(std::clamp(order, 0, 7))];
}

namespace detail {

/// Sub-cell of an element given by the barycentric coordinates of its vertices.
struct SubCell {
    std::array<Barycentric, 3> corners;
    double fraction; // measure relative to the parent element
};

inline Barycentric midpoint(const Barycentric& a, const Barycentric& b)
{
    return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])};
}

inline std::vector<SubCell> split(int dim, const SubCell& c)
{
    if (dim == 1) {
        const Barycentric m = midpoint(c.corners[0], c.corners[1]);
        return {{{c.corners[0], m, {}}, 0.5 * c.fraction}, {{m, c.corners[1], {}}, 0.5 * c.fraction}};
    }
    const auto& [a, b, cc] = c.corners;
    const Barycentric ab = midpoint(a, b), bc = midpoint(b, cc), ca = midpoint(cc, a);
    const double f = 0.25 * c.fraction;
    return {{{a, ab, ca}, f}, {{ab, b, bc}, f}, {{ca, bc, cc}, f}, {{bc, ca, ab}, f}};
}

template <std::size_t K, class F>
std::array<double, K> apply_rule(const Mesh& mesh, std::size_t e, const SubCell& c, const std::vector<QuadPoint>& rule,
                                 F& f)
{
    std::array<double, K> acc{};
    const double scale = c.fraction * mesh.measure(e);
    const std::size_t nc = mesh.vertices_per_element();
    for (const auto& q : rule) {
        Barycentric b{0.0, 0.0, 0.0};
        for (std::size_t j = 0; j < nc; ++j) {
            for (std::size_t i = 0; i < nc; ++i) {
                b[i] += q.bary[j] * c.corners[j][i];
            }
        }
        const std::array<double, K> v = f(mesh.map_to_physical(e, b), b);
        for (std::size_t k = 0; k < K; ++k) {
            acc[k] += q.weight * scale * v[k];
        }
    }
    return acc;
}

template <std::size_t K>
double max_abs_diff(const std::array<double, K>& a, const std::array<double, K>& b)
{
    double m = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double d = std::abs(a[k] - b[k]);
        if (!std::isfinite(d)) {
            return d;
        }
        m = std::max(m, d);
    }
    return m;
}

/// Whether the point with parent barycentric coordinates b lies in the closed sub-cell.
inline bool contains(int dim, const SubCell& c, const Barycentric& b, double tol = 1e-12)
{
    const auto& [p, q, r] = c.corners;
    if (dim == 1) {
        const double t = (b[1] - p[1]) / (q[1] - p[1]);
        return t >= -tol && t <= 1.0 + tol;
    }
    const double a11 = q[1] - p[1], a12 = r[1] - p[1], a21 = q[2] - p[2], a22 = r[2] - p[2];
    const double det = a11 * a22 - a12 * a21;
    const double y1 = b[1] - p[1], y2 = b[2] - p[2];
    const double s = (y1 * a22 - a12 * y2) / det;
    const double t = (a11 * y2 - y1 * a21) / det;
    return s >= -tol && t >= -tol && s + t <= 1.0 + tol;
}

template <std::size_t K, class F>
std::array<double, K> adapt(const Mesh& mesh, std::size_t e, const SubCell& cell, const std::array<double, K>& coarse,
                            int depth, const std::vector<QuadPoint>& rule, F& f, const QuadratureSpec& spec,
                            QuadratureReport& report, const std::optional<Barycentric>& focus = std::nullopt)
{
    const auto children = split(mesh.dim(), cell);
    std::vector<std::array<double, K>> parts;
    parts.reserve(children.size());
    std::array<double, K> fine{};
    for (const auto& ch : children) {
        parts.push_back(apply_rule<K>(mesh, e, ch, rule, f));
        for (std::size_t k = 0; k < K; ++k) {
            fine[k] += parts.back()[k];
        }
    }
    const double diff = max_abs_diff(fine, coarse);
    if (!std::isfinite(diff)) {
        throw QuadratureError("quadrature: non-finite integrand value in element " + std::to_string(e));
    }
    report.deepest_level = std::max(report.deepest_level, depth);
    const bool forced = focus && contains(mesh.dim(), cell, *focus);
    if (diff <= spec.abs_tol && (!forced || depth >= spec.max_depth)) {
        return fine;
    }
    if (depth >= spec.max_depth) {
        if (spec.strict) {
            throw QuadratureError("quadrature: subdivision depth limit " + std::to_string(spec.max_depth) +
                                  " exceeded in element " + std::to_string(e) + " (estimated error " +
                                  std::to_string(diff) + ")");
        }
        ++report.depth_limited_cells;
        report.estimated_error += diff;
        return fine;
    }
    std::array<double, K> total{};
    for (std::size_t i = 0; i < children.size(); ++i) {
        const auto v = adapt<K>(mesh, e, children[i], parts[i], depth + 1, rule, f, spec, report, focus);
        for (std::size_t k = 0; k < K; ++k) {
            total[k] += v[k];
        }
    }
    return total;
}

} // namespace detail

/// Integrates a K-vector valued integrand f(x, barycentric) over element e.
template <std::size_t K, class F>
std::array<double, K> integrate_element(const Mesh& mesh, std::size_t e, F&& f, const QuadratureSpec& spec,
                                        QuadratureReport* report = nullptr)
{
    const auto& rule = reference_rule(mesh.dim(), spec.order);
    const detail::SubCell root{{Barycentric{1.0, 0.0, 0.0}, Barycentric{0.0, 1.0, 0.0}, Barycentric{0.0, 0.0, 1.0}},
                               1.0};
    const auto coarse = detail::apply_rule<K>(mesh, e, root, rule, f);
    for (double v : coarse) {
        if (!std::isfinite(v)) {
            throw QuadratureError("quadrature: non-finite integrand value in element " + std::to_string(e));
        }
    }
    if (!spec.adaptive) {
        return coarse;
    }
    std::optional<Barycentric> focus;
    if (spec.focus) {
        const Barycentric b = mesh.barycentric(e, *spec.focus);
        const double tol = 1e-12;
        if (b[0] >= -tol && b[1] >= -tol && (mesh.dim() == 1 || b[2] >= -tol)) {
            focus = b;
        }
    }
    QuadratureReport local;
    auto v = detail::adapt<K>(mesh, e, root, coarse, 1, rule, f, spec, local, focus);
    if (report) {
        report->merge(local);
    }
    return v;
}

/// Scalar integral over the whole mesh.
template <class F>
double integrate(const Mesh& mesh, F&& f, const QuadratureSpec& spec = {}, QuadratureReport* report = nullptr)
{
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        s += integrate_element<1>(
            mesh, e, [&f](const Point& x, const Barycentric&) { return std::array<double, 1>{f(x)}; }, spec,
            report)[0];
    }
    return s;
}

/// Adaptive Gauss-Legendre integral of a scalar function over [a, b] by bisection.
template <class F>
double integrate_interval(F&& f, double a, double b, int points, const QuadratureSpec& spec,
                          QuadratureReport* report = nullptr)
{
    const GaussRule g = gauss_legendre(points);
    const auto rule = [&](double lo, double hi) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.nodes.size(); ++i) {
            s += g.weights[i] * f(lo + (hi - lo) * g.nodes[i]);
        }
        return s * (hi - lo);
    };
    QuadratureReport local;
    const auto recurse = [&](auto&& self, double lo, double hi, double coarse, int depth) -> double {
        const double mid = 0.5 * (lo + hi);
        const double left = rule(lo, mid);
        const double right = rule(mid, hi);
        const double diff = std::abs(left + right - coarse);
        if (!std::isfinite(diff)) {
            throw QuadratureError("interval quadrature: non-finite integrand value");
        }
        local.deepest_level = std::max(local.deepest_level, depth);
        if (!spec.adaptive || diff <= spec.abs_tol) {
            return left + right;
        }
        if (depth >= spec.max_depth) {
            if (spec.strict) {
                throw QuadratureError("interval quadrature: depth limit exceeded on [" + std::to_string(lo) + ", " +
                                      std::to_string(hi) + "]");
            }
            ++local.depth_limited_cells;
            local.estimated_error += diff;
            return left + right;
        }
        return self(self, lo, mid, left, depth + 1) + self(self, mid, hi, right, depth + 1);
    };
    const double v = recurse(recurse, a, b, rule(a, b), 1);
    if (report) {
        report->merge(local);
    }
    return v;
}

} // namespace l1heat
