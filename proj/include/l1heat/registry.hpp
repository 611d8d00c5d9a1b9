#pragma once

#include "l1heat/errors.hpp"
#include "l1heat/quadrature.hpp"
#include "l1heat/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace l1heat {

namespace registry_detail {

constexpr double pi = std::numbers::pi;

inline Point centre(int dim) { return dim == 1 ? Point{0.5, 0.0} : Point{0.5, 0.5}; }

inline double radius(int dim, const Point& x, const Point& c)
{
    return dim == 1 ? std::abs(x[0] - c[0]) : length(x - c);
}

/// Integral of (1 - r^2)^3 over the unit ball of R^d.
inline double bump_mass(int dim) { return dim == 1 ? 32.0 / 35.0 : pi / 4.0; }

/// (1 - |x - c|^2 / eps^2)^3, scaled to unit integral.
inline SpaceFunction unit_bump(int dim, Point c, double eps)
{
    const double scale = 1.0 / (bump_mass(dim) * std::pow(eps, dim));
    return [=](const Point& x) {
        const double r = radius(dim, x, c) / eps;
        return r < 1.0 ? scale * std::pow(1.0 - r * r, 3) : 0.0;
    };
}

/// Integral of |x - c|^{-alpha} over (0,1)^d with c the centre.
inline double spike_mass(int dim, double alpha)
{
    if (dim == 1) {
        return 2.0 * std::pow(0.5, 1.0 - alpha) / (1.0 - alpha);
    }
    // 8 congruent triangles; r runs up to 0.5 / cos(theta)
    const GaussRule g = gauss_legendre(20);
    double s = 0.0;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        const double th = 0.25 * pi * g.nodes[i];
        s += g.weights[i] * std::pow(0.5 / std::cos(th), 2.0 - alpha);
    }
    return 8.0 * 0.25 * pi * s / (2.0 - alpha);
}

struct ParsedSpec {
    std::string name;
    std::optional<double> param;
};

inline ParsedSpec parse_spec(std::string_view spec)
{
    ParsedSpec p;
    const auto open = spec.find('(');
    if (open == std::string_view::npos) {
        p.name = std::string(spec);
        return p;
    }
    if (spec.back() != ')') {
        throw ParseError("problem spec '" + std::string(spec) + "': missing closing parenthesis");
    }
    p.name = std::string(spec.substr(0, open));
    const std::string arg(spec.substr(open + 1, spec.size() - open - 2));
    try {
        std::size_t used = 0;
        p.param = std::stod(arg, &used);
        if (used != arg.size()) {
            throw ParseError("");
        }
    } catch (const std::exception&) {
        throw ParseError("problem spec '" + std::string(spec) + "': parameter is not a number");
    }
    return p;
}

} // namespace registry_detail

inline constexpr double default_dirac_width = 0.0625;
inline constexpr double impulse_start = 0.05;
inline constexpr double impulse_width = 0.02;

inline ProblemData zero_problem()
{
    ProblemData d;
    d.name = "zero";
    d.u0_l1 = 0.0;
    d.exact = [](double, const Point&) { return 0.0; };
    d.exact_gradient = [](double, const Point&) { return Point{0.0, 0.0}; };
    return d;
}

/// u = exp(-d pi^2 t) prod sin(pi x_i).
inline ProblemData sine_problem(int dim)
{
    using registry_detail::pi;
    ProblemData d;
    d.name = dim == 1 ? "sine1d" : "sine2d";
    const auto profile = [dim](const Point& x) {
        return dim == 1 ? std::sin(pi * x[0]) : std::sin(pi * x[0]) * std::sin(pi * x[1]);
    };
    d.u0 = profile;
    d.u0_l1 = dim == 1 ? 2.0 / pi : 4.0 / (pi * pi);
    d.exact = [dim, profile](double t, const Point& x) { return std::exp(-dim * pi * pi * t) * profile(x); };
    d.exact_gradient = [dim](double t, const Point& x) {
        const double a = std::exp(-dim * pi * pi * t) * pi;
        if (dim == 1) {
            return Point{a * std::cos(pi * x[0]), 0.0};
        }
        return Point{a * std::cos(pi * x[0]) * std::sin(pi * x[1]), a * std::sin(pi * x[0]) * std::cos(pi * x[1])};
    };
    return d;
}

/// L1-normalized bump of radius eps at the centre of the domain.
inline ProblemData dirac_problem(int dim, double eps = default_dirac_width)
{
    if (!(eps > 0.0) || eps > 0.5) {
        throw ValidationError("dirac: width must lie in (0, 0.5]");
    }
    ProblemData d;
    d.name = "dirac";
    d.u0 = registry_detail::unit_bump(dim, registry_detail::centre(dim), eps);
    d.u0_l1 = 1.0;
    return d;
}

/// f(t, x) = c |x - x_0|^{-alpha}, time independent, with ||f(t)||_{L1} = 1.
/// Requires alpha < d; f is not square integrable once alpha >= d / 2.
inline ProblemData spike_problem(int dim, double alpha)
{
    if (!(alpha > 0.0) || alpha >= dim) {
        throw ValidationError("spike-rhs: exponent must lie in (0, d)");
    }
    const Point c = registry_detail::centre(dim);
    const double scale = 1.0 / registry_detail::spike_mass(dim, alpha);
    ProblemData d;
    d.name = "spike-rhs";
    const SpaceFunction g = [=](const Point& x) {
        const double r = registry_detail::radius(dim, x, c);
        return r > 0.0 ? scale * std::pow(r, -alpha) : 0.0;
    };
    d.f = [g](double, const Point& x) { return g(x); };
    d.separable = SeparableRhs{[](double, double) { return 1.0; }, g};
    d.f_l1 = [](double t) { return t; };
    d.u0_l1 = 0.0;
    d.singular_point = c;
    return d;
}

/// f(t, x) = psi(t) g(x) with psi a unit-mass raised cosine on [t0, t0 + w] and
/// g a unit-mass bump of radius 1/4.
inline ProblemData impulse_problem(int dim, double t0 = impulse_start, double w = impulse_width)
{
    using registry_detail::pi;
    const auto primitive = [t0, w](double t) {
        const double s = std::clamp(t - t0, 0.0, w);
        return (s - w / (2.0 * pi) * std::sin(2.0 * pi * s / w)) / w;
    };
    const SpaceFunction g = registry_detail::unit_bump(dim, registry_detail::centre(dim), 0.25);
    ProblemData d;
    d.name = "impulse-rhs";
    d.f = [=](double t, const Point& x) {
        const double s = t - t0;
        return s > 0.0 && s < w ? (1.0 - std::cos(2.0 * pi * s / w)) / w * g(x) : 0.0;
    };
    d.separable = SeparableRhs{[primitive](double a, double b) { return (primitive(b) - primitive(a)) / (b - a); }, g};
    d.f_l1 = primitive;
    d.u0_l1 = 0.0;
    return d;
}

inline std::vector<std::string> registry_names()
{
    return {"zero", "sine1d", "sine2d", "dirac", "spike-rhs", "impulse-rhs"};
}

inline double default_spike_exponent(int dim) { return dim == 1 ? 0.75 : 1.5; }

/// Builds a registry entry from "name" or "name(param)".
inline ProblemData make_problem(std::string_view spec, int dim)
{
    if (dim != 1 && dim != 2) {
        throw ValidationError("problem: dimension must be 1 or 2");
    }
    const auto p = registry_detail::parse_spec(spec);
    const auto no_param = [&] {
        if (p.param) {
            throw ValidationError("problem '" + p.name + "' takes no parameter");
        }
    };
    if (p.name == "zero") {
        no_param();
        return zero_problem();
    }
    if (p.name == "sine1d" || p.name == "sine2d") {
        no_param();
        const int want = p.name == "sine1d" ? 1 : 2;
        if (want != dim) {
            throw ValidationError("problem '" + p.name + "' requires --dim " + std::to_string(want));
        }
        return sine_problem(dim);
    }
    if (p.name == "sine") {
        no_param();
        return sine_problem(dim);
    }
    if (p.name == "dirac") {
        return dirac_problem(dim, p.param.value_or(default_dirac_width));
    }
    if (p.name == "spike-rhs") {
        return spike_problem(dim, p.param.value_or(default_spike_exponent(dim)));
    }
    if (p.name == "impulse-rhs") {
        no_param();
        return impulse_problem(dim);
    }
    std::string known;
    for (const auto& n : registry_names()) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw ValidationError("unknown problem '" + p.name + "' (known: " + known + ")");
}

/// Data regularized by truncation at level M, together with its L1 distance
/// ||u_0 - T_M u_0||_{L1} + ||f - T_M f||_{L1(Q_T)} to the original data.
struct RegularizedData {
    double level = 0.0;
    ProblemData data;
    double distance = 0.0;
    QuadratureReport quadrature;
};

inline RegularizedData truncate_data(const ProblemData& data, double level, const Mesh& mesh, double t_final,
                                     const QuadratureSpec& quad = {})
{
    if (!(level > 0.0)) {
        throw ValidationError("truncate_data: level must be positive");
    }
    RegularizedData r;
    const QuadratureSpec sq = focused(quad, data.singular_point);
    r.level = level;
    r.data.name = data.name + "-trunc";
    r.data.singular_point = data.singular_point;
    const auto excess = [level](double v) { return std::max(0.0, std::abs(v) - level); };
    if (data.u0) {
        const SpaceFunction u0 = data.u0;
        r.data.u0 = [u0, level](const Point& x) { return std::clamp(u0(x), -level, level); };
        r.distance += integrate(mesh, [&](const Point& x) { return excess(u0(x)); }, sq, &r.quadrature);
    }
    if (data.has_rhs()) {
        const SpaceTimeFunction f = data.f;
        r.data.f = [f, level](double t, const Point& x) { return std::clamp(f(t, x), -level, level); };
        const QuadratureSpec tq{.order = 2, .adaptive = true, .max_depth = 20, .abs_tol = 1e-12};
        r.distance += integrate(
            mesh,
            [&](const Point& x) {
                return integrate_interval([&](double t) { return excess(f(t, x)); }, 0.0, t_final, 2, tq,
                                          &r.quadrature);
            },
            sq, &r.quadrature);
    }
    return r;
}

struct SelfTestResult {
    bool has_exact = false;
    /// max |u_t - Laplace u - f| over the sample points
    double pde_residual = 0.0;
    /// max |u(0, x) - u_0(x)|
    double initial_mismatch = 0.0;
    /// max |u(t, x)| over boundary samples
    double boundary_value = 0.0;
    bool passed(double tol = 1e-6) const
    {
        return !has_exact || (pde_residual < tol && initial_mismatch < tol && boundary_value < tol);
    }
};

/// Fourth-order finite-difference check of an analytic solution on a sample
/// lattice of (0, T) x (0,1)^d.
inline SelfTestResult self_test(const ProblemData& data, int dim, double t_final)
{
    SelfTestResult r;
    if (!data.exact) {
        return r;
    }
    r.has_exact = true;
    const auto& u = data.exact;
    const double h = 1e-3;
    const int k = 7;
    // (-g(2) + 8 g(1) - 8 g(-1) + g(-2)) / 12h and (-g(2) + 16 g(1) - 30 g(0) + 16 g(-1) - g(-2)) / 12h^2
    const auto d1 = [h](auto&& g) { return (-g(2 * h) + 8 * g(h) - 8 * g(-h) + g(-2 * h)) / (12 * h); };
    const auto d2 = [h](auto&& g) {
        return (-g(2 * h) + 16 * g(h) - 30 * g(0.0) + 16 * g(-h) - g(-2 * h)) / (12 * h * h);
    };
    for (int it = 1; it <= k; ++it) {
        const double t = t_final * it / (k + 1);
        for (int i = 1; i <= k; ++i) {
            for (int j = 1; j <= (dim == 2 ? k : 1); ++j) {
                const Point x{static_cast<double>(i) / (k + 1), dim == 2 ? static_cast<double>(j) / (k + 1) : 0.0};
                const double ut = d1([&](double s) { return u(t + s, x); });
                double lap = d2([&](double s) { return u(t, {x[0] + s, x[1]}); });
                if (dim == 2) {
                    lap += d2([&](double s) { return u(t, {x[0], x[1] + s}); });
                }
                const double f = data.f ? data.f(t, x) : 0.0;
                r.pde_residual = std::max(r.pde_residual, std::abs(ut - lap - f));
                const double u0 = data.u0 ? data.u0(x) : 0.0;
                r.initial_mismatch = std::max(r.initial_mismatch, std::abs(u(0.0, x) - u0));
            }
            const double s = static_cast<double>(it) / (k + 1);
            const std::vector<Point> bd = dim == 1 ? std::vector<Point>{{0.0, 0.0}, {1.0, 0.0}}
                                                   : std::vector<Point>{{s, 0.0}, {s, 1.0}, {0.0, s}, {1.0, s}};
            for (const Point& b : bd) {
                r.boundary_value = std::max(r.boundary_value, std::abs(u(t, b)));
            }
        }
    }
    return r;
}

} // namespace l1heat
