#pragma once

#include "l1heat/errors.hpp"
#include "l1heat/fespace.hpp"
#include "l1heat/levelset.hpp"
#include "l1heat/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace l1heat {

namespace detail {

inline void require_level(double k)
{
    if (!(k > 0.0) || !std::isfinite(k)) {
        throw ValidationError("truncation level must be positive and finite (got " + std::to_string(k) + ")");
    }
}

} // namespace detail

/// T_k(s) = min(k, max(-k, s)).
inline double trunc(double k, double s)
{
    detail::require_level(k);
    return std::clamp(s, -k, k);
}

/// Primitive of T_k with theta(k, 0) = 0.
inline double theta(double k, double s)
{
    detail::require_level(k);
    const double a = std::abs(s);
    return a <= k ? 0.5 * s * s : k * a - 0.5 * k * k;
}

/// Nodal interpolant of T_k(u).
inline FeFunction nodal_truncate(const FeFunction& u, double k)
{
    detail::require_level(k);
    Vector v(u.values().begin(), u.values().end());
    for (double& x : v) {
        x = std::clamp(x, -k, k);
    }
    return FeFunction(u.mesh(), std::move(v), u.homogeneous());
}

/// Lumped L1 norm of the nodal interpolant of Theta_k(u).
inline double lumped_theta(const FeFunction& u, double k, const LumpedWeights& w)
{
    detail::require_level(k);
    double s = 0.0;
    for (std::size_t z = 0; z < w.weights.size(); ++z) {
        s += theta(k, u[z]) * w.weights[z];
    }
    return s;
}

/// Elementwise check of grad u . grad L_h T_k u >= |grad L_h T_k u|^2 and
/// |grad L_h T_k u| <= |grad u|.
struct DmpCheck {
    /// min over elements of grad u . grad T - |grad T|^2
    double min_residual = 0.0;
    /// min over elements of |grad u| - |grad T|
    double min_gradient_slack = 0.0;
    /// max over elements of |grad u|^2, used to scale the slack
    double scale = 0.0;
    std::size_t worst_element = no_index;
    bool mesh_nonobtuse = true;
    bool passed = true;
};

inline DmpCheck check_dmp(const FeFunction& u, double k, double rel_slack = 1e-12)
{
    const Mesh& mesh = u.mesh();
    const FeFunction t = nodal_truncate(u, k);
    DmpCheck r;
    r.mesh_nonobtuse = is_nonobtuse(mesh);
    r.min_residual = std::numeric_limits<double>::infinity();
    r.min_gradient_slack = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point gu = u.gradient(e);
        const Point gt = t.gradient(e);
        r.scale = std::max(r.scale, dot(gu, gu));
        const double res = dot(gu, gt) - dot(gt, gt);
        if (res < r.min_residual) {
            r.min_residual = res;
            r.worst_element = e;
        }
        r.min_gradient_slack = std::min(r.min_gradient_slack, length(gu) - length(gt));
    }
    if (mesh.num_elements() == 0) {
        r.min_residual = r.min_gradient_slack = 0.0;
    }
    // The gradient slack compares lengths, so it is scaled by max(scale, sqrt(scale)).
    r.passed = r.min_residual >= -rel_slack * r.scale &&
               r.min_gradient_slack >= -rel_slack * std::max(r.scale, std::sqrt(r.scale));
    return r;
}

inline DmpCheck check_dmp(const Mesh& mesh, const FeFunction& u, double k, double rel_slack = 1e-12)
{
    if (&mesh != &u.mesh()) {
        throw ValidationError("check_dmp: function lives on a different mesh");
    }
    return check_dmp(u, k, rel_slack);
}

/// Both sides of ||Theta_k(u)||_{L1_h} <= C_1 k ||u||_{L1}.
struct LumpedBound {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds() const noexcept { return lhs <= rhs * (1.0 + 1e-12); }
};

inline LumpedBound check_nonlinear_lumped_bound(const FeFunction& u, double k, double c1,
                                                const LumpedWeights& w)
{
    return {lumped_theta(u, k, w), c1 * k * l1_norm(u)};
}

inline LumpedBound check_nonlinear_lumped_bound(const FeFunction& u, double k, double c1)
{
    return check_nonlinear_lumped_bound(u, k, c1, lumped_weights(u.mesh()));
}

/// Minimum over elements where |u| reaches k of |{|L_h T_k u| >= k/2}| / |T|;
/// 1 when no element reaches k.
inline double subsimplex_fraction(const FeFunction& u, double k)
{
    detail::require_level(k);
    const Mesh& mesh = u.mesh();
    const FeFunction t = nodal_truncate(u, k);
    const std::size_t nc = mesh.vertices_per_element();
    double worst = 1.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto uv = u.element_values(e);
        double peak = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            peak = std::max(peak, std::abs(uv[i]));
        }
        if (peak < k) {
            continue;
        }
        auto tv = t.element_values(e);
        std::array<double, 3> neg{-tv[0], -tv[1], -tv[2]};
        const double frac =
            levelset::superlevel_measure_ge(mesh.dim(), std::span<const double>(tv.data(), nc), 1.0, 0.5 * k) +
            levelset::superlevel_measure_ge(mesh.dim(), std::span<const double>(neg.data(), nc), 1.0, 0.5 * k);
        worst = std::min(worst, frac);
    }
    return worst;
}

} // namespace l1heat
