#pragma once

#include "l1heat/errors.hpp"
#include "l1heat/levelset.hpp"
#include "l1heat/linalg.hpp"
#include "l1heat/mesh.hpp"
#include "l1heat/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

namespace l1heat {

/// P1 function given by its values at all mesh vertices.
///
/// Members of the homogeneous space carry exact zeros at boundary vertices;
/// every constructor and arithmetic operation restores that.
class FeFunction {
public:
    explicit FeFunction(const Mesh& mesh, bool homogeneous = true)
        : mesh_(&mesh), values_(mesh.num_vertices(), 0.0), homogeneous_(homogeneous)
    {
    }

    FeFunction(const Mesh& mesh, Vector nodal, bool homogeneous = true)
        : mesh_(&mesh), values_(std::move(nodal)), homogeneous_(homogeneous)
    {
        if (values_.size() != mesh.num_vertices()) {
            throw ValidationError("FeFunction: expected " + std::to_string(mesh.num_vertices()) +
                                  " nodal values, got " + std::to_string(values_.size()));
        }
        enforce_trace();
    }

    /// Homogeneous function from its values on the interior vertices (dof order).
    static FeFunction from_interior(const Mesh& mesh, std::span<const double> dofs)
    {
        if (dofs.size() != mesh.num_interior()) {
            throw ValidationError("FeFunction::from_interior: dof count mismatch");
        }
        FeFunction u(mesh, true);
        const auto iv = mesh.interior_vertices();
        for (std::size_t i = 0; i < iv.size(); ++i) {
            u.values_[iv[i]] = dofs[i];
        }
        return u;
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    bool homogeneous() const noexcept { return homogeneous_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t v) const { return values_[v]; }

    /// Sets a nodal value; boundary assignments are ignored for homogeneous functions.
    void set(std::size_t v, double value)
    {
        if (!(homogeneous_ && mesh_->is_boundary(v))) {
            values_[v] = value;
        }
    }

    Vector interior_values() const
    {
        const auto iv = mesh_->interior_vertices();
        Vector x(iv.size());
        for (std::size_t i = 0; i < iv.size(); ++i) {
            x[i] = values_[iv[i]];
        }
        return x;
    }

    /// Values at the vertices of element e, in local order.
    std::array<double, 3> element_values(std::size_t e) const
    {
        const auto& el = mesh_->element(e);
        std::array<double, 3> v{0.0, 0.0, 0.0};
        for (std::size_t i = 0; i < mesh_->vertices_per_element(); ++i) {
            v[i] = values_[el[i]];
        }
        return v;
    }

    /// Constant gradient on element e.
    Point gradient(std::size_t e) const
    {
        const auto& el = mesh_->element(e);
        const auto& g = mesh_->geometry(e);
        Point grad{0.0, 0.0};
        for (std::size_t i = 0; i < mesh_->vertices_per_element(); ++i) {
            grad = grad + values_[el[i]] * g.grad_lambda[i];
        }
        return grad;
    }

    double value(std::size_t e, const Barycentric& b) const
    {
        const auto& el = mesh_->element(e);
        double s = 0.0;
        for (std::size_t i = 0; i < mesh_->vertices_per_element(); ++i) {
            s += b[i] * values_[el[i]];
        }
        return s;
    }

    FeFunction& operator+=(const FeFunction& o)
    {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) {
            values_[i] += o.values_[i];
        }
        homogeneous_ = homogeneous_ && o.homogeneous_;
        return *this;
    }

    FeFunction& operator-=(const FeFunction& o)
    {
        check_same(o);
        for (std::size_t i = 0; i < values_.size(); ++i) {
            values_[i] -= o.values_[i];
        }
        homogeneous_ = homogeneous_ && o.homogeneous_;
        return *this;
    }

    FeFunction& operator*=(double s)
    {
        for (double& v : values_) {
            v *= s;
        }
        return *this;
    }

    friend FeFunction operator+(FeFunction a, const FeFunction& b) { return a += b; }
    friend FeFunction operator-(FeFunction a, const FeFunction& b) { return a -= b; }
    friend FeFunction operator*(double s, FeFunction a) { return a *= s; }

    void check_same(const FeFunction& o) const
    {
        if (mesh_ != o.mesh_) {
            throw ValidationError("FeFunction: operands live on different meshes");
        }
    }

private:
    void enforce_trace()
    {
        if (!homogeneous_) {
            return;
        }
        for (std::size_t v = 0; v < values_.size(); ++v) {
            if (mesh_->is_boundary(v)) {
                values_[v] = 0.0;
            }
        }
    }

    const Mesh* mesh_;
    Vector values_;
    bool homogeneous_;
};

/// Which vertices index the rows and columns of an assembled matrix.
enum class DofScope { interior, all_vertices };

namespace detail {

inline std::size_t dof_index(const Mesh& mesh, std::size_t v, DofScope scope)
{
    return scope == DofScope::all_vertices ? v : mesh.interior_index(v);
}

inline std::size_t dof_count(const Mesh& mesh, DofScope scope)
{
    return scope == DofScope::all_vertices ? mesh.num_vertices() : mesh.num_interior();
}

template <class Local>
SparseMatrix assemble(const Mesh& mesh, DofScope scope, Local&& local)
{
    const std::size_t nc = mesh.vertices_per_element();
    std::vector<Triplet> t;
    t.reserve(mesh.num_elements() * nc * nc);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        for (std::size_t i = 0; i < nc; ++i) {
            const std::size_t r = dof_index(mesh, el[i], scope);
            if (r == no_index) {
                continue;
            }
            for (std::size_t j = 0; j < nc; ++j) {
                const std::size_t c = dof_index(mesh, el[j], scope);
                if (c != no_index) {
                    t.push_back({r, c, local(e, i, j)});
                }
            }
        }
    }
    const std::size_t n = dof_count(mesh, scope);
    return SparseMatrix::from_triplets(n, n, std::move(t));
}

} // namespace detail

/// Stiffness matrix (grad phi_j, grad phi_i), exact elementwise.
inline SparseMatrix assemble_stiffness(const Mesh& mesh, DofScope scope = DofScope::interior)
{
    return detail::assemble(mesh, scope, [&mesh](std::size_t e, std::size_t i, std::size_t j) {
        const auto& g = mesh.geometry(e);
        return g.measure * dot(g.grad_lambda[i], g.grad_lambda[j]);
    });
}

/// Consistent mass matrix (phi_j, phi_i), exact: |T| (1 + delta_ij) / ((d+1)(d+2)).
inline SparseMatrix assemble_mass(const Mesh& mesh, DofScope scope = DofScope::interior)
{
    const double denom = static_cast<double>((mesh.dim() + 1) * (mesh.dim() + 2));
    return detail::assemble(mesh, scope, [&mesh, denom](std::size_t e, std::size_t i, std::size_t j) {
        return mesh.measure(e) * (i == j ? 2.0 : 1.0) / denom;
    });
}

/// Vertex weights omega_z = integral of phi_z.
struct LumpedWeights {
    /// One weight per mesh vertex.
    Vector weights;

    /// Weights of the interior vertices in dof order (the lumped mass diagonal).
    Vector interior(const Mesh& mesh) const
    {
        const auto iv = mesh.interior_vertices();
        Vector d(iv.size());
        for (std::size_t i = 0; i < iv.size(); ++i) {
            d[i] = weights[iv[i]];
        }
        return d;
    }
};

inline LumpedWeights lumped_weights(const Mesh& mesh)
{
    LumpedWeights w{Vector(mesh.num_vertices(), 0.0)};
    const double share = 1.0 / static_cast<double>(mesh.vertices_per_element());
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for (std::size_t i = 0; i < mesh.vertices_per_element(); ++i) {
            w.weights[mesh.element(e)[i]] += share * mesh.measure(e);
        }
    }
    return w;
}

/// Nodal interpolant of g. For the homogeneous space boundary values are set to
/// zero and g is not evaluated there.
template <class G>
FeFunction lagrange_interpolate(const Mesh& mesh, G&& g, bool homogeneous = true)
{
    Vector v(mesh.num_vertices(), 0.0);
    for (std::size_t z = 0; z < mesh.num_vertices(); ++z) {
        if (homogeneous && mesh.is_boundary(z)) {
            continue;
        }
        v[z] = g(mesh.vertex(z));
        if (!std::isfinite(v[z])) {
            throw ValidationError("lagrange_interpolate: non-finite value at vertex " + std::to_string(z));
        }
    }
    return FeFunction(mesh, std::move(v), homogeneous);
}

/// Load vector b_z = integral of g phi_z by (adaptive) quadrature.
template <class G>
Vector load_vector(const Mesh& mesh, G&& g, const QuadratureSpec& quad = {}, DofScope scope = DofScope::interior,
                   QuadratureReport* report = nullptr)
{
    Vector b(detail::dof_count(mesh, scope), 0.0);
    const std::size_t nc = mesh.vertices_per_element();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.element(e);
        bool any = false;
        for (std::size_t i = 0; i < nc; ++i) {
            any = any || detail::dof_index(mesh, el[i], scope) != no_index;
        }
        if (!any) {
            continue;
        }
        const auto loc = integrate_element<3>(
            mesh, e,
            [&g](const Point& x, const Barycentric& bary) {
                const double gx = g(x);
                return std::array<double, 3>{gx * bary[0], gx * bary[1], gx * bary[2]};
            },
            quad, report);
        for (std::size_t i = 0; i < nc; ++i) {
            const std::size_t r = detail::dof_index(mesh, el[i], scope);
            if (r != no_index) {
                b[r] += loc[i];
            }
        }
    }
    return b;
}

/// Solves M x = b with the consistent mass matrix (CG); throws on non-convergence.
inline Vector solve_mass(const SparseMatrix& mass, std::span<const double> b, double rel_tol = 1e-12)
{
    auto res = cg_solve(mass, b, {rel_tol, 0});
    if (!res.converged) {
        throw NumericalError("mass solve did not converge (residual " + std::to_string(res.relative_residual) + ")");
    }
    return std::move(res.x);
}

/// L2 projection onto V_h (homogeneous) or onto all of P1 (non-homogeneous).
template <class G>
FeFunction l2_project(const Mesh& mesh, G&& g, const QuadratureSpec& quad = {}, bool homogeneous = true,
                      QuadratureReport* report = nullptr)
{
    if (quad.order < 2) {
        throw ValidationError("l2_project: quadrature order must be at least 2");
    }
    const DofScope scope = homogeneous ? DofScope::interior : DofScope::all_vertices;
    const Vector b = load_vector(mesh, g, quad, scope, report);
    if (b.empty()) {
        return FeFunction(mesh, homogeneous);
    }
    const Vector x = solve_mass(assemble_mass(mesh, scope), b);
    if (homogeneous) {
        return FeFunction::from_interior(mesh, x);
    }
    return FeFunction(mesh, x, false);
}

/// Mass-lumped inner product sum_z u(z) v(z) omega_z over all vertices.
inline double lumped_inner(const FeFunction& u, const FeFunction& v, const LumpedWeights& w)
{
    u.check_same(v);
    double s = 0.0;
    for (std::size_t z = 0; z < w.weights.size(); ++z) {
        s += u[z] * v[z] * w.weights[z];
    }
    return s;
}

inline double lumped_inner(const FeFunction& u, const FeFunction& v)
{
    return lumped_inner(u, v, lumped_weights(u.mesh()));
}

/// Mass-lumped L^p norm (sum_z |u(z)|^p omega_z)^(1/p), p >= 1.
inline double lumped_norm(const FeFunction& u, double p, const LumpedWeights& w)
{
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw ValidationError("lumped_norm: p must lie in [1, inf)");
    }
    double s = 0.0;
    for (std::size_t z = 0; z < w.weights.size(); ++z) {
        s += std::pow(std::abs(u[z]), p) * w.weights[z];
    }
    return std::pow(s, 1.0 / p);
}

inline double lumped_norm(const FeFunction& u, double p) { return lumped_norm(u, p, lumped_weights(u.mesh())); }

/// Exact integral of |u| (linear clipping at sign changes).
inline double l1_norm(const FeFunction& u)
{
    const Mesh& m = u.mesh();
    double s = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto v = u.element_values(e);
        s += levelset::abs_integral(m.dim(), std::span<const double>(v.data(), m.vertices_per_element()),
                                    m.measure(e));
    }
    return s;
}

/// Exact (u, v) with the consistent mass.
inline double l2_inner(const FeFunction& u, const FeFunction& v)
{
    u.check_same(v);
    const Mesh& m = u.mesh();
    const std::size_t nc = m.vertices_per_element();
    const double denom = static_cast<double>((m.dim() + 1) * (m.dim() + 2));
    double s = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        const auto a = u.element_values(e);
        const auto b = v.element_values(e);
        double sa = 0.0, sb = 0.0, diag = 0.0;
        for (std::size_t i = 0; i < nc; ++i) {
            sa += a[i];
            sb += b[i];
            diag += a[i] * b[i];
        }
        s += m.measure(e) * (sa * sb + diag) / denom;
    }
    return s;
}

inline double l2_norm(const FeFunction& u) { return std::sqrt(std::max(0.0, l2_inner(u, u))); }

inline double h1_inner(const FeFunction& u, const FeFunction& v)
{
    u.check_same(v);
    const Mesh& m = u.mesh();
    double s = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        s += m.measure(e) * dot(u.gradient(e), v.gradient(e));
    }
    return s;
}

inline double h1_seminorm(const FeFunction& u) { return std::sqrt(h1_inner(u, u)); }

/// L^p norm by elementwise quadrature of |u|^p.
inline double lp_norm(const FeFunction& u, double p, const QuadratureSpec& quad = {.order = 4, .adaptive = false})
{
    if (!(p >= 1.0) || !std::isfinite(p)) {
        throw ValidationError("lp_norm: p must lie in [1, inf)");
    }
    if (p == 1.0) {
        return l1_norm(u);
    }
    const Mesh& m = u.mesh();
    double s = 0.0;
    for (std::size_t e = 0; e < m.num_elements(); ++e) {
        s += integrate_element<1>(
            m, e,
            [&](const Point&, const Barycentric& b) {
                return std::array<double, 1>{std::pow(std::abs(u.value(e, b)), p)};
            },
            quad)[0];
    }
    return std::pow(s, 1.0 / p);
}

struct FeNorms {
    double l1 = 0.0;
    double l2 = 0.0;
    double h1_semi = 0.0;
};

inline FeNorms norms(const FeFunction& u) { return {l1_norm(u), l2_norm(u), h1_seminorm(u)}; }

struct LumpingConstants {
    double c1 = 0.0;
    double c2 = 0.0;
    double cq = 0.0;
    std::size_t trials = 0;
    /// Smallest ||w||_{L^p_h} - ||w||_{L^p} seen, p = 1 and 2 (nonnegative in theory).
    double min_gap_l1 = 0.0;
    double min_gap_l2 = 0.0;
};

inline constexpr std::uint64_t default_seed = 0x5EED;

/// Random homogeneous FE function with i.i.d. uniform [-1, 1] interior values.
template <class Rng>
FeFunction random_fe_function(const Mesh& mesh, Rng& rng)
{
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector x(mesh.num_interior());
    for (double& v : x) {
        v = dist(rng);
    }
    return FeFunction::from_interior(mesh, x);
}

/// Sampled lumping constants over random homogeneous FE functions.
///
/// C_p = max ||w||_{L^p_h} / ||w||_{L^p}; C_Q = max |(v,w)_h - (v,w)| / (h ||v|| ||grad w||)
/// over independent random pairs.
inline LumpingConstants estimate_lumping_constants(const Mesh& mesh, std::size_t trials,
                                                   std::uint64_t seed = default_seed)
{
    if (trials < 1) {
        throw ValidationError("estimate_lumping_constants: trials must be positive");
    }
    LumpingConstants c;
    c.trials = trials;
    c.min_gap_l1 = c.min_gap_l2 = std::numeric_limits<double>::infinity();
    if (mesh.num_interior() == 0) {
        c.min_gap_l1 = c.min_gap_l2 = 0.0;
        return c;
    }
    std::mt19937_64 rng(seed);
    const LumpedWeights w = lumped_weights(mesh);
    for (std::size_t t = 0; t < trials; ++t) {
        const FeFunction v = random_fe_function(mesh, rng);
        const FeFunction u = random_fe_function(mesh, rng);
        const double l1 = l1_norm(v), l1h = lumped_norm(v, 1.0, w);
        const double l2 = l2_norm(v), l2h = lumped_norm(v, 2.0, w);
        if (l1 > 0.0) {
            c.c1 = std::max(c.c1, l1h / l1);
        }
        if (l2 > 0.0) {
            c.c2 = std::max(c.c2, l2h / l2);
        }
        c.min_gap_l1 = std::min(c.min_gap_l1, l1h - l1);
        c.min_gap_l2 = std::min(c.min_gap_l2, l2h - l2);
        const double denom = mesh.h() * l2_norm(u) * h1_seminorm(v);
        if (denom > 0.0) {
            c.cq = std::max(c.cq, std::abs(lumped_inner(u, v, w) - l2_inner(u, v)) / denom);
        }
    }
    return c;
}

/// Exact C_Q on V_h: largest generalized singular value of (D - M) with respect
/// to h^2 M (left) and A (right). Dense; intended for small meshes.
inline double exact_lumping_constant_cq(const Mesh& mesh)
{
    const std::size_t n = mesh.num_interior();
    if (n == 0) {
        return 0.0;
    }
    const DenseMatrix m = DenseMatrix::from_sparse(assemble_mass(mesh));
    const DenseMatrix a = DenseMatrix::from_sparse(assemble_stiffness(mesh));
    const Vector d = lumped_weights(mesh).interior(mesh);
    DenseMatrix diff(n, n);
    DenseMatrix ny(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            diff(i, j) = (i == j ? d[i] : 0.0) - m(i, j);
            ny(i, j) = mesh.h() * mesh.h() * m(i, j);
        }
    }
    // rows test v against ||v||, columns trial w against ||grad w||
    return max_generalized_singular_value(diff, a, ny);
}

/// Measured L1 stability ratio ||P_h g||_{L1} / ||g||_{L1} over a family of data.
struct ProjectionConstant {
    double cp = 0.0;
    QuadratureReport quadrature;
};

/// Largest ratio ||P_h g||_{L1} / ||g||_{L1} over normalized bumps of
/// shrinking width centred at vertices and element barycentres.
inline ProjectionConstant estimate_projection_constant(const Mesh& mesh, const QuadratureSpec& quad = {})
{
    ProjectionConstant out;
    if (mesh.num_interior() == 0) {
        return out;
    }
    const int d = mesh.dim();
    // (1 - r^2)^3 has integral 32/35 on the unit interval and pi/4 on the unit disc
    const double unit_mass = d == 1 ? 32.0 / 35.0 : std::numbers::pi / 4.0;
    std::vector<Point> centres;
    const auto iv = mesh.interior_vertices();
    centres.push_back(mesh.vertex(iv[iv.size() / 2]));
    const std::size_t mid_e = mesh.num_elements() / 2;
    centres.push_back(mesh.map_to_physical(mid_e, {1.0 / (d + 1), 1.0 / (d + 1), d == 2 ? 1.0 / 3 : 0.0}));
    const double h = mesh.h();
    const SparseMatrix mass = assemble_mass(mesh);
    for (const Point& c : centres) {
        for (double width : {0.25 * h, 0.5 * h, h, 2.0 * h}) {
            const double scale = 1.0 / (unit_mass * std::pow(width, d));
            const auto g = [&](const Point& x) {
                const double r2 = dot(x - c, x - c) / (width * width);
                return r2 < 1.0 ? scale * std::pow(1.0 - r2, 3) : 0.0;
            };
            const double mass_g = integrate(mesh, g, quad, &out.quadrature);
            if (mass_g <= 0.0) {
                continue;
            }
            const Vector x = solve_mass(mass, load_vector(mesh, g, quad, DofScope::interior, &out.quadrature));
            out.cp = std::max(out.cp, l1_norm(FeFunction::from_interior(mesh, x)) / mass_g);
        }
    }
    return out;
}

/// Locates points in a mesh with a uniform bucket grid over element bounding boxes.
class PointLocator {
public:
    explicit PointLocator(const Mesh& mesh) : mesh_(&mesh)
    {
        lo_ = hi_ = mesh.vertex(0);
        for (const Point& p : mesh.vertices()) {
            for (int k = 0; k < 2; ++k) {
                lo_[k] = std::min(lo_[k], p[k]);
                hi_[k] = std::max(hi_[k], p[k]);
            }
        }
        const double n = std::max(1.0, std::ceil(std::pow(static_cast<double>(mesh.num_elements()),
                                                          1.0 / mesh.dim())));
        cells_[0] = static_cast<std::size_t>(n);
        cells_[1] = mesh.dim() == 2 ? static_cast<std::size_t>(n) : 1;
        buckets_.assign(cells_[0] * cells_[1], {});
        for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
            Point blo = mesh.vertex(mesh.element(e)[0]);
            Point bhi = blo;
            for (std::size_t i = 1; i < mesh.vertices_per_element(); ++i) {
                const Point& p = mesh.vertex(mesh.element(e)[i]);
                for (int k = 0; k < 2; ++k) {
                    blo[k] = std::min(blo[k], p[k]);
                    bhi[k] = std::max(bhi[k], p[k]);
                }
            }
            const auto a = cell_of(blo);
            const auto b = cell_of(bhi);
            for (std::size_t j = a[1]; j <= b[1]; ++j) {
                for (std::size_t i = a[0]; i <= b[0]; ++i) {
                    buckets_[j * cells_[0] + i].push_back(e);
                }
            }
        }
    }

    /// Element containing x (closed, with slack tol) and its barycentric coordinates.
    std::pair<std::size_t, Barycentric> locate(const Point& x, double tol = 1e-12) const
    {
        const auto c = cell_of(x);
        std::size_t best = no_index;
        Barycentric best_b{};
        double best_min = -std::numeric_limits<double>::infinity();
        for (std::size_t e : buckets_[c[1] * cells_[0] + c[0]]) {
            const Barycentric b = mesh_->barycentric(e, x);
            double mn = b[0];
            for (std::size_t i = 1; i < mesh_->vertices_per_element(); ++i) {
                mn = std::min(mn, b[i]);
            }
            if (mn > best_min) {
                best_min = mn;
                best = e;
                best_b = b;
            }
        }
        if (best == no_index || best_min < -tol) {
            throw ValidationError("PointLocator: point outside the mesh");
        }
        return {best, best_b};
    }

private:
    std::array<std::size_t, 2> cell_of(const Point& x) const
    {
        std::array<std::size_t, 2> c{0, 0};
        for (int k = 0; k < 2; ++k) {
            const double span = hi_[k] - lo_[k];
            if (span <= 0.0) {
                continue;
            }
            const double t = (x[k] - lo_[k]) / span * static_cast<double>(cells_[k]);
            c[k] = static_cast<std::size_t>(std::clamp(t, 0.0, static_cast<double>(cells_[k] - 1)));
        }
        return c;
    }

    const Mesh* mesh_;
    Point lo_{}, hi_{};
    std::array<std::size_t, 2> cells_{1, 1};
    std::vector<std::vector<std::size_t>> buckets_;
};

/// Nodal interpolation of u (any mesh) onto the vertices of another mesh covering
/// the same domain.
inline FeFunction interpolate_onto(const FeFunction& u, const Mesh& target, const PointLocator& locator)
{
    Vector v(target.num_vertices(), 0.0);
    for (std::size_t z = 0; z < target.num_vertices(); ++z) {
        if (u.homogeneous() && target.is_boundary(z)) {
            continue;
        }
        const auto [e, b] = locator.locate(target.vertex(z), 1e-9);
        v[z] = u.value(e, b);
    }
    return FeFunction(target, std::move(v), u.homogeneous());
}

inline FeFunction interpolate_onto(const FeFunction& u, const Mesh& target)
{
    return interpolate_onto(u, target, PointLocator(u.mesh()));
}

} // namespace l1heat
