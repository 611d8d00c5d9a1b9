#pragma once

#include "l1heat/errors.hpp"
#include "l1heat/fespace.hpp"
#include "l1heat/linalg.hpp"
#include "l1heat/mesh.hpp"
#include "l1heat/quadrature.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace l1heat {

/// Grid 0 = t_0 < ... < t_N = T.
class TimePartition {
public:
    TimePartition() = default;

    /// Validates strict monotonicity and t_0 = 0.
    explicit TimePartition(std::vector<double> nodes) : nodes_(std::move(nodes))
    {
        if (nodes_.size() < 2 || nodes_.front() != 0.0) {
            throw ValidationError("TimePartition: need at least two nodes starting at 0");
        }
        for (std::size_t n = 1; n < nodes_.size(); ++n) {
            if (!(nodes_[n] > nodes_[n - 1]) || !std::isfinite(nodes_[n])) {
                throw ValidationError("TimePartition: nodes must be strictly increasing and finite");
            }
        }
    }

    std::size_t steps() const noexcept { return nodes_.empty() ? 0 : nodes_.size() - 1; }
    double final_time() const { return nodes_.back(); }
    double node(std::size_t n) const { return nodes_[n]; }
    std::span<const double> nodes() const noexcept { return nodes_; }

    /// tau_n = t_n - t_{n-1}, n = 1..N.
    double tau(std::size_t n) const { return nodes_[n] - nodes_[n - 1]; }

    double min_tau() const
    {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t n = 1; n <= steps(); ++n) {
            m = std::min(m, tau(n));
        }
        return m;
    }

    double max_tau() const
    {
        double m = 0.0;
        for (std::size_t n = 1; n <= steps(); ++n) {
            m = std::max(m, tau(n));
        }
        return m;
    }

private:
    std::vector<double> nodes_;
};

/// Step-size grading: uniform, or geometric with tau_{n+1} = ratio * tau_n.
struct Grading {
    enum class Kind { uniform, geometric } kind = Kind::uniform;
    double ratio = 1.0;

    static Grading uniform() { return {}; }
    static Grading geometric(double r) { return {Kind::geometric, r}; }
};

inline TimePartition build_partition(double t_final, std::size_t steps, Grading grading = {})
{
    if (!(t_final > 0.0) || !std::isfinite(t_final)) {
        throw ValidationError("build_partition: final time must be positive");
    }
    if (steps < 1) {
        throw ValidationError("build_partition: need at least one step");
    }
    std::vector<double> t(steps + 1, 0.0);
    if (grading.kind == Grading::Kind::uniform) {
        for (std::size_t n = 1; n <= steps; ++n) {
            t[n] = t_final * static_cast<double>(n) / static_cast<double>(steps);
        }
    } else {
        const double r = grading.ratio;
        if (!(r > 0.0) || !std::isfinite(r)) {
            throw ValidationError("build_partition: geometric ratio must be positive");
        }
        double total = 0.0, step = 1.0;
        std::vector<double> raw(steps);
        for (std::size_t n = 0; n < steps; ++n) {
            raw[n] = step;
            total += step;
            step *= r;
        }
        double acc = 0.0;
        for (std::size_t n = 1; n <= steps; ++n) {
            acc += raw[n - 1];
            t[n] = t_final * acc / total;
        }
    }
    t[steps] = t_final;
    return TimePartition(std::move(t));
}

/// Element of X_h^dt: one FE function per time node, piecewise constant in time.
class SpaceTimeFeFunction {
public:
    SpaceTimeFeFunction(const Mesh& mesh, TimePartition partition)
        : mesh_(&mesh), partition_(std::move(partition))
    {
        slices_.reserve(partition_.steps() + 1);
        for (std::size_t n = 0; n <= partition_.steps(); ++n) {
            slices_.emplace_back(mesh);
        }
    }

    SpaceTimeFeFunction(const Mesh& mesh, TimePartition partition, std::vector<FeFunction> slices)
        : mesh_(&mesh), partition_(std::move(partition)), slices_(std::move(slices))
    {
        if (slices_.size() != partition_.steps() + 1) {
            throw ValidationError("SpaceTimeFeFunction: need one slice per time node");
        }
        for (const auto& s : slices_) {
            if (&s.mesh() != mesh_) {
                throw ValidationError("SpaceTimeFeFunction: slices must share the mesh");
            }
        }
    }

    /// From stacked interior coefficients (block n = slice n).
    static SpaceTimeFeFunction from_stacked(const Mesh& mesh, TimePartition partition, std::span<const double> x)
    {
        const std::size_t m = mesh.num_interior();
        if (x.size() != m * (partition.steps() + 1)) {
            throw ValidationError("SpaceTimeFeFunction::from_stacked: size mismatch");
        }
        std::vector<FeFunction> s;
        for (std::size_t n = 0; n <= partition.steps(); ++n) {
            s.push_back(FeFunction::from_interior(mesh, x.subspan(n * m, m)));
        }
        return SpaceTimeFeFunction(mesh, std::move(partition), std::move(s));
    }

    const Mesh& mesh() const noexcept { return *mesh_; }
    const TimePartition& partition() const noexcept { return partition_; }
    std::size_t steps() const noexcept { return partition_.steps(); }

    const FeFunction& operator[](std::size_t n) const { return slices_[n]; }
    FeFunction& operator[](std::size_t n) { return slices_[n]; }
    std::span<const FeFunction> slices() const noexcept { return slices_; }

    Vector stacked() const
    {
        Vector x;
        x.reserve(mesh_->num_interior() * slices_.size());
        for (const auto& s : slices_) {
            const Vector v = s.interior_values();
            x.insert(x.end(), v.begin(), v.end());
        }
        return x;
    }

    /// Value of the piecewise-constant function: w^0 at t = 0, w^n on (t_{n-1}, t_n].
    const FeFunction& at(double t) const { return slices_[interval_of(t)]; }

    /// Jump w^n - w^{n-1}, n = 1..N.
    FeFunction jump(std::size_t n) const
    {
        if (n < 1 || n > steps()) {
            throw ValidationError("jump: index out of range");
        }
        return slices_[n] - slices_[n - 1];
    }

    /// Continuous piecewise-linear interpolant through (t_n, w^n).
    FeFunction reconstruction(double t) const
    {
        const std::size_t n = interval_of(t);
        if (n == 0) {
            return slices_[0];
        }
        const double s = (t - partition_.node(n - 1)) / partition_.tau(n);
        if (s == 1.0) {
            return slices_[n];
        }
        return slices_[n - 1] + s * jump(n);
    }

private:
    std::size_t interval_of(double t) const
    {
        const auto nodes = partition_.nodes();
        if (!(t >= 0.0) || t > nodes.back()) {
            throw ValidationError("SpaceTimeFeFunction: time " + std::to_string(t) + " outside [0, T]");
        }
        if (t == 0.0) {
            return 0;
        }
        const auto it = std::lower_bound(nodes.begin(), nodes.end(), t);
        return static_cast<std::size_t>(it - nodes.begin());
    }

    const Mesh* mesh_;
    TimePartition partition_;
    std::vector<FeFunction> slices_;
};

using SpaceFunction = std::function<double(const Point&)>;
using SpaceTimeFunction = std::function<double(double, const Point&)>;
using SpaceTimeGradient = std::function<Point(double, const Point&)>;

/// f(t, x) = psi(t) g(x) with a closed-form time mean of psi.
struct SeparableRhs {
    /// (1 / (b - a)) * integral of psi over [a, b]
    std::function<double(double, double)> time_mean;
    SpaceFunction space;
};

/// Initial datum and right-hand side of u_t - Laplace u = f with u = 0 on the boundary.
struct ProblemData {
    std::string name = "custom";
    /// Empty means u_0 = 0.
    SpaceFunction u0;
    /// Empty means f = 0. Always set when the right-hand side is nonzero.
    SpaceTimeFunction f;
    /// Optional fast path for the time averages of f.
    std::optional<SeparableRhs> separable;
    /// Closed-form ||u_0||_{L1}, when known.
    std::optional<double> u0_l1;
    /// Closed-form T -> ||f||_{L1(Q_T)}, when known.
    std::function<double(double)> f_l1;
    /// Exact solution and its spatial gradient, when known.
    SpaceTimeFunction exact;
    SpaceTimeGradient exact_gradient;
    /// Point singularity of the data, used to tell quadrature where to refine.
    std::optional<Point> singular_point;

    bool has_rhs() const noexcept { return static_cast<bool>(f) || separable.has_value(); }
};

/// Per-step load vectors b^n_z = integral of f^n phi_z, with f^n the time mean over I_n.
struct RhsLoads {
    /// loads[n - 1] for n = 1..N; empty vectors when f = 0.
    std::vector<Vector> loads;
    QuadratureReport quadrature;
};

inline RhsLoads average_rhs(const ProblemData& data, const TimePartition& partition, const Mesh& mesh,
                            const QuadratureSpec& space_quad = {},
                            const QuadratureSpec& time_quad = {.order = 2, .adaptive = true, .max_depth = 20,
                                                               .abs_tol = 1e-12})
{
    RhsLoads out;
    const QuadratureSpec sq = focused(space_quad, data.singular_point);
    const std::size_t N = partition.steps();
    const std::size_t m = mesh.num_interior();
    if (!data.has_rhs()) {
        out.loads.assign(N, Vector(m, 0.0));
        return out;
    }
    if (data.separable) {
        const Vector g = load_vector(mesh, data.separable->space, sq, DofScope::interior, &out.quadrature);
        for (std::size_t n = 1; n <= N; ++n) {
            const double mean = data.separable->time_mean(partition.node(n - 1), partition.node(n));
            Vector b = g;
            for (double& v : b) {
                v *= mean;
            }
            out.loads.push_back(std::move(b));
        }
        return out;
    }
    for (std::size_t n = 1; n <= N; ++n) {
        const double a = partition.node(n - 1), b = partition.node(n);
        const auto fn = [&](const Point& x) {
            return integrate_interval([&](double t) { return data.f(t, x); }, a, b, time_quad.order, time_quad,
                                      &out.quadrature) /
                   (b - a);
        };
        out.loads.push_back(load_vector(mesh, fn, sq, DofScope::interior, &out.quadrature));
    }
    return out;
}

/// ||f||_{L1(Q_T)}: closed form when the data provides it, quadrature otherwise.
inline double rhs_l1_norm(const ProblemData& data, double t_final, const Mesh& mesh,
                          const QuadratureSpec& quad = {}, QuadratureReport* report = nullptr)
{
    if (!data.has_rhs()) {
        return 0.0;
    }
    if (data.f_l1) {
        return data.f_l1(t_final);
    }
    const QuadratureSpec tq{.order = 2, .adaptive = true, .max_depth = 20, .abs_tol = 1e-12};
    return integrate(
        mesh,
        [&](const Point& x) {
            return integrate_interval([&](double t) { return std::abs(data.f(t, x)); }, 0.0, t_final, 2, tq,
                                      report);
        },
        focused(quad, data.singular_point), report);
}

/// ||u_0||_{L1}: closed form when provided, quadrature otherwise.
inline double initial_l1_norm(const ProblemData& data, const Mesh& mesh, const QuadratureSpec& quad = {},
                              QuadratureReport* report = nullptr)
{
    if (!data.u0) {
        return 0.0;
    }
    if (data.u0_l1) {
        return *data.u0_l1;
    }
    return integrate(mesh, [&](const Point& x) { return std::abs(data.u0(x)); }, focused(quad, data.singular_point),
                     report);
}

struct CflCheck {
    bool ok = true;
    /// Largest admissible h^2: min tau / (4 C_Q^2).
    double bound = 0.0;
    double h2 = 0.0;
    double cq = 0.0;
    double min_tau = 0.0;
};

/// h^2 <= min tau_n / (4 C_Q^2).
inline CflCheck check_reverse_cfl(double h, const TimePartition& partition, double cq)
{
    if (!(cq > 0.0)) {
        throw ValidationError("check_reverse_cfl: C_Q must be positive");
    }
    CflCheck c;
    c.cq = cq;
    c.h2 = h * h;
    c.min_tau = partition.min_tau();
    c.bound = c.min_tau / (4.0 * cq * cq);
    c.ok = c.h2 <= c.bound;
    return c;
}

enum class CflPolicy { enforce, warn };

/// Source of the lumping constant used in the reverse CFL check.
struct CqSource {
    enum class Kind { measured, exact, fixed } kind = Kind::measured;
    double value = 0.0;

    static CqSource measured() { return {}; }
    static CqSource exact() { return {Kind::exact, 0.0}; }
    static CqSource fixed(double v) { return {Kind::fixed, v}; }
};

struct SchemeConfig {
    double t_final = 1.0;
    std::size_t steps = 1;
    Grading grading;
    CgOptions cg{1e-10, 0};
    QuadratureSpec quad;
    QuadratureSpec time_quad{.order = 2, .adaptive = true, .max_depth = 20, .abs_tol = 1e-12};
    CflPolicy cfl = CflPolicy::warn;
    CqSource cq;
    std::size_t cq_trials = 1000;
    std::uint64_t seed = default_seed;

    void validate() const
    {
        if (!(cg.rel_tol > 0.0) || !(quad.abs_tol > 0.0) || !(time_quad.abs_tol > 0.0)) {
            throw ValidationError("SchemeConfig: tolerances must be positive");
        }
        if (cq.kind == CqSource::Kind::fixed && !(cq.value > 0.0)) {
            throw ValidationError("SchemeConfig: fixed C_Q must be positive");
        }
        if (cq_trials < 1) {
            throw ValidationError("SchemeConfig: cq_trials must be positive");
        }
    }
};

inline double resolve_cq(const Mesh& mesh, const SchemeConfig& config)
{
    switch (config.cq.kind) {
    case CqSource::Kind::fixed:
        return config.cq.value;
    case CqSource::Kind::exact:
        return exact_lumping_constant_cq(mesh);
    case CqSource::Kind::measured:
        break;
    }
    return estimate_lumping_constants(mesh, config.cq_trials, config.seed).cq;
}

/// u_h^0 = P_h u_0.
inline FeFunction initial_state(const ProblemData& data, const Mesh& mesh, const QuadratureSpec& quad = {},
                                QuadratureReport* report = nullptr)
{
    if (!data.u0) {
        return FeFunction(mesh);
    }
    return l2_project(mesh, data.u0, focused(quad, data.singular_point), true, report);
}

/// Solves (D / tau + A) U = (D / tau) U_prev + b on the interior vertices.
/// System matrices are cached per distinct tau.
class ImplicitEulerStepper {
public:
    explicit ImplicitEulerStepper(const Mesh& mesh, CgOptions cg = {})
        : mesh_(&mesh), stiffness_(assemble_stiffness(mesh)), lumped_(lumped_weights(mesh).interior(mesh)), cg_(cg)
    {
    }

    const SparseMatrix& stiffness() const noexcept { return stiffness_; }
    std::span<const double> lumped_diagonal() const noexcept { return lumped_; }
    std::size_t last_iterations() const noexcept { return last_iterations_; }

    FeFunction step(const FeFunction& u_prev, double tau, std::span<const double> load)
    {
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw ValidationError("step: tau must be positive and finite");
        }
        if (&u_prev.mesh() != mesh_) {
            throw ValidationError("step: previous state lives on a different mesh");
        }
        const std::size_t m = mesh_->num_interior();
        if (!load.empty() && load.size() != m) {
            throw ValidationError("step: load vector has wrong size");
        }
        if (m == 0) {
            return FeFunction(*mesh_);
        }
        const Vector prev = u_prev.interior_values();
        Vector rhs(m);
        for (std::size_t i = 0; i < m; ++i) {
            rhs[i] = lumped_[i] / tau * prev[i] + (load.empty() ? 0.0 : load[i]);
        }
        auto it = systems_.find(tau);
        if (it == systems_.end()) {
            it = systems_.emplace(tau, stiffness_.scaled_plus_diagonal(1.0, lumped_, 1.0 / tau)).first;
        }
        auto res = cg_solve(it->second, rhs, cg_, prev);
        last_iterations_ = res.iterations;
        if (!res.converged) {
            throw NumericalError("implicit Euler step: CG did not converge (relative residual " +
                                 std::to_string(res.relative_residual) + ")");
        }
        return FeFunction::from_interior(*mesh_, res.x);
    }

private:
    const Mesh* mesh_;
    SparseMatrix stiffness_;
    Vector lumped_;
    CgOptions cg_;
    std::map<double, SparseMatrix> systems_;
    std::size_t last_iterations_ = 0;
};

inline FeFunction step(const FeFunction& u_prev, double tau, std::span<const double> load, CgOptions cg = {})
{
    ImplicitEulerStepper s(u_prev.mesh(), cg);
    return s.step(u_prev, tau, load);
}

struct SolveResult {
    SpaceTimeFeFunction u;
    CflCheck cfl;
    QuadratureReport quadrature;
    std::size_t cg_iterations = 0;
    std::vector<std::string> warnings;
};

/// Mass-lumped implicit Euler trajectory u^0 = P_h u_0, u^1, ..., u^N.
inline SolveResult solve(const Mesh& mesh, const ProblemData& data, const SchemeConfig& config)
{
    config.validate();
    TimePartition partition = build_partition(config.t_final, config.steps, config.grading);
    const CflCheck cfl = check_reverse_cfl(mesh.h(), partition, resolve_cq(mesh, config));
    std::vector<std::string> warnings;
    if (!cfl.ok) {
        const std::string msg = "reverse CFL condition violated: h^2 = " + std::to_string(cfl.h2) +
                                " > min tau / (4 C_Q^2) = " + std::to_string(cfl.bound) +
                                " (C_Q = " + std::to_string(cfl.cq) + ")";
        if (config.cfl == CflPolicy::enforce) {
            throw CflViolation(msg);
        }
        warnings.push_back(msg);
    }
    QuadratureReport quad_report;
    const RhsLoads rhs = average_rhs(data, partition, mesh, config.quad, config.time_quad);
    quad_report.merge(rhs.quadrature);

    std::vector<FeFunction> slices;
    slices.reserve(partition.steps() + 1);
    slices.push_back(initial_state(data, mesh, config.quad, &quad_report));
    ImplicitEulerStepper stepper(mesh, config.cg);
    std::size_t iterations = 0;
    for (std::size_t n = 1; n <= partition.steps(); ++n) {
        try {
            slices.push_back(stepper.step(slices.back(), partition.tau(n), rhs.loads[n - 1]));
        } catch (const NumericalError& e) {
            throw NumericalError("step " + std::to_string(n) + ": " + e.what());
        }
        iterations += stepper.last_iterations();
    }
    if (!quad_report.clean()) {
        warnings.push_back("quadrature hit the subdivision limit in " +
                           std::to_string(quad_report.depth_limited_cells) + " cells (estimated error " +
                           std::to_string(quad_report.estimated_error) + ")");
    }
    return {SpaceTimeFeFunction(mesh, std::move(partition), std::move(slices)), cfl, quad_report, iterations,
            std::move(warnings)};
}

/// Discrete dual norm ||g||_{-1,h}^2 = l^T A^{-1} l with l = M g on the interior vertices.
class DualNorm {
public:
    explicit DualNorm(const Mesh& mesh)
        : mass_(assemble_mass(mesh)), stiffness_(assemble_stiffness(mesh))
    {
    }

    double squared(const FeFunction& g) const
    {
        const Vector x = g.interior_values();
        if (x.empty()) {
            return 0.0;
        }
        const Vector l = spmv(mass_, x);
        const auto res = cg_solve(stiffness_, l, {1e-13, 0});
        if (!res.converged) {
            throw NumericalError("dual norm: stiffness solve did not converge");
        }
        return std::max(0.0, dot(l, res.x));
    }

private:
    SparseMatrix mass_;
    SparseMatrix stiffness_;
};

/// ||w||_X^2 = sum tau_n |w^n|_1^2 + sum ||[w]||_{-1,h}^2 / tau_n + ||w^N||^2 + sum ||[w]||^2.
inline double xnorm(const SpaceTimeFeFunction& w)
{
    const DualNorm dual(w.mesh());
    const auto& p = w.partition();
    double s = 0.0;
    for (std::size_t n = 1; n <= w.steps(); ++n) {
        const FeFunction j = w.jump(n);
        s += p.tau(n) * h1_inner(w[n], w[n]);
        s += dual.squared(j) / p.tau(n);
        s += l2_inner(j, j);
    }
    s += l2_inner(w[w.steps()], w[w.steps()]);
    return std::sqrt(std::max(0.0, s));
}

/// ||w||_Y^2 = ||w^0||^2 + sum tau_n |w^n|_1^2.
inline double ynorm(const SpaceTimeFeFunction& w)
{
    const auto& p = w.partition();
    double s = l2_inner(w[0], w[0]);
    for (std::size_t n = 1; n <= w.steps(); ++n) {
        s += p.tau(n) * h1_inner(w[n], w[n]);
    }
    return std::sqrt(std::max(0.0, s));
}

inline constexpr std::size_t spacetime_dof_cap = 2000;

/// Matrices over stacked interior coefficients (w^0, ..., w^N); rows of B are
/// indexed by the test function, columns by the trial function.
struct SpaceTimeForms {
    DenseMatrix b;
    DenseMatrix nx;
    DenseMatrix ny;
};

enum class JumpProduct { lumped, consistent };

inline SpaceTimeForms assemble_spacetime_forms(const Mesh& mesh, const TimePartition& partition,
                                               JumpProduct jump = JumpProduct::lumped)
{
    const std::size_t m = mesh.num_interior();
    const std::size_t N = partition.steps();
    const std::size_t dof = m * (N + 1);
    if (dof > spacetime_dof_cap) {
        throw SizeLimitError("space-time forms: " + std::to_string(dof) + " unknowns exceed the cap of " +
                             std::to_string(spacetime_dof_cap));
    }
    if (m == 0) {
        throw ValidationError("space-time forms: mesh has no interior vertices");
    }
    const DenseMatrix mass = DenseMatrix::from_sparse(assemble_mass(mesh));
    const DenseMatrix a = DenseMatrix::from_sparse(assemble_stiffness(mesh));
    const Vector d = lumped_weights(mesh).interior(mesh);
    DenseMatrix jm(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            jm(i, j) = jump == JumpProduct::lumped ? (i == j ? d[i] : 0.0) : mass(i, j);
        }
    }
    // K = M A^{-1} M realizes the discrete dual norm.
    const DenseMatrix la = cholesky(a);
    DenseMatrix ainv_m = mass;
    lower_solve_in_place(la, ainv_m);
    const DenseMatrix k = ainv_m.transposed() * ainv_m;

    SpaceTimeForms f{DenseMatrix(dof, dof), DenseMatrix(dof, dof), DenseMatrix(dof, dof)};
    const auto add = [m](DenseMatrix& target, std::size_t bi, std::size_t bj, const DenseMatrix& blk, double s) {
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                target(bi * m + i, bj * m + j) += s * blk(i, j);
            }
        }
    };
    add(f.b, 0, 0, mass, 1.0);
    add(f.ny, 0, 0, mass, 1.0);
    for (std::size_t n = 1; n <= N; ++n) {
        const double tau = partition.tau(n);
        add(f.b, n, n, a, tau);
        add(f.b, n, n, jm, 1.0);
        add(f.b, n, n - 1, jm, -1.0);
        add(f.ny, n, n, a, tau);
        add(f.nx, n, n, a, tau);
        // E_n^T (K / tau + M) E_n with E_n v = v^n - v^{n-1}
        add(f.nx, n, n, k, 1.0 / tau);
        add(f.nx, n - 1, n - 1, k, 1.0 / tau);
        add(f.nx, n, n - 1, k, -1.0 / tau);
        add(f.nx, n - 1, n, k, -1.0 / tau);
        add(f.nx, n, n, mass, 1.0);
        add(f.nx, n - 1, n - 1, mass, 1.0);
        add(f.nx, n, n - 1, mass, -1.0);
        add(f.nx, n - 1, n, mass, -1.0);
    }
    add(f.nx, N, N, mass, 1.0);
    return f;
}

} // namespace l1heat
