#include "l1heat/scheme.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace l1heat;

namespace {

constexpr double pi = std::numbers::pi;

ProblemData sine_data()
{
    ProblemData d;
    d.u0 = [](const Point& x) { return std::sin(pi * x[0]); };
    d.exact = [](double t, const Point& x) { return std::exp(-pi * pi * t) * std::sin(pi * x[0]); };
    return d;
}

SpaceTimeFeFunction random_trajectory(const Mesh& m, const TimePartition& p, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1, 1);
    Vector x(m.num_interior() * (p.steps() + 1));
    for (double& v : x) {
        v = u(rng);
    }
    return SpaceTimeFeFunction::from_stacked(m, p, x);
}

} // namespace

TEST(Partition, Examples)
{
    const auto u = build_partition(1.0, 4);
    ASSERT_EQ(u.steps(), 4u);
    for (std::size_t n = 1; n <= 4; ++n) {
        EXPECT_DOUBLE_EQ(u.tau(n), 0.25);
    }
    const auto g = build_partition(1.0, 2, Grading::geometric(2.0));
    EXPECT_NEAR(g.tau(1), 1.0 / 3, 1e-15);
    EXPECT_NEAR(g.tau(2), 2.0 / 3, 1e-15);
    const auto one = build_partition(0.7, 1);
    EXPECT_EQ(one.steps(), 1u);
    EXPECT_EQ(one.tau(1), 0.7);
    EXPECT_EQ(g.final_time(), 1.0);
}

TEST(Partition, RejectsInvalidInput)
{
    EXPECT_THROW(build_partition(1.0, 0), ValidationError);
    EXPECT_THROW(build_partition(-1.0, 3), ValidationError);
    EXPECT_THROW(build_partition(1.0, 3, Grading::geometric(0.0)), ValidationError);
    EXPECT_THROW(TimePartition({0.0, 0.5, 0.5}), ValidationError);
    EXPECT_THROW(TimePartition({0.1, 0.5}), ValidationError);
}

TEST(Partition, StepsSumToFinalTime)
{
    for (double r : {0.5, 1.0, 1.3, 3.0}) {
        const auto p = build_partition(2.5, 17, Grading::geometric(r));
        double s = 0.0;
        for (std::size_t n = 1; n <= p.steps(); ++n) {
            s += p.tau(n);
        }
        EXPECT_NEAR(s, 2.5, 1e-13);
    }
}

TEST(AverageRhs, ZeroAndConstant)
{
    const Mesh m = generate_interval_mesh(4);
    const auto p = build_partition(1.0, 3);
    ProblemData zero;
    for (const auto& b : average_rhs(zero, p, m).loads) {
        EXPECT_EQ(b, Vector(3, 0.0));
    }
    ProblemData one;
    one.f = [](double, const Point&) { return 1.0; };
    const auto r = average_rhs(one, p, m);
    ASSERT_EQ(r.loads.size(), 3u);
    for (const auto& b : r.loads) {
        for (double v : b) {
            EXPECT_NEAR(v, 0.25, 1e-14);
        }
    }
}

TEST(AverageRhs, TimeIndependentLoadsAreIdentical)
{
    const Mesh m = generate_unit_square_mesh(4);
    const auto p = build_partition(1.0, 5, Grading::geometric(1.7));
    ProblemData d;
    d.f = [](double, const Point& x) { return x[0] * x[0] + std::cos(x[1]); };
    const auto r = average_rhs(d, p, m);
    for (const auto& b : r.loads) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            EXPECT_NEAR(b[i], r.loads[0][i], 1e-14);
        }
    }
}

TEST(AverageRhs, TimeMeanOfLinearInTime)
{
    // f = t: the mean over I_n is the midpoint
    const Mesh m = generate_interval_mesh(4);
    const auto p = build_partition(1.0, 4);
    ProblemData d;
    d.f = [](double t, const Point&) { return t; };
    const auto r = average_rhs(d, p, m);
    for (std::size_t n = 1; n <= 4; ++n) {
        EXPECT_NEAR(r.loads[n - 1][0], 0.25 * (static_cast<double>(n) - 0.5) / 4.0, 1e-14);
    }
}

TEST(AverageRhs, SeparablePathMatchesGeneralPath)
{
    const Mesh m = generate_unit_square_mesh(4);
    const auto p = build_partition(1.0, 3);
    ProblemData a;
    a.f = [](double t, const Point& x) { return t * t * x[0]; };
    ProblemData b = a;
    b.separable = SeparableRhs{[](double s, double e) { return (e * e * e - s * s * s) / (3 * (e - s)); },
                               [](const Point& x) { return x[0]; }};
    const auto ra = average_rhs(a, p, m), rb = average_rhs(b, p, m);
    for (std::size_t n = 0; n < 3; ++n) {
        for (std::size_t i = 0; i < ra.loads[n].size(); ++i) {
            EXPECT_NEAR(ra.loads[n][i], rb.loads[n][i], 1e-13);
        }
    }
}

TEST(ReverseCfl, Examples)
{
    const auto a = check_reverse_cfl(0.1, TimePartition({0.0, 0.05, 0.1}), 1.0);
    EXPECT_TRUE(a.ok);
    EXPECT_NEAR(a.bound, 0.0125, 1e-15);
    const auto b = check_reverse_cfl(0.1, TimePartition({0.0, 0.01, 0.1}), 1.0);
    EXPECT_FALSE(b.ok);
    EXPECT_NEAR(b.bound, 0.0025, 1e-15);
    // doubling C_Q halves the admissible h
    const auto p = build_partition(1.0, 8);
    const double h1 = std::sqrt(check_reverse_cfl(0.1, p, 0.3).bound);
    const double h2 = std::sqrt(check_reverse_cfl(0.1, p, 0.6).bound);
    EXPECT_NEAR(h1 / h2, 2.0, 1e-14);
    EXPECT_THROW(check_reverse_cfl(0.1, p, 0.0), ValidationError);
}

TEST(InitialState, ReproducesFeFunctions)
{
    const Mesh m = generate_unit_square_mesh(4);
    EXPECT_EQ(l2_norm(initial_state(ProblemData{}, m)), 0.0);
    // a hat function on the mesh is projected onto itself
    const Mesh line = generate_interval_mesh(4);
    ProblemData hat;
    hat.u0 = [](const Point& x) { return std::max(0.0, 1.0 - 4.0 * std::abs(x[0] - 0.5)); };
    const FeFunction u = initial_state(hat, line);
    EXPECT_NEAR(u[2], 1.0, 1e-10);
    EXPECT_NEAR(u[1], 0.0, 1e-10);
    EXPECT_NEAR(u[3], 0.0, 1e-10);
}

TEST(InitialState, SineProjectionConvergesQuadratically)
{
    const auto u0 = [](const Point& x) { return std::sin(pi * x[0]); };
    std::vector<double> err;
    for (std::size_t n : {8u, 16u, 32u}) {
        const Mesh m = generate_interval_mesh(n);
        ProblemData d;
        d.u0 = u0;
        const FeFunction p = initial_state(d, m);
        const PointLocator loc(m);
        err.push_back(std::sqrt(integrate(
            m, [&](const Point& x) {
                const auto [e, b] = loc.locate(x);
                return std::pow(p.value(e, b) - u0(x), 2);
            },
            {.order = 6, .adaptive = false})));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        EXPECT_NEAR(std::log2(err[i - 1] / err[i]), 2.0, 0.15);
    }
}

TEST(Step, ZeroStaysZero)
{
    const Mesh m = generate_interval_mesh(4);
    const FeFunction u = step(FeFunction(m), 0.01, {});
    EXPECT_EQ(u.interior_values(), Vector(3, 0.0));
    EXPECT_THROW(step(FeFunction(m), 0.0, {}), ValidationError);
    EXPECT_THROW(step(FeFunction(m), 0.1, Vector(2, 0.0)), ValidationError);
}

TEST(Step, SineDecaysNodally)
{
    const Mesh m = generate_interval_mesh(4);
    const FeFunction u0 = lagrange_interpolate(m, [](const Point& x) { return std::sin(pi * x[0]); });
    const FeFunction u1 = step(u0, 0.01, {});
    for (std::size_t v : m.interior_vertices()) {
        EXPECT_LT(std::abs(u1[v]), std::abs(u0[v]));
        EXPECT_GT(u1[v], 0.0);
    }
    EXPECT_EQ(u1[0], 0.0);
    EXPECT_EQ(u1[4], 0.0);
}

TEST(Step, HugeStepReproducesPoissonSolve)
{
    const Mesh m = generate_unit_square_mesh(4);
    std::mt19937_64 rng(11);
    const FeFunction prev = random_fe_function(m, rng);
    Vector b(m.num_interior());
    std::uniform_real_distribution<double> u(0, 1);
    for (double& v : b) {
        v = u(rng);
    }
    const FeFunction x = step(prev, 1e12, b, {1e-14, 0});
    const Vector direct = dense_solve(DenseMatrix::from_sparse(assemble_stiffness(m)), b);
    const Vector got = x.interior_values();
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i], direct[i], 1e-9 * norm_inf(direct));
    }
}

TEST(Step, PreservesNonnegativityOnNonobtuseMeshes)
{
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0, 1);
    for (const Mesh& m : {generate_interval_mesh(16), generate_unit_square_mesh(8)}) {
        Vector v(m.num_interior());
        for (double& x : v) {
            x = u(rng) < 0.2 ? u(rng) : 0.0;
        }
        FeFunction w = FeFunction::from_interior(m, v);
        ImplicitEulerStepper s(m, {1e-14, 0});
        for (double tau : {1e-4, 1e-3, 1e-2, 1e-1}) {
            w = s.step(w, tau, {});
            for (std::size_t z = 0; z < m.num_vertices(); ++z) {
                EXPECT_GE(w[z], -1e-14);
            }
        }
    }
}

TEST(Step, IsLinear)
{
    const Mesh m = generate_unit_square_mesh(4);
    std::mt19937_64 rng(13);
    const FeFunction a = random_fe_function(m, rng), b = random_fe_function(m, rng);
    const CgOptions cg{1e-14, 0};
    const FeFunction lhs = step(2.0 * a - b, 0.05, {}, cg);
    const FeFunction rhs = 2.0 * step(a, 0.05, {}, cg) - step(b, 0.05, {}, cg);
    for (std::size_t z = 0; z < m.num_vertices(); ++z) {
        EXPECT_NEAR(lhs[z], rhs[z], 1e-11);
    }
}

TEST(Solve, ZeroDataGivesZeroTrajectory)
{
    const Mesh m = generate_unit_square_mesh(4);
    SchemeConfig c;
    c.t_final = 0.5;
    c.steps = 5;
    const auto r = solve(m, ProblemData{}, c);
    ASSERT_EQ(r.u.steps(), 5u);
    for (const auto& s : r.u.slices()) {
        EXPECT_EQ(norm_inf(s.values()), 0.0);
    }
}

TEST(Solve, EnforcedCflAborts)
{
    const Mesh m = generate_interval_mesh(4);
    SchemeConfig c;
    c.t_final = 1e-3;
    c.steps = 10;
    c.cq = CqSource::fixed(1.0);
    c.cfl = CflPolicy::enforce;
    EXPECT_THROW(solve(m, sine_data(), c), CflViolation);
    c.cfl = CflPolicy::warn;
    const auto r = solve(m, sine_data(), c);
    EXPECT_FALSE(r.cfl.ok);
    EXPECT_FALSE(r.warnings.empty());
}

TEST(Solve, SineConvergesFirstOrderInTime)
{
    // tau proportional to h^2, L-infinity-in-time L2 error against the exact solution
    const auto data = sine_data();
    std::vector<double> err, taus;
    for (std::size_t n : {8u, 16u, 32u}) {
        const Mesh m = generate_interval_mesh(n);
        SchemeConfig c;
        c.t_final = 0.25;
        c.steps = n * n / 4;
        c.cg = {1e-13, 0};
        const auto r = solve(m, data, c);
        const PointLocator loc(m);
        double e = 0.0;
        for (std::size_t k = 0; k <= r.u.steps(); ++k) {
            const double t = r.u.partition().node(k);
            const FeFunction& uk = r.u[k];
            e = std::max(e, std::sqrt(integrate(
                                m, [&](const Point& x) {
                                    const auto [el, b] = loc.locate(x);
                                    return std::pow(uk.value(el, b) - data.exact(t, x), 2);
                                },
                                {.order = 6, .adaptive = false})));
        }
        err.push_back(e);
        taus.push_back(c.t_final / static_cast<double>(c.steps));
    }
    for (std::size_t i = 1; i < err.size(); ++i) {
        const double order = std::log(err[i - 1] / err[i]) / std::log(taus[i - 1] / taus[i]);
        EXPECT_NEAR(order, 1.0, 0.2);
    }
}

TEST(Solve, NodalPeakTracksExactDecay)
{
    const Mesh m = generate_interval_mesh(32);
    SchemeConfig c;
    c.t_final = 0.1;
    c.steps = 200;
    const auto r = solve(m, sine_data(), c);
    for (std::size_t k = 0; k <= r.u.steps(); k += 50) {
        const double t = r.u.partition().node(k);
        EXPECT_NEAR(norm_inf(r.u[k].values()), std::exp(-pi * pi * t), 0.01);
    }
}

TEST(Trajectory, ReconstructionAndJumps)
{
    const Mesh m = generate_interval_mesh(4);
    const auto p = build_partition(1.0, 1);
    const FeFunction v = FeFunction::from_interior(m, Vector{1.0, -2.0, 4.0});
    const SpaceTimeFeFunction w(m, p, {FeFunction(m), v});
    EXPECT_EQ(w.reconstruction(0.5).interior_values(), (Vector{0.5, -1.0, 2.0}));
    EXPECT_EQ(w.jump(1).interior_values(), v.interior_values());
    EXPECT_EQ(&w.at(0.0), &w[0]);
    EXPECT_EQ(&w.at(0.3), &w[1]);
    EXPECT_THROW(w.reconstruction(1.5), ValidationError);
    EXPECT_THROW(w.jump(0), ValidationError);
    EXPECT_THROW(w.jump(2), ValidationError);
}

TEST(Trajectory, ConstantTrajectoryHasZeroJumps)
{
    const Mesh m = generate_unit_square_mesh(3);
    std::mt19937_64 rng(14);
    const FeFunction v = random_fe_function(m, rng);
    const auto p = build_partition(1.0, 4, Grading::geometric(1.5));
    const SpaceTimeFeFunction w(m, p, std::vector<FeFunction>(5, v));
    for (std::size_t n = 1; n <= 4; ++n) {
        EXPECT_EQ(norm_inf(w.jump(n).values()), 0.0);
    }
    EXPECT_EQ(w.reconstruction(0.37).values()[5], v[5]);
}

TEST(Trajectory, ReconstructionHitsNodesExactlyAndSlopeIsJumpOverTau)
{
    const Mesh m = generate_unit_square_mesh(3);
    std::mt19937_64 rng(15);
    const auto p = build_partition(0.9, 6, Grading::geometric(1.4));
    const auto w = random_trajectory(m, p, rng);
    for (std::size_t n = 0; n <= p.steps(); ++n) {
        EXPECT_EQ(w.reconstruction(p.node(n)).interior_values(), w[n].interior_values());
    }
    for (std::size_t n = 1; n <= p.steps(); ++n) {
        const double a = p.node(n - 1) + 0.25 * p.tau(n), b = p.node(n - 1) + 0.75 * p.tau(n);
        const FeFunction slope = (1.0 / (b - a)) * (w.reconstruction(b) - w.reconstruction(a));
        const FeFunction expect = (1.0 / p.tau(n)) * w.jump(n);
        for (std::size_t z = 0; z < m.num_vertices(); ++z) {
            EXPECT_NEAR(slope[z], expect[z], 1e-11 * (1 + std::abs(expect[z])));
        }
    }
}

TEST(Norms, Examples)
{
    const Mesh m = generate_unit_square_mesh(4);
    const auto p = build_partition(2.0, 3);
    const SpaceTimeFeFunction zero(m, p);
    EXPECT_EQ(xnorm(zero), 0.0);
    EXPECT_EQ(ynorm(zero), 0.0);

    std::mt19937_64 rng(16);
    const FeFunction v = random_fe_function(m, rng);
    const SpaceTimeFeFunction c(m, p, std::vector<FeFunction>(4, v));
    const double h1 = h1_inner(v, v), l2 = l2_inner(v, v);
    EXPECT_NEAR(xnorm(c) * xnorm(c), 2.0 * h1 + l2, 1e-12 * (h1 + l2));
    EXPECT_NEAR(ynorm(c) * ynorm(c), 2.0 * h1 + l2, 1e-12 * (h1 + l2));

    // N = 1 with w^0 = 0: the jump contributes ||v||^2 alongside the final-time term
    const auto p1 = build_partition(1.0, 1);
    const SpaceTimeFeFunction j(m, p1, {FeFunction(m), v});
    const double dual = DualNorm(m).squared(v);
    EXPECT_NEAR(xnorm(j) * xnorm(j), h1 + dual + 2.0 * l2, 1e-12 * (h1 + dual + l2));
}

TEST(Norms, Homogeneous)
{
    const Mesh m = generate_unit_square_mesh(3);
    std::mt19937_64 rng(17);
    const auto p = build_partition(1.0, 3);
    for (int t = 0; t < 10; ++t) {
        const auto w = random_trajectory(m, p, rng);
        Vector x = w.stacked();
        const double c = -2.5;
        for (double& v : x) {
            v *= c;
        }
        const auto cw = SpaceTimeFeFunction::from_stacked(m, p, x);
        EXPECT_NEAR(xnorm(cw), std::abs(c) * xnorm(w), 1e-12 * xnorm(cw));
        EXPECT_NEAR(ynorm(cw), std::abs(c) * ynorm(w), 1e-12 * ynorm(cw));
    }
}

TEST(Norms, DualNormMatchesDenseOracle)
{
    const Mesh m = generate_unit_square_mesh(4);
    std::mt19937_64 rng(18);
    const FeFunction g = random_fe_function(m, rng);
    const Vector l = spmv(assemble_mass(m), g.interior_values());
    const Vector y = dense_solve(DenseMatrix::from_sparse(assemble_stiffness(m)), l);
    EXPECT_NEAR(DualNorm(m).squared(g), dot(l, y), 1e-10 * dot(l, y));
}

TEST(SpaceTimeForms, HandAssembledTwoByTwo)
{
    // 1D n = 2: one interior node, h = 1/2; N = 1, tau = 1
    const Mesh m = generate_interval_mesh(2);
    const auto f = assemble_spacetime_forms(m, build_partition(1.0, 1));
    const double a = 4.0, mass = 1.0 / 3, d = 0.5;
    ASSERT_EQ(f.b.rows(), 2u);
    EXPECT_NEAR(f.b(0, 0), mass, 1e-15);
    EXPECT_EQ(f.b(0, 1), 0.0);
    EXPECT_NEAR(f.b(1, 0), -d, 1e-15);
    EXPECT_NEAR(f.b(1, 1), a + d, 1e-15);
    EXPECT_NEAR(f.ny(0, 0), mass, 1e-15);
    EXPECT_NEAR(f.ny(1, 1), a, 1e-15);
    const double k = mass * mass / a;
    EXPECT_NEAR(f.nx(0, 0), k + mass, 1e-15);
    EXPECT_NEAR(f.nx(0, 1), -k - mass, 1e-15);
    EXPECT_NEAR(f.nx(1, 1), a + k + 2 * mass, 1e-15);
}

TEST(SpaceTimeForms, QuadraticFormsMatchNorms)
{
    const Mesh m = generate_unit_square_mesh(4);
    const auto p = build_partition(0.5, 4, Grading::geometric(1.3));
    const auto f = assemble_spacetime_forms(m, p);
    std::mt19937_64 rng(19);
    for (int t = 0; t < 50; ++t) {
        const auto w = random_trajectory(m, p, rng);
        const Vector x = w.stacked();
        const double xn = xnorm(w), yn = ynorm(w);
        EXPECT_NEAR(f.nx.quadratic_form(x), xn * xn, 1e-10 * xn * xn);
        EXPECT_NEAR(f.ny.quadratic_form(x), yn * yn, 1e-10 * yn * yn);
    }
}

TEST(SpaceTimeForms, ConsistentJumpsDifferOnlyInJumpBlocks)
{
    const Mesh m = generate_unit_square_mesh(3);
    const auto p = build_partition(1.0, 2);
    const auto lumped = assemble_spacetime_forms(m, p, JumpProduct::lumped);
    const auto cons = assemble_spacetime_forms(m, p, JumpProduct::consistent);
    const DenseMatrix mass = DenseMatrix::from_sparse(assemble_mass(m));
    const Vector d = lumped_weights(m).interior(m);
    const std::size_t nm = m.num_interior();
    for (std::size_t i = 0; i < lumped.b.rows(); ++i) {
        for (std::size_t j = 0; j < lumped.b.cols(); ++j) {
            const std::size_t bi = i / nm, bj = j / nm, li = i % nm, lj = j % nm;
            double expect = 0.0;
            if (bi >= 1 && (bj == bi || bj + 1 == bi)) {
                const double diff = mass(li, lj) - (li == lj ? d[li] : 0.0);
                expect = bj == bi ? diff : -diff;
            }
            EXPECT_NEAR(cons.b(i, j) - lumped.b(i, j), expect, 1e-15);
        }
    }
    EXPECT_EQ(cons.nx.data()[7], lumped.nx.data()[7]);
}

TEST(SpaceTimeForms, ConsistentDgFormHasUnitInfSupConstant)
{
    for (const Mesh& m : {generate_interval_mesh(6), generate_unit_square_mesh(3)}) {
        for (const auto& p : {build_partition(1.0, 3), build_partition(0.2, 4, Grading::geometric(2.0))}) {
            const auto f = assemble_spacetime_forms(m, p, JumpProduct::consistent);
            EXPECT_NEAR(min_generalized_singular_value(f.b, f.nx, f.ny), 1.0, 1e-8);
        }
    }
}

TEST(SpaceTimeForms, SolveSatisfiesDiscreteEquation)
{
    // B(v, U) = (v^0, u_0) + sum tau_n (f^n, v^n) for the computed trajectory
    const Mesh m = generate_unit_square_mesh(4);
    ProblemData d;
    d.u0 = [](const Point& x) { return std::sin(pi * x[0]) * x[1]; };
    d.f = [](double t, const Point& x) { return (1 + t) * x[0]; };
    SchemeConfig c;
    c.t_final = 0.3;
    c.steps = 3;
    c.cg = {1e-14, 0};
    const auto r = solve(m, d, c);
    const auto f = assemble_spacetime_forms(m, r.u.partition());
    const Vector bu = f.b.multiply(r.u.stacked());
    const Vector l0 = load_vector(m, d.u0);
    const auto loads = average_rhs(d, r.u.partition(), m).loads;
    const std::size_t nm = m.num_interior();
    for (std::size_t i = 0; i < nm; ++i) {
        EXPECT_NEAR(bu[i], l0[i], 1e-10);
    }
    for (std::size_t n = 1; n <= 3; ++n) {
        for (std::size_t i = 0; i < nm; ++i) {
            EXPECT_NEAR(bu[n * nm + i], r.u.partition().tau(n) * loads[n - 1][i], 1e-10);
        }
    }
}

TEST(SpaceTimeForms, SizeCap)
{
    const Mesh m = generate_unit_square_mesh(16);
    EXPECT_THROW(assemble_spacetime_forms(m, build_partition(1.0, 20)), SizeLimitError);
    EXPECT_THROW(assemble_spacetime_forms(generate_interval_mesh(1), build_partition(1.0, 2)), ValidationError);
}
