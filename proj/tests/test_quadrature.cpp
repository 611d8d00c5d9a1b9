#include "l1heat/mesh.hpp"
#include "l1heat/quadrature.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace l1heat;

TEST(GaussLegendre, WeightsSumToOneAndIntegrateMonomials)
{
    for (int n = 1; n <= 8; ++n) {
        const GaussRule g = gauss_legendre(n);
        double w = 0.0;
        for (double x : g.weights) {
            w += x;
        }
        EXPECT_NEAR(w, 1.0, 1e-14);
        for (int p = 0; p < 2 * n; ++p) {
            double s = 0.0;
            for (std::size_t i = 0; i < g.nodes.size(); ++i) {
                s += g.weights[i] * std::pow(g.nodes[i], p);
            }
            EXPECT_NEAR(s, 1.0 / (p + 1), 1e-14) << "n=" << n << " p=" << p;
        }
    }
}

TEST(ReferenceRule, TriangleRulesAreExactToTheirOrder)
{
    // integral over the reference triangle of l1^a l2^b = a! b! / (a + b + 2)! times 2 |T|
    const auto fact = [](int k) {
        double f = 1.0;
        for (int i = 2; i <= k; ++i) {
            f *= i;
        }
        return f;
    };
    for (int order = 1; order <= 5; ++order) {
        const auto& rule = reference_rule(2, order);
        for (int a = 0; a <= order; ++a) {
            for (int b = 0; a + b <= order; ++b) {
                double s = 0.0;
                for (const auto& q : rule) {
                    s += q.weight * std::pow(q.bary[1], a) * std::pow(q.bary[2], b);
                }
                const double exact = 2.0 * fact(a) * fact(b) / fact(a + b + 2);
                EXPECT_NEAR(s, exact, 1e-13) << "order=" << order << " a=" << a << " b=" << b;
            }
        }
    }
}

TEST(Integrate, PolynomialOnUnitSquareIsExact)
{
    const Mesh m = generate_unit_square_mesh(3);
    const double v = integrate(m, [](const Point& x) { return x[0] * x[0] * x[1] + 3.0 * x[1] * x[1]; },
                               {.order = 4, .adaptive = false});
    EXPECT_NEAR(v, 1.0 / 6.0 + 1.0, 1e-13);
}

TEST(Integrate, AdaptiveResolvesIntegrableSpike)
{
    // |x - 0.4|^{-1/2} on (0,1)
    const Mesh m = generate_interval_mesh(4);
    QuadratureReport rep;
    const double v = integrate(
        m, [](const Point& x) { const double r = std::abs(x[0] - 0.4); return r > 0 ? 1.0 / std::sqrt(r) : 0.0; },
        {.order = 4, .adaptive = true, .max_depth = 30, .abs_tol = 1e-11}, &rep);
    // the singular cell stops at the depth limit; the reported estimate bounds the miss
    const double exact = 2.0 * (std::sqrt(0.4) + std::sqrt(0.6));
    EXPECT_NEAR(v, exact, 5e-5);
    EXPECT_GT(rep.depth_limited_cells, 0u);
    EXPECT_LE(std::abs(v - exact), 2.0 * rep.estimated_error);
}

TEST(Integrate, DepthLimitReportedOrThrown)
{
    const Mesh m = generate_unit_square_mesh(2);
    const auto spike = [](const Point& x) {
        const double r = length(x - Point{0.3, 0.3});
        return r > 0 ? std::pow(r, -1.5) : 0.0;
    };
    QuadratureReport rep;
    integrate(m, spike, {.order = 4, .adaptive = true, .max_depth = 6, .abs_tol = 1e-12}, &rep);
    EXPECT_GT(rep.depth_limited_cells, 0u);
    EXPECT_FALSE(rep.clean());
    EXPECT_THROW(integrate(m, spike, {.order = 4, .adaptive = true, .max_depth = 6, .abs_tol = 1e-12, .strict = true}),
                 QuadratureError);
}

TEST(Integrate, FocusFindsNarrowFeatureAtVertex)
{
    // plateau of width 2e-4 around a mesh vertex: invisible to the coarse rule
    const Point c{0.5, 0.5};
    const double w = 1e-4;
    const auto bump = [&](const Point& x) { return length(x - c) < w ? 1.0 : 0.0; };
    const Mesh m = generate_unit_square_mesh(4);
    QuadratureSpec spec{.order = 4, .adaptive = true, .max_depth = 30, .abs_tol = 1e-14};
    EXPECT_EQ(integrate(m, bump, spec), 0.0);
    spec.focus = c;
    // the disc is resolved up to cells of diameter ~ 2^-30 / 4 along its rim
    EXPECT_NEAR(integrate(m, bump, spec), std::numbers::pi * w * w, 1e-3 * std::numbers::pi * w * w);
    EXPECT_EQ(focused(spec, Point{0.1, 0.1}).focus->at(0), 0.5);
    EXPECT_EQ(focused({}, Point{0.1, 0.1}).focus->at(0), 0.1);
}

TEST(Integrate, NonFiniteIntegrandThrows)
{
    const Mesh m = generate_interval_mesh(2);
    EXPECT_THROW(integrate(m, [](const Point&) { return std::nan(""); }), QuadratureError);
}

TEST(IntegrateInterval, SmoothAndKinked)
{
    const QuadratureSpec spec{.order = 2, .adaptive = true, .max_depth = 30, .abs_tol = 1e-12};
    EXPECT_NEAR(integrate_interval([](double t) { return std::exp(t); }, 0.0, 1.0, 2, spec), std::exp(1.0) - 1.0,
                1e-11);
    EXPECT_NEAR(integrate_interval([](double t) { return std::abs(t - 0.3); }, 0.0, 1.0, 2, spec),
                0.5 * (0.09 + 0.49), 1e-11);
}
