#include "l1heat/fespace.hpp"
#include "l1heat/linalg.hpp"
#include "l1heat/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace l1heat;

namespace {

DenseMatrix random_spd(std::size_t n, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix g(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            g(i, j) = u(rng);
        }
    }
    DenseMatrix a = g * g.transposed();
    for (std::size_t i = 0; i < n; ++i) {
        a(i, i) += static_cast<double>(n);
    }
    return a;
}

SparseMatrix to_sparse(const DenseMatrix& a)
{
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (a(i, j) != 0.0) {
                t.push_back({i, j, a(i, j)});
            }
        }
    }
    return SparseMatrix::from_triplets(a.rows(), a.cols(), t);
}

} // namespace

TEST(SparseMatrix, DuplicatesAreSummedAndColumnsSorted)
{
    auto a = SparseMatrix::from_triplets(2, 3, {{0, 2, 1.0}, {0, 0, 2.0}, {0, 2, 3.0}, {1, 1, -1.0}});
    EXPECT_EQ(a.nonzeros(), 3u);
    EXPECT_DOUBLE_EQ(a.at(0, 2), 4.0);
    EXPECT_DOUBLE_EQ(a.at(0, 1), 0.0);
    auto ci = a.col_idx();
    EXPECT_LT(ci[0], ci[1]);
}

TEST(SparseMatrix, RejectsOutOfRangeTriplet)
{
    EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), ValidationError);
}

TEST(Spmv, IdentityReturnsInput)
{
    const Vector x{1.5, -2.0, 3.25};
    EXPECT_EQ(spmv(SparseMatrix::identity(3), x), x);
}

TEST(Spmv, ZeroMatrixGivesZero)
{
    const auto z = SparseMatrix::from_triplets(3, 3, {});
    EXPECT_EQ(spmv(z, Vector{1.0, 2.0, 3.0}), Vector(3, 0.0));
}

TEST(Spmv, StiffnessOnQuadraticMatchesHandComputation)
{
    // hat-function gradients on h = 1/4 give (1/h)(-1, 2, -1); x(1-x) at 1/4, 1/2, 3/4
    const Mesh mesh = generate_interval_mesh(4);
    const SparseMatrix a = assemble_stiffness(mesh);
    const Vector x{3.0 / 16.0, 0.25, 3.0 / 16.0};
    const Vector y = spmv(a, x);
    const Vector expected{4.0 * (2 * 3.0 / 16 - 0.25), 4.0 * (2 * 0.25 - 2 * 3.0 / 16), 4.0 * (2 * 3.0 / 16 - 0.25)};
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_NEAR(y[i], expected[i], 1e-14);
        EXPECT_NEAR(y[i], 0.5, 1e-14); // -u'' = 2 times h
    }
}

TEST(Spmv, DimensionMismatchThrows)
{
    EXPECT_THROW(spmv(SparseMatrix::identity(3), Vector{1.0, 2.0}), ValidationError);
}

TEST(Spmv, DistributesOverAddition)
{
    std::mt19937_64 rng(7);
    const SparseMatrix a = to_sparse(random_spd(30, rng));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector x(30), y(30), xy(30);
    for (std::size_t i = 0; i < 30; ++i) {
        x[i] = u(rng);
        y[i] = u(rng);
        xy[i] = x[i] + y[i];
    }
    const Vector ax = spmv(a, x), ay = spmv(a, y), axy = spmv(a, xy);
    for (std::size_t i = 0; i < 30; ++i) {
        EXPECT_NEAR(axy[i], ax[i] + ay[i], 1e-12);
    }
}

TEST(CgSolve, DiagonalSystem)
{
    const Vector d(5, 2.0);
    const auto res = cg_solve(SparseMatrix::diagonal(d), Vector(5, 2.0));
    ASSERT_TRUE(res.converged);
    for (double v : res.x) {
        EXPECT_NEAR(v, 1.0, 1e-14);
    }
}

TEST(CgSolve, ZeroRightHandSideTakesNoIterations)
{
    const auto res = cg_solve(SparseMatrix::identity(4), Vector(4, 0.0));
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.iterations, 0u);
    EXPECT_EQ(res.x, Vector(4, 0.0));
}

TEST(CgSolve, PoissonMatchesDenseSolve)
{
    const Mesh mesh = generate_interval_mesh(8);
    const SparseMatrix a = assemble_stiffness(mesh);
    const double pi = std::numbers::pi;
    const Vector b = load_vector(mesh, [pi](const Point& x) { return pi * pi * std::sin(pi * x[0]); });
    const auto res = cg_solve(a, b);
    const Vector xd = dense_solve(DenseMatrix::from_sparse(a), b);
    ASSERT_TRUE(res.converged);
    for (std::size_t i = 0; i < xd.size(); ++i) {
        EXPECT_NEAR(res.x[i], xd[i], 1e-8);
    }
}

TEST(CgSolve, ReportsNonConvergence)
{
    std::mt19937_64 rng(3);
    const SparseMatrix a = to_sparse(random_spd(40, rng));
    const auto res = cg_solve(a, Vector(40, 1.0), {1e-14, 2});
    EXPECT_FALSE(res.converged);
    EXPECT_EQ(res.iterations, 2u);
    EXPECT_GT(res.relative_residual, 1e-14);
}

TEST(CgSolve, NanAborts)
{
    Vector b(3, 1.0);
    b[1] = std::nan("");
    EXPECT_THROW(cg_solve(SparseMatrix::identity(3), b), NumericalError);
}

TEST(CgSolve, IndefiniteMatrixAborts)
{
    const Vector d{1.0, -1.0};
    EXPECT_THROW(cg_solve(SparseMatrix::diagonal(d), Vector{1.0, 1.0}), NumericalError);
}

TEST(DenseSolve, IdentityAndTwoByTwo)
{
    EXPECT_EQ(dense_solve(DenseMatrix::identity(3), Vector{1.0, 2.0, 3.0}), (Vector{1.0, 2.0, 3.0}));
    DenseMatrix a(2, 2);
    a(0, 0) = 2;
    a(0, 1) = 1;
    a(1, 0) = 1;
    a(1, 1) = 2;
    const Vector x = dense_solve(a, Vector{3.0, 3.0});
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(DenseSolve, RandomResidualIsSmall)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix a(10, 10);
    Vector b(10);
    for (std::size_t i = 0; i < 10; ++i) {
        b[i] = u(rng);
        for (std::size_t j = 0; j < 10; ++j) {
            a(i, j) = u(rng);
        }
    }
    const Vector x = dense_solve(a, b);
    const Vector ax = a.multiply(x);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_LT(std::abs(ax[i] - b[i]), 1e-10);
    }
}

TEST(DenseSolve, SingularThrows)
{
    DenseMatrix a(2, 2, 1.0);
    EXPECT_THROW(dense_solve(a, Vector{1.0, 1.0}), NumericalError);
}

TEST(Cholesky, RejectsIndefinite)
{
    DenseMatrix a = DenseMatrix::identity(2);
    a(1, 1) = -1.0;
    EXPECT_THROW(cholesky(a), NumericalError);
}

TEST(SingularValues, DiagonalAndRectangular)
{
    DenseMatrix a(3, 2);
    a(0, 0) = 3.0;
    a(1, 1) = -4.0;
    const Vector s = singular_values(a);
    ASSERT_EQ(s.size(), 2u);
    EXPECT_NEAR(s[0], 4.0, 1e-14);
    EXPECT_NEAR(s[1], 3.0, 1e-14);
}

TEST(GeneralizedSingularValue, Identity)
{
    const auto i3 = DenseMatrix::identity(3);
    EXPECT_NEAR(min_generalized_singular_value(i3, i3, i3), 1.0, 1e-14);
}

TEST(GeneralizedSingularValue, Diagonal)
{
    DenseMatrix b(2, 2);
    b(0, 0) = 2.0;
    b(1, 1) = 3.0;
    const auto i2 = DenseMatrix::identity(2);
    EXPECT_NEAR(min_generalized_singular_value(b, i2, i2), 2.0, 1e-14);
    EXPECT_NEAR(max_generalized_singular_value(b, i2, i2), 3.0, 1e-14);
}

TEST(GeneralizedSingularValue, ScalingIdentity)
{
    std::mt19937_64 rng(5);
    const DenseMatrix b = random_spd(6, rng);
    const DenseMatrix nx = random_spd(6, rng);
    const DenseMatrix ny = random_spd(6, rng);
    const double s = min_generalized_singular_value(b, nx, ny);
    DenseMatrix b2 = b, nx2 = nx, ny2 = ny;
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t j = 0; j < 6; ++j) {
            b2(i, j) *= 4.0;
            nx2(i, j) *= 4.0;
            ny2(i, j) *= 9.0;
        }
    }
    EXPECT_NEAR(min_generalized_singular_value(b2, nx2, ny2), s * 4.0 / (2.0 * 3.0), 1e-12 * s);

    const auto i4 = DenseMatrix::identity(4);
    DenseMatrix b4 = i4;
    for (std::size_t i = 0; i < 4; ++i) {
        b4(i, i) = 4.0;
    }
    DenseMatrix n4 = b4;
    EXPECT_NEAR(min_generalized_singular_value(b4, n4, n4), 1.0, 1e-14);
}

TEST(GeneralizedSingularValue, InvariantUnderNyOrthogonalMaps)
{
    // Q = L_Y R L_Y^{-1} with R orthogonal preserves the dual norm: Q^T NY^{-1} Q = NY^{-1}.
    std::mt19937_64 rng(9);
    const std::size_t n = 5;
    const DenseMatrix b = random_spd(n, rng);
    const DenseMatrix nx = random_spd(n, rng);
    const DenseMatrix ny = random_spd(n, rng);
    const double s = min_generalized_singular_value(b, nx, ny);

    // Orthogonal R from a Givens product.
    DenseMatrix r = DenseMatrix::identity(n);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double th = 0.3 + 0.2 * static_cast<double>(k);
        DenseMatrix g = DenseMatrix::identity(n);
        g(k, k) = std::cos(th);
        g(k, k + 1) = -std::sin(th);
        g(k + 1, k) = std::sin(th);
        g(k + 1, k + 1) = std::cos(th);
        r = r * g;
    }
    const DenseMatrix ly = cholesky(ny);
    DenseMatrix z = b;
    lower_solve_in_place(ly, z);      // L_Y^{-1} B
    const DenseMatrix qb = ly * (r * z); // L_Y R L_Y^{-1} B
    EXPECT_NEAR(min_generalized_singular_value(qb, nx, ny), s, 1e-10 * s);
}

TEST(GeneralizedSingularValue, NonSpdNormThrows)
{
    const auto i2 = DenseMatrix::identity(2);
    DenseMatrix bad = i2;
    bad(0, 0) = 0.0;
    EXPECT_THROW(min_generalized_singular_value(i2, bad, i2), NumericalError);
}

TEST(CgSolve, MatchesDenseOnRandomSpdSystems)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::size_t n : {1u, 7u, 50u, 200u}) {
        const DenseMatrix a = random_spd(n, rng);
        Vector b(n);
        for (double& v : b) {
            v = u(rng);
        }
        const auto res = cg_solve(to_sparse(a), b);
        const Vector xd = dense_solve(a, b);
        ASSERT_TRUE(res.converged);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            err = std::max(err, std::abs(res.x[i] - xd[i]));
        }
        EXPECT_LE(err, 1e-8 * norm_inf(xd));
    }
}
