#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsepr/conic.hpp"

#include <cmath>

using namespace sparsepr;

namespace {

Matrix random_matrix(Index r, Index c, Rng& rng)
{
    std::normal_distribution<double> g;
    Matrix M(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) M(i, j) = g(rng);
    return M;
}

Matrix random_symmetric(Index n, Rng& rng)
{
    const Matrix A = random_matrix(n, n, rng);
    return 0.5 * (A + A.transpose());
}

// A random direction that leaves every circular diagonal sum unchanged.
Matrix null_direction(Index n, Rng& rng)
{
    Matrix D = random_matrix(n, n, rng);
    const Vector sums = diagonal_sums(D);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) D(j, (j + i) % n) -= sums[i] / double(n);
    return D;
}

double weighted_l1(const Matrix& V, const Matrix& X) { return V.cwiseProduct(X.cwiseAbs()).sum(); }

} // namespace

TEST_CASE("soft threshold")
{
    Matrix M(1, 4), T(1, 4), expected(1, 4);
    M << 3, -3, 0.5, -0.2;
    T << 1, 1, 1, 0.1;
    expected << 2, -2, 0, -0.1;
    CHECK((soft_threshold(M, T) - expected).norm() < 1e-15);
    CHECK_THROWS_AS(soft_threshold(M, Matrix(2, 2)), std::invalid_argument);
}

TEST_CASE("psd projection")
{
    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 2;
    D(1, 1) = -1;
    Matrix expected = Matrix::Zero(2, 2);
    expected(0, 0) = 2;
    CHECK((project_psd(D) - expected).norm() < 1e-15);

    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const Matrix X = random_symmetric(8, rng);
        const Matrix P = project_psd(X);
        CHECK((project_psd(P) - P).norm() < 1e-10);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(P).eigenvalues().minCoeff() > -1e-10);
        CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(X - P).eigenvalues().maxCoeff() < 1e-10);
        CHECK(std::abs(P.cwiseProduct(X - P).sum()) < 1e-9);
    }
    Matrix bad = Matrix::Identity(3, 3);
    bad(1, 2) = std::nan("");
    CHECK_THROWS(project_psd(bad));
    CHECK_THROWS_AS(project_psd(Matrix(2, 3)), std::invalid_argument);
}

TEST_CASE("diagonal sums of a hand matrix")
{
    Matrix X(3, 3);
    X << 1, 2, 3,
         4, 5, 6,
         7, 8, 9;
    Vector expected(3);
    // i = 0: 1+5+9, i = 1: X01+X12+X20 = 2+6+7, i = 2: X02+X10+X21 = 3+4+8
    expected << 15, 15, 15;
    CHECK(diagonal_sums(X) == expected);
    X(2, 0) = 0;
    expected[1] = 8;
    CHECK(diagonal_sums(X) == expected);
}

TEST_CASE("diagonal-sum projection is the nearest feasible point")
{
    Rng rng(2);
    for (int t = 0; t < 20; ++t) {
        const Index n = 5 + t % 4;
        const Matrix X = random_matrix(n, n, rng);
        Vector a(n);
        for (Index i = 0; i < n; ++i) a[i] = std::normal_distribution<double>()(rng);
        const Matrix P = project_diagonal_sums(X, a);
        CHECK((diagonal_sums(P) - a).cwiseAbs().maxCoeff() < 1e-12);
        // Optimality: X - P is orthogonal to every feasible direction.
        for (int d = 0; d < 5; ++d) CHECK(std::abs((X - P).cwiseProduct(null_direction(n, rng)).sum()) < 1e-10);
    }
}

TEST_CASE("weighted prox on the diagonal-sum set")
{
    Rng rng(3);
    const Index n = 7;
    for (int t = 0; t < 20; ++t) {
        const Matrix M = random_matrix(n, n, rng);
        const Matrix T = random_matrix(n, n, rng).cwiseAbs();
        Vector a(n);
        for (Index i = 0; i < n; ++i) a[i] = 2.0 * std::normal_distribution<double>()(rng);
        const Matrix P = prox_diagonal_sums(M, T, a);
        CHECK((diagonal_sums(P) - a).cwiseAbs().maxCoeff() < 1e-10);

        auto f = [&](const Matrix& Z) { return weighted_l1(T, Z) + 0.5 * (Z - M).squaredNorm(); };
        const double best = f(P);
        for (int d = 0; d < 20; ++d) {
            const Matrix D = null_direction(n, rng);
            for (double step : {1e-1, 1e-3, 1e-5}) CHECK(f(P + step * D) >= best - 1e-12);
        }
    }
    SUBCASE("zero weights reduce to the projection")
    {
        const Matrix M = random_matrix(n, n, rng);
        const Vector a = Vector::LinSpaced(n, -1.0, 1.0);
        CHECK((prox_diagonal_sums(M, Matrix::Zero(n, n), a) - project_diagonal_sums(M, a)).norm() < 1e-12);
    }
    CHECK_THROWS_AS(prox_diagonal_sums(Matrix::Zero(3, 3), Matrix::Zero(2, 2), Vector::Zero(3)), std::invalid_argument);
}

TEST_CASE("feasibility of autocorrelation vectors")
{
    Vector x(6);
    x << 0.3, 0, 1, 0, 0, -0.7;
    CHECK(is_feasible_autocorrelation(autocorrelation(x)));
    Vector neg(4);
    neg << 1, 0, -2, 0; // spectrum at frequency 0 is -1
    CHECK_FALSE(is_feasible_autocorrelation({neg}));
    Vector asym(4);
    asym << 3, 1, 0, 0;
    CHECK_FALSE(is_feasible_autocorrelation({asym}));
}

TEST_CASE("settings and weight validation")
{
    SolverSettings s;
    CHECK(s.valid());
    s.rho = -1;
    CHECK_FALSE(s.valid());
    Rng rng(4);
    WeightMatrix V = WeightMatrix::uniform_random(5, rng, 0.0, 1.0);
    CHECK(V.valid());
    CHECK(V.V.isApprox(V.V.transpose()));
    CHECK(V.V.minCoeff() >= 0.0);
    CHECK(V.V.maxCoeff() <= 1.0);
    V.V(0, 1) = 2.0;
    CHECK_FALSE(V.valid());
    CHECK(WeightMatrix::zeros(3).valid());
    CHECK(to_string(SolveStatus::RankOne) == "rank_one");
}

TEST_CASE("lifted program reports infeasible data")
{
    Vector neg(4);
    neg << 1, 0, -2, 0;
    Rng rng(5);
    const SdpSolution sol = solve_weighted_l1_sdp({neg}, WeightMatrix::uniform_random(4, rng));
    CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("lifted program on a spike recovers the spike")
{
    // Off-diagonal sums vanish and the diagonal sum is fixed, so the optimum
    // places all mass on the cheapest diagonal entry: a rank-one spike.
    const Index n = 8;
    Vector x = Vector::Zero(n);
    x[3] = 0.6;
    Rng rng(6);
    const WeightMatrix V = WeightMatrix::uniform_random(n, rng, 0.1, 1.0);
    SolverSettings s;
    s.max_iters = 5000;
    const SdpSolution sol = solve_weighted_l1_sdp(autocorrelation(x), V, s);
    CHECK(sol.status != SolveStatus::Infeasible);
    Index cheapest = 0;
    V.V.diagonal().minCoeff(&cheapest);
    CHECK(sol.X.X(cheapest, cheapest) == doctest::Approx(0.36).epsilon(1e-5));
    CHECK(sol.X.eigen_ratio < 1e-4);
}

TEST_CASE("lifted program is feasible and no worse than the truth")
{
    const Index n = 12;
    Vector x = Vector::Zero(n);
    x[0] = 0.8;
    x[3] = 0.5;
    x[4] = 0.9;
    const Autocorrelation a = autocorrelation(x);
    Rng rng(7);
    const WeightMatrix V = WeightMatrix::uniform_random(n, rng);
    SolverSettings s;
    s.max_iters = 20000;
    s.primal_tol = s.dual_tol = 1e-9;
    int traced = 0;
    const SdpSolution sol = solve_weighted_l1_sdp(a, V, s, [&](const IterationTrace&) { ++traced; });
    CHECK(sol.status == SolveStatus::Converged);
    CHECK(traced == sol.iterations);
    CHECK((diagonal_sums(sol.X.X) - a.a).norm() < 1e-6 * a.a.norm());
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(sol.X.X).eigenvalues().minCoeff() > -1e-7);
    const Matrix truth = x * x.transpose();
    CHECK(weighted_l1(V.V, sol.X.X) <= weighted_l1(V.V, truth) + 1e-6);
}

TEST_CASE("trace-weighted program with identity weight")
{
    // trace(X) equals a[0] on the feasible set, so any feasible point is optimal.
    Vector x(5);
    x << 1, -0.5, 0, 0.25, 0;
    const Autocorrelation a = autocorrelation(x);
    SolverSettings s;
    s.primal_tol = s.dual_tol = 1e-9;
    const SdpSolution sol = solve_trace_weighted_sdp(a, Matrix::Identity(5, 5), s);
    CHECK(sol.X.X.trace() == doctest::Approx(a.a[0]).epsilon(1e-6));
    CHECK((diagonal_sums(sol.X.X) - a.a).norm() < 1e-6);
}

TEST_CASE("log-det linearization objective does not increase")
{
    // X_t is feasible for the next program, so trace(W_{t+1} X_{t+1}) <= trace(W_{t+1} X_t).
    Vector x = Vector::Zero(10);
    x[1] = 0.9;
    x[2] = 0.4;
    x[6] = 0.7;
    const Autocorrelation a = autocorrelation(x);
    Rng rng(12);
    Matrix W = Matrix::Identity(10, 10) + WeightMatrix::uniform_random(10, rng).V;
    SolverSettings s;
    s.primal_tol = s.dual_tol = 1e-9;
    Matrix X = solve_trace_weighted_sdp(a, W, s).X.X;
    for (int t = 0; t < 4; ++t) {
        W = logdet_reweight(X / a.a[0], 1e-2);
        W /= W.cwiseAbs().maxCoeff();
        const Matrix next = solve_trace_weighted_sdp(a, W, s).X.X;
        CHECK((W * next).trace() <= (W * X).trace() + 1e-6);
        X = next;
    }
}

TEST_CASE("log-det reweighting")
{
    Rng rng(8);
    const Matrix B = random_matrix(6, 6, rng);
    const Matrix X = B * B.transpose();
    const Matrix W = logdet_reweight(X, 0.1);
    CHECK((W * (X + 0.1 * Matrix::Identity(6, 6)) - Matrix::Identity(6, 6)).norm() < 1e-9);
    CHECK_THROWS_AS(logdet_reweight(X, 0.0), std::invalid_argument);
}

TEST_CASE("partial Fourier operator")
{
    Rng rng(9);
    const PartialFourierOperator op = PartialFourierOperator::random(20, 7, rng);
    CHECK(op.rows() == 7);
    CHECK(std::is_sorted(op.omega.begin(), op.omega.end()));
    CHECK(std::adjacent_find(op.omega.begin(), op.omega.end()) == op.omega.end());
    Vector v(20);
    for (Index j = 0; j < 20; ++j) v[j] = std::sin(0.3 * double(j)) + 0.1 * double(j);
    const CVector full = dft(v);
    const CVector part = op.apply(v);
    for (Index r = 0; r < op.rows(); ++r) CHECK(std::abs(part[r] - full[op.omega[std::size_t(r)]]) < 1e-12);
    CHECK(PartialFourierOperator::full(4).omega == std::vector<Index>{0, 1, 2, 3});
    CHECK_THROWS_AS(PartialFourierOperator::random(4, 5, rng), std::invalid_argument);
}

TEST_CASE("basis pursuit")
{
    SUBCASE("all frequencies give the inverse transform")
    {
        Vector x(9);
        x << 1, 0, -2, 0.5, 0, 0, 3, 0, 0.25;
        const BasisPursuitSolution sol = solve_basis_pursuit(PartialFourierOperator::full(9), dft(x));
        CHECK((sol.x - x).norm() < 1e-9);
    }
    SUBCASE("sparse signal from half the frequencies")
    {
        const Index n = 64;
        Vector x = Vector::Zero(n);
        x[5] = 1.0;
        x[17] = -0.7;
        x[40] = 0.4;
        Rng rng(10);
        const PartialFourierOperator op = PartialFourierOperator::random(n, 32, rng);
        SolverSettings s;
        s.max_iters = 20000;
        s.primal_tol = s.dual_tol = 1e-10;
        const BasisPursuitSolution sol = solve_basis_pursuit(op, op.apply(x), s);
        CHECK(sol.status == SolveStatus::Converged);
        CHECK((sol.x - x).norm() < 1e-6);
        CHECK(sol.residual < 1e-8);
    }
    SUBCASE("zero measurements")
    {
        Rng rng(11);
        const PartialFourierOperator op = PartialFourierOperator::random(16, 5, rng);
        CHECK(solve_basis_pursuit(op, CVector::Zero(5)).x.isZero());
    }
    SUBCASE("inconsistent data for a real signal")
    {
        PartialFourierOperator op{8, {0, 1, 7}};
        CVector s(3);
        s << Complex(1, 1), Complex(1, 0), Complex(1, 0);
        CHECK_THROWS_AS(solve_basis_pursuit(op, s), std::invalid_argument);
        s << Complex(1, 0), Complex(1, 2), Complex(1, 2); // bins 1 and 7 must be conjugate
        CHECK_THROWS_AS(solve_basis_pursuit(op, s), std::invalid_argument);
        CHECK_THROWS_AS(solve_basis_pursuit(op, CVector::Zero(2)), std::invalid_argument);
    }
}
