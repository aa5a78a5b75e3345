#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sparsepr/signals.hpp"

#include <cmath>
#include <numbers>

using namespace sparsepr;

namespace {

// Textbook DFT, independent of the FFT backend.
CVector naive_dft(const Vector& x)
{
    const Index n = x.size();
    CVector y(n);
    for (Index w = 0; w < n; ++w) {
        Complex acc{0.0, 0.0};
        for (Index j = 0; j < n; ++j) acc += x[j] * std::polar(1.0, -2.0 * std::numbers::pi * double(w * j) / double(n));
        y[w] = acc;
    }
    return y;
}

Vector random_dense(Index n, std::uint64_t seed)
{
    Rng rng(seed);
    std::normal_distribution<double> g;
    Vector x(n);
    for (Index j = 0; j < n; ++j) x[j] = g(rng);
    return x;
}

} // namespace

TEST_CASE("autocorrelation of a hand example")
{
    Vector x(4);
    x << 1, 2, 0, 0;
    Vector expected(4);
    expected << 5, 2, 0, 2;
    CHECK((autocorrelation(x).a - expected).norm() < 1e-12);
    CHECK((autocorrelation_direct(x).a - expected).norm() == 0.0);
}

TEST_CASE("fft autocorrelation matches the definition")
{
    for (Index n : {1, 2, 7, 16, 33, 64}) {
        const Vector x = random_dense(n, 100 + n);
        CHECK((autocorrelation(x).a - autocorrelation_direct(x).a).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("psd against a naive DFT and the autocorrelation spectrum")
{
    const Vector x = random_dense(24, 3);
    const Vector p_ref = naive_dft(x).cwiseAbs2();
    CHECK((psd(x).p - p_ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((psd_from_autocorrelation(autocorrelation(x)).p - p_ref).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((autocorrelation_from_psd(psd(x)).a - autocorrelation_direct(x).a).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("zero signal has zero autocorrelation")
{
    CHECK(autocorrelation(Vector::Zero(9)).a.isZero());
    CHECK(psd(Vector::Zero(9)).p.isZero());
}

TEST_CASE("shift and reverse conventions")
{
    Vector x(5);
    x << 1, 2, 3, 4, 5;
    Vector shifted(5);
    shifted << 4, 5, 1, 2, 3;
    CHECK(circular_shift(x, 2) == shifted);
    CHECK(circular_shift(x, -3) == shifted);
    Vector flipped(5);
    flipped << 1, 5, 4, 3, 2;
    CHECK(reverse(x) == flipped);
    CHECK(reverse(reverse(x)) == x);
}

TEST_CASE("autocorrelation is invariant under the trivial ambiguities")
{
    const Vector x = random_dense(11, 5);
    const Vector a = autocorrelation(x).a;
    for (Index s = 0; s < 11; ++s) {
        CHECK((autocorrelation(circular_shift(x, s)).a - a).norm() < 1e-10);
        CHECK((autocorrelation(-reverse(circular_shift(x, s))).a - a).norm() < 1e-10);
    }
}

TEST_CASE("equivalence finds the transform and is symmetric")
{
    const Vector x = random_sparse_signal(20, 4, 9).values;
    const Vector y = -circular_shift(reverse(x), 7);
    const EquivalenceReport r = equivalent(x, y);
    CHECK(r.matched);
    CHECK(r.residual < 1e-12);
    CHECK(equivalent(y, x).matched);

    const Vector other = random_sparse_signal(20, 4, 10).values;
    CHECK_FALSE(equivalent(x, other).matched);
    CHECK(equivalent(x, other).residual == doctest::Approx(equivalent(other, x).residual).epsilon(1e-12));
    CHECK_THROWS_AS(equivalent(x, Vector::Zero(19)), std::invalid_argument);
}

TEST_CASE("equivalence tolerance boundary")
{
    Vector x = Vector::Zero(8);
    x[0] = 1.0;
    Vector y = x;
    y[3] = 0.5e-3;
    CHECK(equivalent(x, y).matched);
    y[3] = 2e-3;
    CHECK_FALSE(equivalent(x, y).matched);
}

TEST_CASE("random sparse signals")
{
    const SparseSignal s = random_sparse_signal(50, 6, 42);
    CHECK(s.sparsity() == 6);
    CHECK(std::is_sorted(s.support.begin(), s.support.end()));
    Index nonzeros = 0;
    for (Index j = 0; j < s.size(); ++j) {
        if (s.values[j] != 0.0) {
            ++nonzeros;
            CHECK(s.values[j] > 0.0);
            CHECK(s.values[j] <= 1.0);
        }
    }
    CHECK(nonzeros == 6);
    CHECK(random_sparse_signal(50, 6, 42).values == s.values);
    CHECK(random_sparse_signal(50, 6, 43).values != s.values);
    CHECK(random_sparse_signal(5, 5, 1).sparsity() == 5);
    CHECK_THROWS_AS(random_sparse_signal(5, 6, 1), std::invalid_argument);
    CHECK_THROWS_AS(random_sparse_signal(5, 0, 1), std::invalid_argument);
}

TEST_CASE("support of random signals is uniform")
{
    // Each index should appear with probability k/n.
    const Index n = 10, k = 3;
    const int trials = 20000;
    std::vector<int> hits(n, 0);
    for (int t = 0; t < trials; ++t)
        for (Index j : random_sparse_signal(n, k, 1000 + t).support) ++hits[j];
    const double p = double(k) / double(n);
    const double sigma = std::sqrt(trials * p * (1 - p));
    for (Index j = 0; j < n; ++j) CHECK(std::abs(hits[j] - trials * p) < 4 * sigma);
}

TEST_CASE("full autocorrelation support")
{
    CHECK(has_full_support(autocorrelation(Vector::Ones(6))));
    Vector spike = Vector::Zero(6);
    spike[2] = 1.0;
    CHECK_FALSE(has_full_support(autocorrelation(spike)));
    // Sparse regime: 16 points have at most 240 differences, fewer than 255 lags.
    CHECK(autocorrelation_support_density(256, 16, 20, 1) == 0.0);
    CHECK(autocorrelation_support_density(256, 76, 50, 1) >= 0.95);
}

TEST_CASE("json round trip and validation")
{
    const SparseSignal s = random_sparse_signal(12, 3, 8);
    nlohmann::json j = s;
    const SparseSignal back = j.get<SparseSignal>();
    CHECK(back.values == s.values);
    CHECK(back.support == s.support);

    nlohmann::json bad = j;
    bad["n"] = 11;
    CHECK_THROWS(bad.get<SparseSignal>());
    bad = j;
    bad["support"] = std::vector<Index>{0};
    CHECK_THROWS(bad.get<SparseSignal>());
}
