#include "sparsepr/signals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace sparsepr {

SparseSignal SparseSignal::from_dense(const Vector& values)
{
    SparseSignal s;
    s.values = values;
    for (Index j = 0; j < values.size(); ++j) {
        if (values[j] != 0.0) s.support.push_back(j);
    }
    return s;
}

Autocorrelation autocorrelation(const Vector& x)
{
    const CVector y = dft(x);
    const CVector a = idft(CVector(y.cwiseAbs2().cast<Complex>()));
    return {a.real()};
}

Autocorrelation autocorrelation_direct(const Vector& x)
{
    const Index n = x.size();
    Vector a = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) a[i] += x[j] * x[(j + i) % n];
    }
    return {a};
}

PowerSpectralDensity psd(const Vector& x)
{
    return {dft(x).cwiseAbs2()};
}

PowerSpectralDensity psd_from_autocorrelation(const Autocorrelation& a)
{
    return {dft(a.a).real()};
}

Autocorrelation autocorrelation_from_psd(const PowerSpectralDensity& p)
{
    return {idft(CVector(p.p.cast<Complex>())).real()};
}

Vector circular_shift(const Vector& x, Index shift)
{
    const Index n = x.size();
    Vector out(n);
    if (n == 0) return out;
    const Index s = ((shift % n) + n) % n;
    for (Index j = 0; j < n; ++j) out[(j + s) % n] = x[j];
    return out;
}

Vector reverse(const Vector& x)
{
    const Index n = x.size();
    Vector out(n);
    for (Index j = 0; j < n; ++j) out[j] = x[(n - j) % n];
    return out;
}

EquivalenceReport equivalent(const Vector& x, const Vector& xhat, double tol)
{
    if (x.size() != xhat.size()) throw std::invalid_argument("equivalent: length mismatch");
    const Index n = x.size();
    EquivalenceReport best;
    best.residual = std::numeric_limits<double>::infinity();
    const double scale = std::max(x.norm(), xhat.norm());
    if (n == 0 || scale == 0.0) {
        best.residual = 0.0;
        best.matched = true;
        return best;
    }

    // ||T y - x||^2 = ||y||^2 + ||x||^2 - 2 sign <shift(y), x>, so only the
    // cross-correlation is needed per shift.
    const double energy = x.squaredNorm() + xhat.squaredNorm();
    for (bool flip : {false, true}) {
        const Vector y = flip ? reverse(xhat) : xhat;
        for (Index s = 0; s < n; ++s) {
            double dot = 0.0;
            for (Index j = 0; j < n; ++j) dot += y[j] * x[(j + s) % n];
            for (int sign : {1, -1}) {
                const double d2 = std::max(energy - 2.0 * sign * dot, 0.0);
                const double r = std::sqrt(d2) / scale;
                if (r < best.residual) {
                    best.residual = r;
                    best.shift = s;
                    best.flipped = flip;
                    best.sign = sign;
                }
            }
        }
    }
    // Recompute the winner directly; the expanded form loses digits near 0.
    const Vector y = best.flipped ? reverse(xhat) : xhat;
    best.residual = (best.sign * circular_shift(y, best.shift) - x).norm() / scale;
    best.matched = best.residual <= tol;
    return best;
}

SparseSignal random_sparse_signal(Index n, Index k, Rng& rng)
{
    if (n < 1) throw std::invalid_argument("random_sparse_signal: n must be positive");
    if (k < 1 || k > n) throw std::invalid_argument("random_sparse_signal: need 1 <= k <= n");

    // Partial Fisher-Yates for a uniform k-subset.
    std::vector<Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < k; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<Index> support(pool.begin(), pool.begin() + k);
    std::sort(support.begin(), support.end());

    SparseSignal s;
    s.values = Vector::Zero(n);
    for (Index j : support) s.values[j] = uniform_open_closed(rng);
    s.support = std::move(support);
    return s;
}

SparseSignal random_sparse_signal(Index n, Index k, std::uint64_t seed)
{
    Rng rng(seed);
    return random_sparse_signal(n, k, rng);
}

bool has_full_support(const Autocorrelation& a)
{
    if (a.size() == 0) return false;
    const double threshold = 1e-12 * std::abs(a.a[0]);
    return (a.a.array().abs() > threshold).all();
}

double autocorrelation_support_density(Index n, Index k, int trials, std::uint64_t seed)
{
    if (trials < 1) throw std::invalid_argument("autocorrelation_support_density: trials must be >= 1");
    int full = 0;
    for (int t = 0; t < trials; ++t) {
        const SparseSignal x = random_sparse_signal(n, k, hash_combine(seed, static_cast<std::uint64_t>(t)));
        if (has_full_support(autocorrelation(x))) ++full;
    }
    return static_cast<double>(full) / trials;
}

void to_json(nlohmann::json& j, const SparseSignal& s)
{
    j = nlohmann::json{{"n", s.size()},
                       {"support", s.support},
                       {"values", std::vector<double>(s.values.data(), s.values.data() + s.values.size())}};
}

void from_json(const nlohmann::json& j, SparseSignal& s)
{
    const auto n = j.at("n").get<Index>();
    const auto values = j.at("values").get<std::vector<double>>();
    if (static_cast<Index>(values.size()) != n) throw std::invalid_argument("signal json: values length != n");
    s.values = Eigen::Map<const Vector>(values.data(), n);
    s.support = j.at("support").get<std::vector<Index>>();
    std::sort(s.support.begin(), s.support.end());
    for (Index idx : s.support) {
        if (idx < 0 || idx >= n) throw std::invalid_argument("signal json: support index out of range");
    }
    for (Index idx = 0; idx < n; ++idx) {
        if (s.values[idx] != 0.0 && !std::binary_search(s.support.begin(), s.support.end(), idx)) {
            throw std::invalid_argument("signal json: nonzero value outside support");
        }
    }
}

} // namespace sparsepr
