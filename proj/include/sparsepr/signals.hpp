#ifndef SPARSEPR_SIGNALS_HPP
#define SPARSEPR_SIGNALS_HPP

#include "sparsepr/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace sparsepr {

/// Real length-n signal with its support recorded explicitly.
///
/// `values[j] == 0` exactly for every `j` outside `support`; the support is
/// kept sorted.
struct SparseSignal
{
    Vector values;
    std::vector<Index> support;

    Index size() const { return values.size(); }
    Index sparsity() const { return static_cast<Index>(support.size()); }

    /// Builds a signal from dense values; the support is the set of exact
    /// nonzeros.
    static SparseSignal from_dense(const Vector& values);
};

/// Circular autocorrelation `a[i] = sum_j x[j] x[(j+i) mod n]`.
struct Autocorrelation
{
    Vector a;

    Index size() const { return a.size(); }
};

/// Squared DFT magnitudes `p[i] = |(F x)_i|^2`.
struct PowerSpectralDensity
{
    Vector p;

    Index size() const { return p.size(); }
};

/// Outcome of matching two signals modulo shift, reversal and global sign.
struct EquivalenceReport
{
    bool matched = false;
    Index shift = 0;
    bool flipped = false;
    int sign = 1;
    double residual = 0.0;
};

/// Success tolerance used by the benchmark (relative l2).
inline constexpr double kEquivalenceTolerance = 1e-3;

Autocorrelation autocorrelation(const Vector& x);
inline Autocorrelation autocorrelation(const SparseSignal& x) { return autocorrelation(x.values); }

/// O(n^2) evaluation of the circular definition; used as a cross-check.
Autocorrelation autocorrelation_direct(const Vector& x);

PowerSpectralDensity psd(const Vector& x);
inline PowerSpectralDensity psd(const SparseSignal& x) { return psd(x.values); }

/// Real part of the DFT of an autocorrelation, i.e. the spectrum it encodes.
PowerSpectralDensity psd_from_autocorrelation(const Autocorrelation& a);

/// Inverse of the above: `a = Re(idft(p))`.
Autocorrelation autocorrelation_from_psd(const PowerSpectralDensity& p);

// Trivial-ambiguity group actions.
Vector circular_shift(const Vector& x, Index shift);
/// `reverse(x)[j] = x[(n - j) mod n]`.
Vector reverse(const Vector& x);

/// Searches the 4n transforms `sign * shift(flip?(xhat))` for the one closest
/// to `x`. The residual is `||T(xhat) - x|| / max(||x||, ||xhat||)` so the
/// relation is symmetric. Throws `std::invalid_argument` on length mismatch.
EquivalenceReport equivalent(const Vector& x, const Vector& xhat, double tol = kEquivalenceTolerance);

/// Uniform random k-subset support with values i.i.d. uniform on (0, 1].
SparseSignal random_sparse_signal(Index n, Index k, std::uint64_t seed);
SparseSignal random_sparse_signal(Index n, Index k, Rng& rng);

/// Fraction of `trials` random k-sparse instances whose autocorrelation has no
/// (numerically) zero lag. Trial `t` uses seed `hash_combine(seed, t)`.
double autocorrelation_support_density(Index n, Index k, int trials, std::uint64_t seed);

/// True when every lag of `a` exceeds `1e-12 * a[0]` in magnitude.
bool has_full_support(const Autocorrelation& a);

void to_json(nlohmann::json& j, const SparseSignal& s);
void from_json(const nlohmann::json& j, SparseSignal& s);

} // namespace sparsepr

#endif // SPARSEPR_SIGNALS_HPP
