#ifndef SPARSEPR_COMMON_HPP
#define SPARSEPR_COMMON_HPP

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <complex>
#include <cstdint>
#include <random>
#include <string_view>

namespace sparsepr {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

/// Generator used everywhere a seed is accepted. A given seed yields the
/// same stream on every run of the same build.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) noexcept
{
    return mix64(seed ^ mix64(value));
}

/// FNV-1a, stable across platforms (std::hash is not).
constexpr std::uint64_t hash_string(std::string_view s) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Uniform draw on (0, 1].
inline double uniform_open_closed(Rng& rng)
{
    return 1.0 - std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

inline double uniform01(Rng& rng)
{
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// Thin wrappers over Eigen's FFT module. The forward transform is unscaled,
// the inverse carries the 1/n factor. Length 0 and 1 are identities and are
// handled here because the kissfft backend cannot factor n = 1.

inline CVector dft(const CVector& x)
{
    if (x.size() <= 1) return x;
    thread_local Eigen::FFT<double> fft;
    CVector out;
    fft.fwd(out, x);
    return out;
}

inline CVector dft(const Vector& x)
{
    return dft(CVector(x.cast<Complex>()));
}

inline CVector idft(const CVector& y)
{
    if (y.size() <= 1) return y;
    thread_local Eigen::FFT<double> fft;
    CVector out;
    fft.inv(out, y);
    return out;
}

} // namespace sparsepr

#endif // SPARSEPR_COMMON_HPP
