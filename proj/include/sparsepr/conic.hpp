#ifndef SPARSEPR_CONIC_HPP
#define SPARSEPR_CONIC_HPP

#include "sparsepr/common.hpp"
#include "sparsepr/signals.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsepr {

/// Entrywise `sign(M) * max(|M| - T, 0)`.
template <typename DerivedM, typename DerivedT>
auto soft_threshold(const Eigen::MatrixBase<DerivedM>& M, const Eigen::MatrixBase<DerivedT>& T)
{
    using Scalar = typename DerivedM::Scalar;
    using Plain = typename DerivedM::PlainObject;
    if (M.rows() != T.rows() || M.cols() != T.cols()) throw std::invalid_argument("soft_threshold: shape mismatch");
    Plain out = (M.array().abs() - T.array()).max(Scalar(0)).matrix();
    return Plain(out.cwiseProduct(M.cwiseSign()));
}

/// Frobenius-nearest positive semidefinite matrix: clamp the negative
/// eigenvalues of a symmetric input to zero.
template <typename Derived>
typename Derived::PlainObject project_psd(const Eigen::MatrixBase<Derived>& X)
{
    using Plain = typename Derived::PlainObject;
    if (X.rows() != X.cols()) throw std::invalid_argument("project_psd: matrix must be square");
    if (!X.allFinite()) throw std::runtime_error("project_psd: non-finite input");
    Eigen::SelfAdjointEigenSolver<Plain> es(X);
    if (es.info() != Eigen::Success) throw std::runtime_error("project_psd: eigendecomposition failed");
    const auto lambda = es.eigenvalues().cwiseMax(0).eval();
    return es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
}

/// Euclidean projection onto `{X : sum_j X[j, (j+i) mod n] = a[i] for all i}`.
/// Each circular diagonal receives the uniform correction
/// `(a[i] - current sum) / n`.
template <typename Derived>
typename Derived::PlainObject project_diagonal_sums(const Eigen::MatrixBase<Derived>& X, const Vector& a)
{
    const Index n = X.rows();
    if (X.cols() != n || a.size() != n) throw std::invalid_argument("project_diagonal_sums: dimension mismatch");
    typename Derived::PlainObject out = X;
    for (Index i = 0; i < n; ++i) {
        double sum = 0.0;
        for (Index j = 0; j < n; ++j) sum += out(j, (j + i) % n);
        const double shift = (a[i] - sum) / static_cast<double>(n);
        for (Index j = 0; j < n; ++j) out(j, (j + i) % n) += shift;
    }
    return out;
}

/// Sum of each circular diagonal of `X`.
Vector diagonal_sums(const Matrix& X);

/// argmin_X sum T_ij |X_ij| + 1/2 ||X - M||_F^2 subject to the circular
/// diagonal sums of X equal `a`. Solved exactly per diagonal by a 1-D search
/// over the multiplier of that diagonal's constraint. With `T = 0` this is
/// `project_diagonal_sums`.
Matrix prox_diagonal_sums(const Matrix& M, const Matrix& T, const Vector& a);

/// Nonnegative symmetric weights of the `trace(V |X|)` objective.
struct WeightMatrix
{
    Matrix V;

    static WeightMatrix uniform_random(Index n, Rng& rng, double lo = 0.0, double hi = 1.0);
    static WeightMatrix zeros(Index n) { return {Matrix::Zero(n, n)}; }
    bool valid() const;
};

struct LiftedMatrix
{
    Matrix X;
    double eigen_ratio = 0.0; ///< lambda_2 / lambda_1 of the final PSD projection
};

struct SolverSettings
{
    double rho = 1.0;
    int max_iters = 20000;
    double primal_tol = 1e-7;
    double dual_tol = 1e-7;
    double logdet_epsilon = 1e-2;
    double over_relaxation = 1.6;
    bool adaptive_rho = true;
    /// When positive, stop as soon as the PSD iterate is numerically rank one
    /// (eigen ratio below `rank_one_ratio`) and its factor reproduces the
    /// constraints to this relative accuracy.
    double rank_one_exit_tol = 0.0;
    double rank_one_ratio = 1e-3;

    bool valid() const;
};

enum class SolveStatus { Converged, MaxIters, Infeasible, RankOne };

std::string to_string(SolveStatus status);

struct IterationTrace
{
    int iteration;
    double primal;
    double dual;
    double ratio;
};

using TraceCallback = std::function<void(const IterationTrace&)>;

/// Residuals are reported on the problem normalized to `a[0] = 1`.
struct SdpSolution
{
    LiftedMatrix X;
    SolveStatus status = SolveStatus::MaxIters;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    int iterations = 0;
};

/// Objective `trace(V |X|) + trace(L X)`; `L` may be empty.
struct LiftedObjective
{
    Matrix abs_weights;
    Matrix linear_weights;
};

/// Lifted program over the PSD cone with circular diagonal-sum constraints,
/// solved by over-relaxed two-block ADMM. Block one is the exact prox of the
/// weighted l1 term restricted to the affine set, block two is the PSD
/// projection.
SdpSolution solve_lifted_sdp(const Autocorrelation& a, const LiftedObjective& objective,
                             const SolverSettings& settings, const TraceCallback& trace = {});

/// minimize trace(V |X|) s.t. diagonal sums = a, X psd.
SdpSolution solve_weighted_l1_sdp(const Autocorrelation& a, const WeightMatrix& V,
                                  const SolverSettings& settings = {}, const TraceCallback& trace = {});

/// minimize trace(W X) s.t. diagonal sums = a, X psd (one log-det step).
SdpSolution solve_trace_weighted_sdp(const Autocorrelation& a, const Matrix& W,
                                     const SolverSettings& settings = {}, const TraceCallback& trace = {});

/// Gradient of log det(X + eps I) at X: `(X + eps I)^{-1}`.
Matrix logdet_reweight(const Matrix& X, double epsilon);

/// Whether `a` can be the diagonal-sum vector of some PSD matrix: it must be
/// circularly symmetric with a nonnegative spectrum.
bool is_feasible_autocorrelation(const Autocorrelation& a, double tol = 1e-9);

/// Rows `omega` of the n-point DFT.
struct PartialFourierOperator
{
    Index n = 0;
    std::vector<Index> omega;

    Index rows() const { return static_cast<Index>(omega.size()); }
    CVector apply(const Vector& v) const;

    /// m distinct frequencies sampled uniformly without replacement.
    static PartialFourierOperator random(Index n, Index m, Rng& rng);
    static PartialFourierOperator full(Index n);
};

struct BasisPursuitSolution
{
    Vector x;
    SolveStatus status = SolveStatus::MaxIters;
    double residual = 0.0;        ///< ||DFT_omega(x) - s|| / max(1, ||s||)
    double primal_residual = 0.0; ///< splitting gap at exit, normalized scale
    int iterations = 0;
};

/// Minimum-l1 real vector whose DFT agrees with `s` on `op.omega`. Throws
/// `std::invalid_argument` if `s` is not the restriction of a real signal's
/// spectrum (conjugate pairs disagree, or a self-conjugate bin is not real).
BasisPursuitSolution solve_basis_pursuit(const PartialFourierOperator& op, const CVector& s,
                                         const SolverSettings& settings = {});

} // namespace sparsepr

#endif // SPARSEPR_CONIC_HPP
