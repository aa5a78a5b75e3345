#include "sparsepr/conic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparsepr {

namespace {

double soft(double v, double t)
{
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Solves min sum t_j |x_j| + 1/2 sum (x_j - v_j)^2 s.t. sum x_j = target in
// place. x_j(mu) = soft(v_j + mu, t_j) is nondecreasing and piecewise linear in
// mu, so the root is bracketed between sorted breakpoints and read off the
// linear piece.
void prox_group(std::vector<double>& v, const std::vector<double>& t, double target, std::vector<double>& breaks)
{
    const std::size_t m = v.size();
    auto total = [&](double mu) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += soft(v[j] + mu, t[j]);
        return s;
    };

    breaks.clear();
    for (std::size_t j = 0; j < m; ++j) {
        breaks.push_back(-v[j] - t[j]);
        breaks.push_back(-v[j] + t[j]);
    }
    std::sort(breaks.begin(), breaks.end());

    double mu;
    const double g_lo = total(breaks.front());
    const double g_hi = total(breaks.back());
    if (target <= g_lo) {
        // Below every breakpoint all entries are on their negative branch.
        mu = breaks.front() - (g_lo - target) / static_cast<double>(m);
    } else if (target >= g_hi) {
        mu = breaks.back() + (target - g_hi) / static_cast<double>(m);
    } else {
        std::size_t lo = 0, hi = breaks.size() - 1;
        double glo = g_lo, ghi = g_hi;
        while (hi - lo > 1) {
            const std::size_t mid = (lo + hi) / 2;
            const double gm = total(breaks[mid]);
            if (gm <= target) {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
                ghi = gm;
            }
        }
        mu = ghi > glo ? breaks[lo] + (target - glo) * (breaks[hi] - breaks[lo]) / (ghi - glo) : breaks[lo];
    }
    for (std::size_t j = 0; j < m; ++j) v[j] = soft(v[j] + mu, t[j]);
}

void symmetrize(Matrix& X)
{
    X = (0.5 * (X + X.transpose())).eval();
}

} // namespace

Vector diagonal_sums(const Matrix& X)
{
    const Index n = X.rows();
    Vector s = Vector::Zero(n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) s[i] += X(j, (j + i) % n);
    }
    return s;
}

Matrix prox_diagonal_sums(const Matrix& M, const Matrix& T, const Vector& a)
{
    const Index n = M.rows();
    if (M.cols() != n || T.rows() != n || T.cols() != n || a.size() != n) {
        throw std::invalid_argument("prox_diagonal_sums: dimension mismatch");
    }
    Matrix out(n, n);
    std::vector<double> v(static_cast<std::size_t>(n)), t(static_cast<std::size_t>(n)), breaks;
    breaks.reserve(2 * static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            v[static_cast<std::size_t>(j)] = M(j, (j + i) % n);
            t[static_cast<std::size_t>(j)] = T(j, (j + i) % n);
        }
        prox_group(v, t, a[i], breaks);
        for (Index j = 0; j < n; ++j) out(j, (j + i) % n) = v[static_cast<std::size_t>(j)];
    }
    return out;
}

WeightMatrix WeightMatrix::uniform_random(Index n, Rng& rng, double lo, double hi)
{
    std::uniform_real_distribution<double> dist(lo, hi);
    Matrix V(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) V(i, j) = V(j, i) = dist(rng);
    }
    return {V};
}

bool WeightMatrix::valid() const
{
    return V.rows() == V.cols() && V.allFinite() && (V.array() >= 0.0).all() && V.isApprox(V.transpose(), 1e-12);
}

bool SolverSettings::valid() const
{
    return rho > 0 && max_iters > 0 && primal_tol > 0 && dual_tol > 0 && logdet_epsilon > 0 && over_relaxation > 0 &&
           over_relaxation < 2 && rank_one_exit_tol >= 0 && rank_one_ratio > 0;
}

std::string to_string(SolveStatus status)
{
    switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIters: return "max_iters";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::RankOne: return "rank_one";
    }
    return "unknown";
}

bool is_feasible_autocorrelation(const Autocorrelation& a, double tol)
{
    const Index n = a.size();
    if (n == 0 || !a.a.allFinite()) return false;
    const double scale = std::max(1.0, a.a.cwiseAbs().maxCoeff());
    for (Index i = 1; i < n; ++i) {
        if (std::abs(a.a[i] - a.a[(n - i) % n]) > tol * scale) return false;
    }
    const Vector spectrum = dft(a.a).real();
    return spectrum.minCoeff() >= -tol * scale * static_cast<double>(n);
}

SdpSolution solve_lifted_sdp(const Autocorrelation& a, const LiftedObjective& objective,
                             const SolverSettings& settings, const TraceCallback& trace)
{
    const Index n = a.size();
    if (n == 0) throw std::invalid_argument("solve_lifted_sdp: empty autocorrelation");
    if (!settings.valid()) throw std::invalid_argument("solve_lifted_sdp: invalid settings");
    const bool has_abs = objective.abs_weights.size() > 0;
    const bool has_linear = objective.linear_weights.size() > 0;
    if (has_abs && (objective.abs_weights.rows() != n || objective.abs_weights.cols() != n)) {
        throw std::invalid_argument("solve_lifted_sdp: weight matrix dimension mismatch");
    }
    if (has_linear && (objective.linear_weights.rows() != n || objective.linear_weights.cols() != n)) {
        throw std::invalid_argument("solve_lifted_sdp: linear weight dimension mismatch");
    }

    SdpSolution sol;
    sol.X.X = Matrix::Zero(n, n);

    if (!is_feasible_autocorrelation(a)) {
        sol.status = SolveStatus::Infeasible;
        sol.X.eigen_ratio = 1.0;
        sol.primal_residual = std::numeric_limits<double>::infinity();
        return sol;
    }
    const double scale = a.a[0];
    if (scale <= 0.0) {
        // Nonnegative spectrum with a[0] = 0 forces a = 0, hence X = 0.
        sol.status = SolveStatus::Converged;
        return sol;
    }
    const Vector target = a.a / scale;

    const Matrix zeros = Matrix::Zero(n, n);
    const Matrix& V = has_abs ? objective.abs_weights : zeros;
    const Matrix& L = has_linear ? objective.linear_weights : zeros;

    Matrix X(n, n), Y = Matrix::Zero(n, n), U = Matrix::Zero(n, n), Xh(n, n), Yprev(n, n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(n);
    Vector lambda(n);
    double rho = settings.rho;
    const double alpha = settings.over_relaxation;
    double ratio = 1.0;

    constexpr int kStallWindow = 2000;
    double checkpoint_primal = std::numeric_limits<double>::infinity();

    auto top_ratio = [&]() {
        if (n == 1) return 0.0;
        const double l1 = lambda[n - 1];
        return l1 > 0.0 ? lambda[n - 2] / l1 : 1.0;
    };

    int it = 0;
    double primal = 0.0, dual = 0.0;
    sol.status = SolveStatus::MaxIters;
    for (; it < settings.max_iters; ++it) {
        X = prox_diagonal_sums(Y - U - L / rho, V / rho, target);
        symmetrize(X);
        Xh = alpha * X + (1.0 - alpha) * Y;

        Yprev = Y;
        es.compute(Xh + U);
        lambda = es.eigenvalues().cwiseMax(0.0);
        Y = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
        symmetrize(Y);
        ratio = top_ratio();

        U += Xh - Y;

        primal = (X - Y).norm();
        dual = rho * (Y - Yprev).norm();
        if (trace) trace({it, primal, dual, ratio});

        if (primal <= settings.primal_tol && dual <= settings.dual_tol) {
            sol.status = SolveStatus::Converged;
            ++it;
            break;
        }

        if (settings.rank_one_exit_tol > 0.0 && it % 10 == 9 && ratio <= settings.rank_one_ratio) {
            const Vector factor = es.eigenvectors().col(n - 1) * std::sqrt(lambda[n - 1]);
            const double err = (autocorrelation(factor).a - target).norm() / target.norm();
            if (err <= settings.rank_one_exit_tol) {
                sol.status = SolveStatus::RankOne;
                ++it;
                break;
            }
        }

        if ((it + 1) % kStallWindow == 0) {
            if (primal > 1e-3 && primal > 0.99 * checkpoint_primal) {
                sol.status = SolveStatus::Infeasible;
                ++it;
                break;
            }
            checkpoint_primal = primal;
        }

        if (settings.adaptive_rho && it % 3 == 2) {
            // Residual balancing; U is the scaled dual and rescales with rho.
            if (primal > 100.0 * dual) {
                rho *= 2.0;
                U /= 2.0;
            } else if (dual > 100.0 * primal) {
                rho /= 2.0;
                U *= 2.0;
            }
        }
    }

    sol.iterations = it;
    sol.primal_residual = primal;
    sol.dual_residual = dual;
    sol.X.X = scale * Y;
    sol.X.eigen_ratio = ratio;
    return sol;
}

SdpSolution solve_weighted_l1_sdp(const Autocorrelation& a, const WeightMatrix& V, const SolverSettings& settings,
                                  const TraceCallback& trace)
{
    if (!V.valid()) throw std::invalid_argument("solve_weighted_l1_sdp: weights must be symmetric and nonnegative");
    return solve_lifted_sdp(a, {V.V, Matrix()}, settings, trace);
}

SdpSolution solve_trace_weighted_sdp(const Autocorrelation& a, const Matrix& W, const SolverSettings& settings,
                                     const TraceCallback& trace)
{
    return solve_lifted_sdp(a, {Matrix(), W}, settings, trace);
}

Matrix logdet_reweight(const Matrix& X, double epsilon)
{
    if (!(epsilon > 0.0)) throw std::invalid_argument("logdet_reweight: epsilon must be positive");
    if (X.rows() != X.cols()) throw std::invalid_argument("logdet_reweight: matrix must be square");
    const Index n = X.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(X + epsilon * Matrix::Identity(n, n));
    const Vector inv = es.eigenvalues().cwiseMax(epsilon).cwiseInverse();
    Matrix W = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    symmetrize(W);
    return W;
}

CVector PartialFourierOperator::apply(const Vector& v) const
{
    if (v.size() != n) throw std::invalid_argument("PartialFourierOperator::apply: length mismatch");
    const CVector full = dft(v);
    CVector out(rows());
    for (Index r = 0; r < rows(); ++r) out[r] = full[omega[static_cast<std::size_t>(r)]];
    return out;
}

PartialFourierOperator PartialFourierOperator::random(Index n, Index m, Rng& rng)
{
    if (m < 0 || m > n) throw std::invalid_argument("PartialFourierOperator::random: need 0 <= m <= n");
    std::vector<Index> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
    for (Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Index> pick(i, n - 1);
        std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    PartialFourierOperator op{n, std::vector<Index>(pool.begin(), pool.begin() + m)};
    std::sort(op.omega.begin(), op.omega.end());
    return op;
}

PartialFourierOperator PartialFourierOperator::full(Index n)
{
    PartialFourierOperator op{n, std::vector<Index>(static_cast<std::size_t>(n))};
    std::iota(op.omega.begin(), op.omega.end(), Index{0});
    return op;
}

BasisPursuitSolution solve_basis_pursuit(const PartialFourierOperator& op, const CVector& s,
                                         const SolverSettings& settings)
{
    const Index n = op.n;
    const Index m = op.rows();
    if (s.size() != m) throw std::invalid_argument("solve_basis_pursuit: measurement length mismatch");
    if (!settings.valid()) throw std::invalid_argument("solve_basis_pursuit: invalid settings");

    // Pin every selected bin and its conjugate partner, checking that the
    // data can come from a real vector.
    std::vector<int> pinned(static_cast<std::size_t>(n), -1);
    CVector data = CVector::Zero(n);
    const double s_scale = std::max(1.0, s.cwiseAbs().maxCoeff());
    const double consistency_tol = 1e-9 * s_scale;
    for (Index r = 0; r < m; ++r) {
        const Index w = op.omega[static_cast<std::size_t>(r)];
        if (w < 0 || w >= n) throw std::invalid_argument("solve_basis_pursuit: frequency out of range");
        const Index partner = (n - w) % n;
        const Complex value = s[r];
        for (auto [bin, val] : {std::pair{w, value}, std::pair{partner, std::conj(value)}}) {
            auto& slot = pinned[static_cast<std::size_t>(bin)];
            if (slot >= 0 && std::abs(data[bin] - val) > consistency_tol) {
                throw std::invalid_argument("solve_basis_pursuit: inconsistent measurements for a real signal");
            }
            slot = static_cast<int>(r);
            data[bin] = val;
        }
    }

    BasisPursuitSolution sol;
    // Scale so that the thresholds act on O(1) entries.
    const double scale = s.size() > 0 ? std::max(s.cwiseAbs().maxCoeff(), 1e-300) : 1.0;
    if (m == 0 || s.cwiseAbs().maxCoeff() == 0.0) {
        sol.x = Vector::Zero(n);
        sol.status = SolveStatus::Converged;
        return sol;
    }
    const CVector target = data / scale;

    auto project = [&](const Vector& z) {
        CVector spectrum = dft(z);
        for (Index w = 0; w < n; ++w) {
            if (pinned[static_cast<std::size_t>(w)] >= 0) spectrum[w] = target[w];
        }
        return Vector(idft(spectrum).real());
    };

    Vector z = Vector::Zero(n), u = Vector::Zero(n), v(n), vh(n), zprev(n);
    double rho = settings.rho;
    const double alpha = settings.over_relaxation;
    double primal = 0.0, dual = 0.0;
    int it = 0;
    sol.status = SolveStatus::MaxIters;
    for (; it < settings.max_iters; ++it) {
        v = project(z - u);
        vh = alpha * v + (1.0 - alpha) * z;
        zprev = z;
        const Vector w = vh + u;
        z = (w.array().abs() - 1.0 / rho).max(0.0).matrix().cwiseProduct(w.cwiseSign());
        u += vh - z;

        primal = (v - z).norm();
        dual = rho * (z - zprev).norm();
        if (primal <= settings.primal_tol && dual <= settings.dual_tol) {
            sol.status = SolveStatus::Converged;
            ++it;
            break;
        }
        if (settings.adaptive_rho && it % 3 == 2) {
            if (primal > 100.0 * dual) {
                rho *= 2.0;
                u /= 2.0;
            } else if (dual > 100.0 * primal) {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }

    sol.iterations = it;
    sol.primal_residual = primal;
    sol.x = scale * project(z);
    sol.residual = (op.apply(sol.x) - s).norm() / std::max(1.0, s.norm());
    return sol;
}

} // namespace sparsepr
