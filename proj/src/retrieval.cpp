#include "sparsepr/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

namespace sparsepr {

namespace {

using Clock = std::chrono::steady_clock;

double psd_mismatch(const Vector& estimate, const PowerSpectralDensity& p)
{
    const double denom = std::max(p.p.norm(), 1e-300);
    return (psd(estimate).p - p.p).norm() / denom;
}

void validate_psd(const PowerSpectralDensity& p)
{
    const Index n = p.size();
    if (n == 0) throw std::invalid_argument("power spectral density is empty");
    if (!p.p.allFinite()) throw std::invalid_argument("power spectral density has non-finite entries");
    const double scale = std::max(1.0, p.p.cwiseAbs().maxCoeff());
    if (p.p.minCoeff() < -1e-9 * scale) throw std::invalid_argument("power spectral density has negative entries");
    for (Index i = 1; i < n; ++i) {
        if (std::abs(p.p[i] - p.p[(n - i) % n]) > 1e-9 * scale) {
            throw std::invalid_argument("power spectral density is not symmetric");
        }
    }
}

void finish(RecoveryResult& r, const PowerSpectralDensity& p, const std::optional<Vector>& truth,
            double psd_match_tol, Clock::time_point start)
{
    r.psd_residual = psd_mismatch(r.estimate, p);
    if (truth) {
        const EquivalenceReport eq = equivalent(*truth, r.estimate, kEquivalenceTolerance);
        r.equivalence_residual = eq.residual;
        r.success = eq.matched;
    } else {
        r.success = r.psd_residual <= psd_match_tol;
    }
    r.wall_time = Clock::now() - start;
}

Matrix normalized_logdet_weight(const Matrix& X, double scale, double epsilon)
{
    Matrix W = logdet_reweight(X / scale, epsilon);
    const double m = W.cwiseAbs().maxCoeff();
    if (m > 0.0) W /= m;
    return W;
}

std::vector<char> support_mask(const Vector& x1, double threshold_ratio)
{
    const double threshold = threshold_ratio * x1.cwiseAbs().maxCoeff();
    std::vector<char> mask(static_cast<std::size_t>(x1.size()));
    for (Index i = 0; i < x1.size(); ++i) mask[static_cast<std::size_t>(i)] = std::abs(x1[i]) > threshold;
    return mask;
}

// True when every entry of x above `ratio * max|x|` in magnitude has the same sign.
bool single_signed(const Vector& x, double ratio)
{
    const double floor = ratio * x.cwiseAbs().maxCoeff();
    return (x.array() >= -floor).all() || (x.array() <= floor).all();
}

// Circular autocorrelation of x restricted to the index set S, and its
// Jacobian with respect to the entries of x on S.
void restricted_autocorrelation(const Vector& x, const std::vector<Index>& S, Vector& a, Matrix& J)
{
    const Index n = x.size();
    a.setZero(n);
    J.setZero(n, static_cast<Index>(S.size()));
    for (std::size_t c = 0; c < S.size(); ++c) {
        const Index j = S[c];
        for (Index d = 0; d < n; ++d) {
            a[d] += x[j] * x[(j + d) % n];
            J(d, static_cast<Index>(c)) = x[(j + d) % n] + x[(j - d + n) % n];
        }
    }
}

void polish_into(RecoveryResult& result, const PowerSpectralDensity& p, const RetrievalConfig& cfg)
{
    if (!cfg.polish || result.estimate.size() == 0) return;
    const Vector polished = polish_estimate(result.estimate, p, cfg.polish_support_ratio);
    if (psd_mismatch(polished, p) < psd_mismatch(result.estimate, p)) result.estimate = polished;
}

// Outer loop shared by the reweighted and the one-shot variants.
RecoveryResult reweighted_loop(const PowerSpectralDensity& p, const RetrievalConfig& cfg,
                               const std::optional<Vector>& truth, int outer_limit)
{
    const auto start = Clock::now();
    cfg.validate();
    validate_psd(p);
    const Index n = p.size();
    const Autocorrelation a = autocorrelation_from_psd(p);
    const double scale = std::max(a.a[0], 1e-300);

    Rng rng(cfg.seed);
    Matrix V = WeightMatrix::uniform_random(n, rng, cfg.weight_lo, cfg.weight_hi).V;
    Matrix W;

    RecoveryResult result;
    std::vector<char> previous_support;
    double best_residual = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < outer_limit; ++outer) {
        LiftedObjective objective{V, W.size() > 0 ? Matrix(cfg.logdet_weight * W) : Matrix()};
        const SdpSolution sol = solve_lifted_sdp(a, objective, cfg.solver);
        if (sol.status == SolveStatus::Infeasible) throw InfeasibleInput("lifted program is infeasible for this spectrum");

        const Vector x1 = rank1_extract(sol.X.X);
        result.outer_iterations = outer + 1;
        Vector candidate = x1;
        double residual = psd_mismatch(x1, p);
        const bool rank_one = sol.X.eigen_ratio <= cfg.rank1_ratio_tol && residual <= cfg.psd_match_tol;
        if (rank_one && cfg.polish) {
            // A rank-one point can fit the spectrum to the solver's accuracy and
            // still be a different signal. Exact data is fit exactly by the
            // truth, so only an estimate that polishes to an exact fit is kept.
            const Vector z = polish_estimate(x1, p, cfg.polish_support_ratio);
            const double polished = psd_mismatch(z, p);
            if (polished < residual) {
                candidate = z;
                residual = polished;
            }
        }
        if (residual < best_residual) {
            best_residual = residual;
            result.estimate = candidate;
            result.final_eigen_ratio = sol.X.eigen_ratio;
        }
        const bool sign_ok = !cfg.nonnegative || single_signed(candidate, cfg.polish_support_ratio);
        if (rank_one && sign_ok && (!cfg.polish || residual <= cfg.exact_fit_tol)) {
            result.estimate = candidate;
            result.final_eigen_ratio = sol.X.eigen_ratio;
            result.note = "rank_one";
            break;
        }
        if (outer + 1 == outer_limit) {
            result.note = "max_outer_iters";
            break;
        }
        // A repeated support estimate means the reweighting has locked onto a
        // pattern; start over from fresh weights instead of cycling.
        std::vector<char> support = support_mask(x1, cfg.support_threshold_ratio);
        if (cfg.redraw_on_stall && support == previous_support) {
            V = WeightMatrix::uniform_random(n, rng, cfg.weight_lo, cfg.weight_hi).V;
            W.resize(0, 0);
            previous_support.clear();
            ++result.restarts;
            continue;
        }
        previous_support = std::move(support);
        if (cfg.logdet_weight > 0.0) W = normalized_logdet_weight(sol.X.X, scale, cfg.solver.logdet_epsilon);
        update_weights(V, x1, cfg.support_threshold_ratio, cfg.weight_lo, cfg.weight_hi, rng);
    }
    polish_into(result, p, cfg);
    finish(result, p, truth, cfg.psd_match_tol, start);
    return result;
}

} // namespace

void RetrievalConfig::validate() const
{
    if (max_outer_iters < 1) throw std::invalid_argument("RetrievalConfig: max_outer_iters must be >= 1");
    if (!(support_threshold_ratio > 0.0 && support_threshold_ratio < 1.0)) {
        throw std::invalid_argument("RetrievalConfig: support threshold ratio must lie in (0, 1)");
    }
    if (!(weight_lo >= 0.0 && weight_hi >= weight_lo)) throw std::invalid_argument("RetrievalConfig: bad weight range");
    if (!(rank1_ratio_tol > 0.0) || !(psd_match_tol > 0.0)) throw std::invalid_argument("RetrievalConfig: bad tolerance");
    if (!(logdet_weight >= 0.0)) throw std::invalid_argument("RetrievalConfig: logdet weight must be nonnegative");
    if (!(polish_support_ratio >= 0.0 && polish_support_ratio < 1.0) || !(exact_fit_tol > 0.0))
        throw std::invalid_argument("RetrievalConfig: bad polish settings");
    if (!solver.valid()) throw std::invalid_argument("RetrievalConfig: invalid solver settings");
}

Vector rank1_extract(const Matrix& X)
{
    const Index n = X.rows();
    if (X.cols() != n) throw std::invalid_argument("rank1_extract: matrix must be square");
    if (n == 0) return Vector();
    Eigen::SelfAdjointEigenSolver<Matrix> es(X);
    const double lambda = std::max(es.eigenvalues()[n - 1], 0.0);
    Vector v = es.eigenvectors().col(n - 1);
    const double cutoff = 1e-12 * v.cwiseAbs().maxCoeff();
    for (Index j = 0; j < n; ++j) {
        if (std::abs(v[j]) > cutoff) {
            if (v[j] < 0) v = -v;
            break;
        }
    }
    return std::sqrt(lambda) * v;
}

void update_weights(Matrix& V, const Vector& x1, double threshold_ratio, double lo, double hi, Rng& rng)
{
    const Index n = x1.size();
    if (V.rows() != n || V.cols() != n) throw std::invalid_argument("update_weights: dimension mismatch");
    const double threshold = threshold_ratio * x1.cwiseAbs().maxCoeff();
    std::uniform_real_distribution<double> dist(lo, hi);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            const bool on_support = std::abs(x1[i]) > threshold && std::abs(x1[j]) > threshold;
            V(i, j) = V(j, i) = on_support ? 0.0 : dist(rng);
        }
    }
}

RecoveryResult algorithm1(const PowerSpectralDensity& p, const RetrievalConfig& cfg, const std::optional<Vector>& truth)
{
    return reweighted_loop(p, cfg, truth, cfg.max_outer_iters);
}

RecoveryResult one_shot_weighted_l1(const PowerSpectralDensity& p, const RetrievalConfig& cfg,
                                    const std::optional<Vector>& truth)
{
    return reweighted_loop(p, cfg, truth, 1);
}

Vector polish_estimate(const Vector& x, const PowerSpectralDensity& p, double support_ratio, int max_iters)
{
    validate_psd(p);
    if (x.size() != p.size()) throw std::invalid_argument("polish_estimate: length mismatch");
    const double peak = x.cwiseAbs().maxCoeff();
    if (peak == 0.0) return x;

    std::vector<Index> S;
    Vector z = Vector::Zero(x.size());
    for (Index i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) > support_ratio * peak) {
            S.push_back(i);
            z[i] = x[i];
        }
    }
    const Vector target = autocorrelation_from_psd(p).a;
    Vector a;
    Matrix J;
    restricted_autocorrelation(z, S, a, J);
    double cost = (a - target).squaredNorm();
    double mu = 1e-3;
    for (int it = 0; it < max_iters && cost > 0.0; ++it) {
        const Matrix JtJ = J.transpose() * J;
        const Vector g = J.transpose() * (a - target);
        Matrix H = JtJ;
        H.diagonal() += mu * (JtJ.diagonal().array() + 1e-12 * target[0]).matrix();
        const Vector step = H.ldlt().solve(-g);

        Vector trial = z;
        for (std::size_t c = 0; c < S.size(); ++c) trial[S[c]] += step[static_cast<Index>(c)];
        Vector a_trial;
        Matrix J_trial;
        restricted_autocorrelation(trial, S, a_trial, J_trial);
        const double trial_cost = (a_trial - target).squaredNorm();
        if (trial_cost < cost) {
            const bool converged = cost - trial_cost <= 1e-15 * cost;
            z = std::move(trial);
            a = std::move(a_trial);
            J = std::move(J_trial);
            cost = trial_cost;
            mu = std::max(mu / 3.0, 1e-12);
            if (converged) break;
        } else {
            mu *= 4.0;
            if (mu > 1e12) break;
        }
    }
    return z;
}

RecoveryResult logdet_recovery(const PowerSpectralDensity& p, const RetrievalConfig& cfg,
                               const std::optional<Vector>& truth)
{
    const auto start = Clock::now();
    cfg.validate();
    validate_psd(p);
    const Index n = p.size();
    const Autocorrelation a = autocorrelation_from_psd(p);
    const double scale = std::max(a.a[0], 1e-300);

    // The identity start commutes with circular shifts, so every iterate would
    // stay shift invariant and never single out one shift of the signal. A
    // seeded random symmetric perturbation breaks that symmetry.
    Rng rng(cfg.seed);
    Matrix W = Matrix::Identity(n, n) + WeightMatrix::uniform_random(n, rng, cfg.weight_lo, cfg.weight_hi).V;
    W /= W.cwiseAbs().maxCoeff();
    RecoveryResult result;
    double best_residual = std::numeric_limits<double>::infinity();
    for (int outer = 0; outer < cfg.max_outer_iters; ++outer) {
        const SdpSolution sol = solve_trace_weighted_sdp(a, W, cfg.solver);
        if (sol.status == SolveStatus::Infeasible) throw InfeasibleInput("lifted program is infeasible for this spectrum");
        const Vector x1 = rank1_extract(sol.X.X);
        const double residual = psd_mismatch(x1, p);
        result.outer_iterations = outer + 1;
        if (residual < best_residual) {
            best_residual = residual;
            result.estimate = x1;
            result.final_eigen_ratio = sol.X.eigen_ratio;
        }
        if (sol.X.eigen_ratio <= cfg.rank1_ratio_tol && residual <= cfg.psd_match_tol) {
            result.estimate = x1;
            result.final_eigen_ratio = sol.X.eigen_ratio;
            result.note = "rank_one";
            break;
        }
        W = normalized_logdet_weight(sol.X.X, scale, cfg.solver.logdet_epsilon);
    }
    if (result.note.empty()) result.note = "max_outer_iters";
    polish_into(result, p, cfg);
    finish(result, p, truth, cfg.psd_match_tol, start);
    return result;
}

RecoveryResult gerchberg_saxton(const PowerSpectralDensity& p, const GsConfig& cfg, const std::optional<Vector>& truth)
{
    const auto start = Clock::now();
    validate_psd(p);
    if (cfg.k < 1) throw std::invalid_argument("gerchberg_saxton: k must be >= 1");
    if (cfg.iters < 1 || cfg.restarts < 1) throw std::invalid_argument("gerchberg_saxton: iters and restarts must be >= 1");
    const Index n = p.size();
    const Index k = std::min<Index>(cfg.k, n);
    const Vector magnitude = p.p.cwiseMax(0.0).cwiseSqrt();

    std::vector<Index> order(static_cast<std::size_t>(n));
    auto project = [&](Vector& x) {
        x = x.cwiseMax(0.0);
        if (k == n) return;
        std::iota(order.begin(), order.end(), Index{0});
        std::nth_element(order.begin(), order.begin() + k, order.end(), [&](Index l, Index r) {
            return x[l] > x[r] || (x[l] == x[r] && l < r);
        });
        for (auto it = order.begin() + k; it != order.end(); ++it) x[*it] = 0.0;
    };
    auto impose_magnitudes = [&](const Vector& x) {
        CVector y = dft(x);
        for (Index w = 0; w < n; ++w) {
            const double mag = std::abs(y[w]);
            y[w] = mag > 1e-300 ? y[w] * (magnitude[w] / mag) : Complex(magnitude[w], 0.0);
        }
        return Vector(idft(y).real());
    };

    Rng rng(cfg.seed);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    RecoveryResult result;
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < cfg.restarts; ++r) {
        CVector y(n);
        for (Index w = 0; w < n; ++w) y[w] = std::polar(magnitude[w], phase(rng));
        Vector x = idft(y).real();
        project(x);
        double residual = psd_mismatch(x, p);
        for (int it = 0; it < cfg.iters && residual > 1e-14; ++it) {
            x = impose_magnitudes(x);
            project(x);
            if (it % 50 == 49 || it + 1 == cfg.iters) residual = psd_mismatch(x, p);
        }
        residual = psd_mismatch(x, p);
        if (residual < best) {
            best = residual;
            result.estimate = x;
        }
        result.outer_iterations = r + 1;
        if (best <= 1e-12) break;
    }
    result.final_eigen_ratio = 0.0;
    result.note = "gs";
    finish(result, p, truth, 1e-3, start);
    return result;
}

Autocorrelation project_autocorrelation(const Vector& raw)
{
    const Vector sym = 0.5 * (raw + reverse(raw));
    const Vector spectrum = dft(sym).real().cwiseMax(0.0);
    return {idft(CVector(spectrum.cast<Complex>())).real()};
}

SolverSettings stage1_defaults()
{
    SolverSettings s;
    s.max_iters = 20000;
    s.primal_tol = 1e-10;
    s.dual_tol = 1e-10;
    return s;
}

PipelineResult partial_psd_pipeline(const PartialFourierOperator& op, const Vector& samples, Index k,
                                    const RetrievalConfig& cfg, const std::optional<Vector>& truth,
                                    const SolverSettings& stage1_settings)
{
    const auto start = Clock::now();
    if (op.rows() < 1) throw std::invalid_argument("partial_psd_pipeline: need at least one sample");
    if (samples.size() != op.rows()) throw std::invalid_argument("partial_psd_pipeline: sample count mismatch");
    if (k < 1) throw std::invalid_argument("partial_psd_pipeline: k must be >= 1");
    const Index n = op.n;

    PipelineResult out;
    out.basis_pursuit = solve_basis_pursuit(op, samples.cast<Complex>(), stage1_settings);

    out.stage1 = project_autocorrelation(out.basis_pursuit.x);
    const Vector& a = out.stage1.a;
    const Vector spectrum = psd_from_autocorrelation(out.stage1).p.cwiseMax(0.0);

    const bool converged = out.basis_pursuit.status == SolveStatus::Converged;
    const double a0 = a.size() > 0 ? a[0] : 0.0;
    const bool dominant = a0 > 0.0 && (a.cwiseAbs().array() <= a0 * (1.0 + 1e-9)).all();
    out.stage1_ok = converged && dominant && out.basis_pursuit.residual <= 1e-6;

    if (!out.stage1_ok) {
        RecoveryResult& r = out.recovery;
        r.estimate = Vector::Zero(n);
        r.success = false;
        r.note = converged ? "stage1_invalid_autocorrelation" : "stage1_not_converged";
        if (truth) r.equivalence_residual = equivalent(*truth, r.estimate).residual;
        r.wall_time = Clock::now() - start;
        return out;
    }

    out.recovery = algorithm1(PowerSpectralDensity{spectrum}, cfg, truth);
    out.recovery.wall_time = Clock::now() - start;
    return out;
}

} // namespace sparsepr
