#include "sparsepr/acceptance.hpp"

#include "sparsepr/combinatorial.hpp"
#include "sparsepr/conic.hpp"
#include "sparsepr/retrieval.hpp"
#include "sparsepr/signals.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sparsepr::acceptance {

namespace {

using Clock = std::chrono::steady_clock;

bool quick(const Options& opt) { return opt.suite == "quick"; }

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void log(const Options& opt, const std::string& msg)
{
    if (opt.log) *opt.log << msg << std::endl;
}

std::string fmt(double v, int precision = 3)
{
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

SweepOptions sweep_options(const Options& opt, const std::string& label)
{
    SweepOptions so;
    so.threads = opt.threads;
    if (opt.log) {
        so.progress = [&opt, label](std::size_t done, std::size_t total) {
            if (done % 50 == 0 || done == total) log(opt, "  " + label + ": " + std::to_string(done) + "/" + std::to_string(total));
        };
    }
    return so;
}

SweepResult sweep(const Options& opt, const ExperimentConfig& cfg, const std::string& label)
{
    const SweepOptions so = sweep_options(opt, label);
    if (opt.artifact_dir) return run_sweep(cfg, *opt.artifact_dir / label, so);
    SweepResult r;
    r.records = run_trials(cfg, so);
    r.summary = summarize(r.records);
    return r;
}

CriterionResult start(int id, std::string title)
{
    CriterionResult r;
    r.id = id;
    r.title = std::move(title);
    return r;
}

} // namespace

CriterionResult oracle_equivalence(const Options&)
{
    const auto t0 = Clock::now();
    CriterionResult r = start(1, "autocorrelation and PSD oracles (n <= 8, grid {0, 0.5, 1})");
    const double grid[3] = {0.0, 0.5, 1.0};
    double worst_a = 0.0;
    double worst_p = 0.0;
    long signals = 0;
    for (Index n = 1; n <= 8; ++n) {
        long total = 1;
        for (Index j = 0; j < n; ++j) total *= 3;
        Vector x(n);
        for (long code = 0; code < total; ++code) {
            long c = code;
            for (Index j = 0; j < n; ++j, c /= 3) x[j] = grid[c % 3];
            const Vector a = autocorrelation(x).a;
            worst_a = std::max(worst_a, (a - autocorrelation_direct(x).a).cwiseAbs().maxCoeff());
            worst_p = std::max(worst_p, (dft(a).real() - psd(x).p).cwiseAbs().maxCoeff());
            worst_p = std::max(worst_p, dft(a).imag().cwiseAbs().maxCoeff());
            ++signals;
        }
    }
    r.passed = worst_a <= 1e-10 && worst_p <= 1e-9;
    r.detail = std::to_string(signals) + " signals, max autocorrelation error " + fmt(worst_a) + ", max spectrum error " +
               fmt(worst_p);
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult solver_battery(const Options& opt)
{
    const auto t0 = Clock::now();
    CriterionResult r = start(2, "PSD projection, diagonal-sum projection, full-sample basis pursuit");
    Rng rng(hash_combine(opt.base_seed, 2));
    std::normal_distribution<double> g(0.0, 1.0);
    const Index d = 16;

    double idem = 0.0;
    double min_eig = 0.0;
    double kkt = 0.0;
    for (int t = 0; t < 1000; ++t) {
        Matrix A(d, d);
        for (Index i = 0; i < d; ++i)
            for (Index j = 0; j < d; ++j) A(i, j) = g(rng);
        const Matrix X = 0.5 * (A + A.transpose());
        const Matrix P = project_psd(X);
        const double scale = std::max(1.0, X.norm());
        idem = std::max(idem, (project_psd(P) - P).norm() / scale);
        // Nearest point: P psd, X - P negative semidefinite, and the two orthogonal.
        Eigen::SelfAdjointEigenSolver<Matrix> ep(P);
        Eigen::SelfAdjointEigenSolver<Matrix> er(X - P);
        min_eig = std::min(min_eig, ep.eigenvalues().minCoeff() / scale);
        min_eig = std::min(min_eig, -er.eigenvalues().maxCoeff() / scale);
        kkt = std::max(kkt, std::abs((P.cwiseProduct(X - P)).sum()) / (scale * scale));
    }

    double diag = 0.0;
    for (int t = 0; t < 100; ++t) {
        Matrix X(d, d);
        Vector a(d);
        for (Index i = 0; i < d; ++i) {
            a[i] = g(rng);
            for (Index j = 0; j < d; ++j) X(i, j) = g(rng);
        }
        diag = std::max(diag, (diagonal_sums(project_diagonal_sums(X, a)) - a).cwiseAbs().maxCoeff());
    }

    double bp = 0.0;
    for (Index n : {8, 16, 31, 32}) {
        for (int t = 0; t < 10; ++t) {
            Vector x = Vector::Zero(n);
            for (Index j = 0; j < n; ++j)
                if (uniform01(rng) < 0.3) x[j] = g(rng);
            const CVector s = dft(x);
            const BasisPursuitSolution sol = solve_basis_pursuit(PartialFourierOperator::full(n), s);
            const Vector inv = idft(s).real();
            bp = std::max(bp, (sol.x - inv).norm() / std::max(1.0, inv.norm()));
        }
    }

    r.passed = idem <= 1e-9 && min_eig >= -1e-9 && kkt <= 1e-9 && diag <= 1e-12 && bp <= 1e-9;
    r.detail = "idempotence " + fmt(idem) + ", min eigen " + fmt(min_eig) + ", orthogonality " + fmt(kkt) +
               ", diagonal-sum residual " + fmt(diag) + ", basis pursuit error " + fmt(bp);
    r.seconds = seconds_since(t0);
    return r;
}

SweepRun run_n32_sweep(const Options& opt)
{
    ExperimentConfig cfg;
    cfg.n = {32};
    cfg.k = quick(opt) ? std::vector<Index>{1, 2, 4, 8} : std::vector<Index>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    cfg.algorithms = {"algorithm1", "gs", "one_shot_sdp"};
    cfg.trials = quick(opt) ? 4 : 100;
    cfg.base_seed = opt.base_seed;
    log(opt, "criterion 3: running n=32 sweep (" + std::to_string(cfg.trials) + " trials per cell)");
    SweepRun run;
    run.summary = sweep(opt, cfg, "n32_sweep").summary;
    run.trials = cfg.trials;
    return run;
}

CriterionResult reweighting_dominance(const Options& opt, const SweepRun& run)
{
    const auto t0 = Clock::now();
    CriterionResult r = start(3, "n=32 reweighted success >= 0.9 for k <= 4 and dominance over GS and one-shot");
    bool ok = true;
    std::ostringstream detail;
    detail << "algorithm1/gs/one_shot by k:";
    std::vector<Index> ks;
    for (const auto& row : run.summary.rows)
        if (std::find(ks.begin(), ks.end(), row.k) == ks.end()) ks.push_back(row.k);
    for (Index k : ks) {
        const SummaryRow* a1 = run.summary.find(32, k, "algorithm1");
        const SummaryRow* gs = run.summary.find(32, k, "gs");
        const SummaryRow* os = run.summary.find(32, k, "one_shot_sdp");
        if (!a1 || !gs || !os) {
            ok = false;
            continue;
        }
        if (k <= 4 && a1->success_rate < 0.9) ok = false;
        if (a1->success_rate < gs->success_rate || a1->success_rate < os->success_rate) ok = false;
        detail << ' ' << k << '=' << fmt(a1->success_rate, 2) << '/' << fmt(gs->success_rate, 2) << '/'
               << fmt(os->success_rate, 2);
    }
    r.passed = ok && !ks.empty();
    r.detail = detail.str() + (quick(opt) ? " (quick suite)" : "");
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult beyond_sqrt_n(const Options& opt, const SweepRun& run)
{
    const auto t0 = Clock::now();
    CriterionResult r = start(4, "n=32, k=8: reweighted beats one-shot by >= 0.2");
    const SummaryRow* a1 = run.summary.find(32, 8, "algorithm1");
    const SummaryRow* os = run.summary.find(32, 8, "one_shot_sdp");
    if (a1 && os) {
        r.passed = a1->success_rate - os->success_rate >= 0.2;
        r.detail = "algorithm1 " + fmt(a1->success_rate, 2) + " vs one-shot " + fmt(os->success_rate, 2) + " over " +
                   std::to_string(run.trials) + " paired seeds";
    } else {
        r.detail = "k=8 cells missing from the sweep";
    }
    if (quick(opt)) r.detail += " (quick suite)";
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult partial_psd_stage_one(const Options& opt)
{
    const auto t0 = Clock::now();
    const Index n = 64;
    const Index k = 3;
    const auto m = static_cast<Index>(std::ceil(static_cast<double>(k * k) * std::log(static_cast<double>(n))));
    CriterionResult r = start(5, "partial PSD stage one: n=64, k=3, m=" + std::to_string(m) + " exact to 1e-6");
    const int trials = quick(opt) ? 10 : 100;
    int exact = 0;
    for (int t = 0; t < trials; ++t) {
        const std::uint64_t seed = instance_seed(opt.base_seed, n, k, t);
        const SparseSignal x = random_sparse_signal(n, k, seed);
        const PowerSpectralDensity p = psd(x);
        Rng rng(hash_combine(seed, hash_string("omega")));
        const PartialFourierOperator op = PartialFourierOperator::random(n, m, rng);
        CVector s(m);
        for (Index i = 0; i < m; ++i) s[i] = p.p[op.omega[static_cast<std::size_t>(i)]];
        const BasisPursuitSolution bp = solve_basis_pursuit(op, s, stage1_defaults());
        const Vector a = autocorrelation(x).a;
        const Vector ahat = project_autocorrelation(bp.x).a;
        if ((ahat - a).norm() <= 1e-6 * a.norm()) ++exact;
    }
    const int need = (9 * trials + 9) / 10;
    r.passed = exact >= need;
    r.detail = std::to_string(exact) + "/" + std::to_string(trials) + " exact (need " + std::to_string(need) + ")";
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult autocorrelation_density(const Options& opt)
{
    const auto t0 = Clock::now();
    const Index n = 256;
    const auto k_dense = static_cast<Index>(std::ceil(2.0 * std::sqrt(n * std::log(static_cast<double>(n)))));
    const auto k_sparse = static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n))));
    CriterionResult r = start(6, "autocorrelation support density at n=256 (k=" + std::to_string(k_dense) + " and k=" +
                                     std::to_string(k_sparse) + ")");
    const int trials = 200;
    const double dense = autocorrelation_support_density(n, k_dense, trials, hash_combine(opt.base_seed, 6));
    const double sparse = autocorrelation_support_density(n, k_sparse, trials, hash_combine(opt.base_seed, 7));
    r.passed = dense >= 0.99 && sparse <= 0.5;
    r.detail = "full-support fraction " + fmt(dense) + " (need >= 0.99), " + fmt(sparse) + " (need <= 0.5)";
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult designed_recovery(const Options& opt)
{
    const auto t0 = Clock::now();
    const Index k = 8;
    auto m_for = [&](Index n) {
        return static_cast<Index>(std::ceil(8.0 * static_cast<double>(k) * std::log(static_cast<double>(n))));
    };
    CriterionResult r = start(7, "designed measurements: n=256, k=8, m=" + std::to_string(m_for(256)) +
                                     "; support, end-to-end, O(mn) timing");
    const int trials = quick(opt) ? 20 : 100;
    int support_ok = 0;
    int recovered = 0;
    for (int t = 0; t < trials; ++t) {
        const Index n = 256;
        const ComplexSparseSignal x = random_complex_sparse_signal(n, k, instance_seed(opt.base_seed, n, k, t));
        const auto e = design_measurements(n, k, m_for(n), derive_seed(opt.base_seed, n, k, "combinatorial", t));
        const PhaselessObservations obs = measure(x, e);
        if (recover_support(obs, e) == x.support) ++support_ok;
        try {
            if (global_phase_residual(x.values, recover(obs, e).values) <= 1e-8) ++recovered;
        } catch (const CombinatorialError&) {
        }
    }

    // Timing: per-call time of recover() at k = 8, m = ceil(8k ln n).
    std::vector<double> mn;
    std::vector<double> times;
    for (Index n : {128, 256, 512}) {
        const Index m = m_for(n);
        const ComplexSparseSignal x = random_complex_sparse_signal(n, k, hash_combine(opt.base_seed, n));
        const auto e = design_measurements(n, k, m, hash_combine(opt.base_seed, 2 * n + 1));
        const PhaselessObservations obs = measure(x, e);
        std::vector<double> batches;
        for (int b = 0; b < 7; ++b) {
            int calls = 0;
            const auto tb = Clock::now();
            do {
                volatile Index sink = recover(obs, e).support.size();
                (void)sink;
                ++calls;
            } while (seconds_since(tb) < 0.05);
            batches.push_back(seconds_since(tb) / calls);
        }
        std::nth_element(batches.begin(), batches.begin() + 3, batches.end());
        mn.push_back(static_cast<double>(m * n));
        times.push_back(batches[3]);
    }
    // Least-squares slope through the origin, then every point within 2x.
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < mn.size(); ++i) {
        num += mn[i] * times[i];
        den += mn[i] * mn[i];
    }
    const double slope = num / den;
    bool linear = true;
    std::ostringstream timing;
    for (std::size_t i = 0; i < mn.size(); ++i) {
        const double ratio = times[i] / (slope * mn[i]);
        linear = linear && ratio >= 0.5 && ratio <= 2.0;
        timing << (i ? ", " : "") << fmt(ratio, 2);
    }

    const int need_support = (99 * trials + 99) / 100;
    const int need_recovery = (95 * trials + 99) / 100;
    r.passed = support_ok >= need_support && recovered >= need_recovery && linear;
    r.detail = "support " + std::to_string(support_ok) + "/" + std::to_string(trials) + ", recovered " +
               std::to_string(recovered) + "/" + std::to_string(trials) + ", time/fit at n=128,256,512: " + timing.str();
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult designed_invariants(const Options& opt)
{
    const auto t0 = Clock::now();
    const Index n = 64;
    const Index k = 4;
    const auto m = static_cast<Index>(std::ceil(8.0 * static_cast<double>(k) * std::log(static_cast<double>(n))));
    CriterionResult r = start(8, "designed-measurement invariants on random instances (n=64, k=4, m=" +
                                     std::to_string(m) + ")");
    const int trials = quick(opt) ? 50 : 500;
    int phase_ok = 0;
    int recovered = 0;
    int outer_ok = 0;
    int sound = 0;
    Rng rng(hash_combine(opt.base_seed, 8));
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (int t = 0; t < trials; ++t) {
        const ComplexSparseSignal x = random_complex_sparse_signal(n, k, instance_seed(opt.base_seed + 8, n, k, t));
        const auto e = design_measurements(n, k, m, derive_seed(opt.base_seed + 8, n, k, "combinatorial", t));
        const CVector rotated = std::polar(1.0, angle(rng)) * x.values;
        const PhaselessObservations obs = measure(x, e);
        const PhaselessObservations obs_rot = measure(rotated, e);

        const auto support = recover_support(obs, e);
        if (std::includes(support.begin(), support.end(), x.support.begin(), x.support.end())) ++sound;

        std::optional<CVector> a, b;
        std::string ea, eb;
        try {
            a = recover(obs, e).values;
        } catch (const CombinatorialError& err) {
            ea = to_string(err.kind());
        }
        try {
            b = recover(obs_rot, e).values;
        } catch (const CombinatorialError& err) {
            eb = to_string(err.kind());
        }
        if (a && b) {
            if (global_phase_residual(*a, *b) <= 1e-8) ++phase_ok;
        } else if (!a && !b && ea == eb) {
            ++phase_ok;
        }
        if (a && global_phase_residual(x.values, *a) <= 1e-8) {
            ++recovered;
            const CMatrix xx = x.values * x.values.adjoint();
            const CMatrix hh = *a * a->adjoint();
            if ((hh - xx).norm() <= 1e-7 * xx.norm()) ++outer_ok;
        }
    }
    r.passed = phase_ok == trials && outer_ok == recovered && sound == trials;
    r.detail = "phase invariance " + std::to_string(phase_ok) + "/" + std::to_string(trials) + ", outer product " +
               std::to_string(outer_ok) + "/" + std::to_string(recovered) + " recovered, support soundness " +
               std::to_string(sound) + "/" + std::to_string(trials);
    r.seconds = seconds_since(t0);
    return r;
}

CriterionResult determinism(const Options& opt)
{
    const auto t0 = Clock::now();
    CriterionResult r = start(9, "identical config and seed reproduce the trial and summary CSVs");
    ExperimentConfig cfg;
    cfg.n = {16};
    cfg.k = {1, 2, 3};
    cfg.algorithms = known_algorithms();
    cfg.trials = quick(opt) ? 2 : 4;
    cfg.base_seed = opt.base_seed;
    cfg.overrides["combinatorial"] = nlohmann::json{{"c", 8.0}};

    auto render = [&](unsigned threads) {
        SweepOptions so;
        so.threads = threads;
        const auto records = run_trials(cfg, so);
        std::ostringstream trials;
        write_trials_csv(trials, records);
        std::ostringstream summary;
        for (const auto& row : summarize(records).rows) {
            // Drop the mean wall-time column.
            const std::string line = format_summary_row(row);
            summary << line.substr(0, line.rfind(',')) << '\n';
        }
        return std::pair{strip_timing(trials.str()), summary.str()};
    };
    const auto first = render(1);
    const auto second = render(std::max(2u, opt.threads));
    r.passed = first == second;
    const auto rows = std::count(first.first.begin(), first.first.end(), '\n') - 1;
    r.detail = std::to_string(rows) + " trial rows compared across a 1-thread and a multi-thread run";
    if (opt.artifact_dir) {
        std::filesystem::create_directories(*opt.artifact_dir);
        std::ofstream(*opt.artifact_dir / "determinism_trials.csv") << first.first;
    }
    r.seconds = seconds_since(t0);
    return r;
}

std::string format_line(const CriterionResult& r)
{
    std::ostringstream os;
    os << "criterion " << r.id << ": " << (r.passed ? "PASS" : "FAIL") << "  " << r.title << "  [" << r.detail << "] ("
       << fmt(r.seconds, 4) << " s)";
    return os.str();
}

std::vector<CriterionResult> run_all(const Options& opt, std::ostream& out)
{
    if (opt.suite != "full" && opt.suite != "quick") throw ConfigError("unknown acceptance suite '" + opt.suite + "'");
    std::vector<CriterionResult> results;
    auto emit = [&](CriterionResult r) {
        out << format_line(r) << std::endl;
        results.push_back(std::move(r));
    };
    emit(oracle_equivalence(opt));
    emit(solver_battery(opt));
    const auto t3 = Clock::now();
    const SweepRun n32 = run_n32_sweep(opt);
    const double sweep_seconds = seconds_since(t3);
    CriterionResult c3 = reweighting_dominance(opt, n32);
    c3.seconds += sweep_seconds;
    emit(std::move(c3));
    emit(beyond_sqrt_n(opt, n32));
    emit(partial_psd_stage_one(opt));
    emit(autocorrelation_density(opt));
    emit(designed_recovery(opt));
    emit(designed_invariants(opt));
    emit(determinism(opt));
    return results;
}

} // namespace sparsepr::acceptance
