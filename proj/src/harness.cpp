#include "sparsepr/harness.hpp"

#include "sparsepr/combinatorial.hpp"
#include "sparsepr/retrieval.hpp"
#include "sparsepr/signals.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

namespace sparsepr {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

template <typename T>
T take(const json& j, const char* key, T fallback)
{
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("override '") + key + "': " + e.what());
    }
}

void reject_unknown_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& algorithm)
{
    if (!j.is_object()) throw ConfigError("overrides for '" + algorithm + "' must be an object");
    for (const auto& [key, value] : j.items()) {
        const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!ok) throw ConfigError("unknown override '" + key + "' for algorithm '" + algorithm + "'");
    }
}

RetrievalConfig retrieval_config(const json& o, const std::string& algorithm, std::uint64_t seed)
{
    reject_unknown_keys(o,
                        {"max_outer_iters", "support_threshold_ratio", "logdet_weight", "rank1_ratio_tol",
                         "psd_match_tol", "solver_max_iters", "solver_tol", "redraw_on_stall", "polish", "nonnegative", "m", "stage1_max_iters"},
                        algorithm);
    if (algorithm != "partial_psd" && (o.contains("m") || o.contains("stage1_max_iters")))
        throw ConfigError("overrides 'm' and 'stage1_max_iters' only apply to partial_psd");
    RetrievalConfig cfg;
    cfg.seed = seed;
    cfg.max_outer_iters = take(o, "max_outer_iters", cfg.max_outer_iters);
    cfg.support_threshold_ratio = take(o, "support_threshold_ratio", cfg.support_threshold_ratio);
    cfg.logdet_weight = take(o, "logdet_weight", cfg.logdet_weight);
    cfg.rank1_ratio_tol = take(o, "rank1_ratio_tol", cfg.rank1_ratio_tol);
    cfg.psd_match_tol = take(o, "psd_match_tol", cfg.psd_match_tol);
    cfg.redraw_on_stall = take(o, "redraw_on_stall", cfg.redraw_on_stall);
    cfg.polish = take(o, "polish", cfg.polish);
    // Sweep instances are nonnegative, which the alternating projection
    // baseline also exploits.
    cfg.nonnegative = take(o, "nonnegative", true);
    cfg.solver.max_iters = take(o, "solver_max_iters", cfg.solver.max_iters);
    const double tol = take(o, "solver_tol", cfg.solver.primal_tol);
    cfg.solver.primal_tol = cfg.solver.dual_tol = tol;
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

GsConfig gs_config(const json& o, Index k, std::uint64_t seed)
{
    reject_unknown_keys(o, {"iters", "restarts"}, "gs");
    GsConfig cfg;
    cfg.k = static_cast<int>(k);
    cfg.seed = seed;
    cfg.iters = take(o, "iters", cfg.iters);
    cfg.restarts = take(o, "restarts", cfg.restarts);
    if (cfg.iters < 1 || cfg.restarts < 1) throw ConfigError("gs: iters and restarts must be >= 1");
    return cfg;
}

Index combinatorial_m(const json& o, Index n, Index k)
{
    reject_unknown_keys(o, {"m", "c"}, "combinatorial");
    if (o.contains("m")) {
        const Index m = take<Index>(o, "m", 0);
        if (m < 1) throw ConfigError("combinatorial: m must be >= 1");
        return m;
    }
    const double c = take(o, "c", 8.0);
    if (!(c > 0.0)) throw ConfigError("combinatorial: c must be positive");
    return std::max<Index>(1, static_cast<Index>(std::ceil(c * static_cast<double>(k) * std::log(static_cast<double>(n)))));
}

Index partial_m(const json& o, Index n, Index k)
{
    if (o.contains("m")) {
        const Index m = take<Index>(o, "m", 0);
        if (m < 1 || m > n) throw ConfigError("partial_psd: m must lie in [1, n]");
        return m;
    }
    const auto m = static_cast<Index>(std::ceil(static_cast<double>(k * k) * std::log(static_cast<double>(n))));
    return std::clamp<Index>(m, 1, n);
}

// Checks overrides without running anything.
void validate_overrides(const std::string& algorithm, const json& o)
{
    if (algorithm == "gs") {
        gs_config(o, 1, 0);
    } else if (algorithm == "combinatorial") {
        combinatorial_m(o, 2, 1);
    } else {
        retrieval_config(o, algorithm, 0);
        if (algorithm == "partial_psd" && o.contains("m") && take<Index>(o, "m", 0) < 1)
            throw ConfigError("partial_psd: m must be >= 1");
    }
}

void fill_from(TrialRecord& rec, const RecoveryResult& r)
{
    rec.success = r.success;
    rec.residual = r.equivalence_residual;
    rec.outer_iters = r.outer_iterations;
}

std::string format_double(const char* fmt, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::tuple<Index, Index, const std::string&, int> order_key(const TrialRecord& r)
{
    return {r.n, r.k, r.algorithm, r.trial};
}

} // namespace

const std::vector<std::string>& known_algorithms()
{
    static const std::vector<std::string> names{"algorithm1", "gs", "one_shot_sdp", "logdet", "partial_psd",
                                                "combinatorial"};
    return names;
}

bool is_known_algorithm(const std::string& name)
{
    const auto& names = known_algorithms();
    return std::find(names.begin(), names.end(), name) != names.end();
}

void ExperimentConfig::validate() const
{
    if (n.empty() || k.empty() || algorithms.empty()) throw ConfigError("config: n, k and algorithms must be nonempty");
    if (trials < 1) throw ConfigError("config: trials must be >= 1");
    for (Index v : n)
        if (v < 1) throw ConfigError("config: every n must be >= 1");
    for (Index v : k)
        if (v < 1) throw ConfigError("config: every k must be >= 1");
    for (Index nv : n)
        for (Index kv : k)
            if (kv > nv) throw ConfigError("config: k = " + std::to_string(kv) + " exceeds n = " + std::to_string(nv));
    std::set<std::string> seen;
    for (const auto& a : algorithms) {
        if (!is_known_algorithm(a)) throw ConfigError("config: unknown algorithm '" + a + "'");
        if (!seen.insert(a).second) throw ConfigError("config: algorithm '" + a + "' listed twice");
    }
    for (const auto& [name, o] : overrides) {
        if (!is_known_algorithm(name)) throw ConfigError("config: overrides for unknown algorithm '" + name + "'");
        validate_overrides(name, o);
    }
}

ExperimentConfig parse_config(const json& j)
{
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    static const std::set<std::string> allowed{"n", "k", "algorithms", "trials", "base_seed", "overrides", "output"};
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("config: unknown key '" + key + "'");

    ExperimentConfig cfg;
    try {
        auto as_list = [&](const char* key) {
            const json& v = j.at(key);
            return v.is_array() ? v.get<std::vector<Index>>() : std::vector<Index>{v.get<Index>()};
        };
        cfg.n = as_list("n");
        cfg.k = as_list("k");
        cfg.algorithms = j.at("algorithms").get<std::vector<std::string>>();
        cfg.trials = j.value("trials", 1);
        cfg.base_seed = j.value("base_seed", std::uint64_t{0});
        cfg.output = j.value("output", std::string("results"));
        if (j.contains("overrides")) {
            for (const auto& [name, o] : j.at("overrides").items()) cfg.overrides[name] = o;
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return parse_config(j);
}

json to_json(const ExperimentConfig& cfg)
{
    json o = json::object();
    for (const auto& [name, v] : cfg.overrides) o[name] = v;
    return {{"n", cfg.n},          {"k", cfg.k},           {"algorithms", cfg.algorithms}, {"trials", cfg.trials},
            {"base_seed", cfg.base_seed}, {"overrides", o}, {"output", cfg.output}};
}

std::uint64_t instance_seed(std::uint64_t base_seed, Index n, Index k, int trial)
{
    std::uint64_t h = hash_combine(base_seed, static_cast<std::uint64_t>(n));
    h = hash_combine(h, static_cast<std::uint64_t>(k));
    return hash_combine(h, static_cast<std::uint64_t>(trial));
}

std::uint64_t derive_seed(std::uint64_t base_seed, Index n, Index k, const std::string& algorithm, int trial)
{
    return hash_combine(instance_seed(base_seed, n, k, trial), hash_string(algorithm));
}

TrialRecord run_trial(const Cell& cell, int trial, std::uint64_t base_seed, const json& overrides)
{
    TrialRecord rec;
    rec.n = cell.n;
    rec.k = cell.k;
    rec.algorithm = cell.algorithm;
    rec.trial = trial;
    rec.seed = derive_seed(base_seed, cell.n, cell.k, cell.algorithm, trial);
    rec.residual = std::numeric_limits<double>::quiet_NaN();

    const auto start = Clock::now();
    try {
        if (!is_known_algorithm(cell.algorithm)) throw ConfigError("unknown algorithm '" + cell.algorithm + "'");
        const std::uint64_t inst = instance_seed(base_seed, cell.n, cell.k, trial);
        const json& o = overrides.is_null() ? json::object() : overrides;

        if (cell.algorithm == "combinatorial") {
            const ComplexSparseSignal x = random_complex_sparse_signal(cell.n, cell.k, inst);
            const Index m = combinatorial_m(o, cell.n, cell.k);
            const MaskedMeasurementEnsemble e = design_measurements(cell.n, cell.k, m, rec.seed);
            const ComplexSparseSignal xhat = recover(measure(x, e), e);
            rec.residual = global_phase_residual(x.values, xhat.values);
            rec.success = rec.residual <= 1e-8;
        } else {
            const SparseSignal x = random_sparse_signal(cell.n, cell.k, inst);
            const PowerSpectralDensity p = psd(x);
            if (cell.algorithm == "gs") {
                fill_from(rec, gerchberg_saxton(p, gs_config(o, cell.k, rec.seed), x.values));
            } else if (cell.algorithm == "partial_psd") {
                const RetrievalConfig cfg = retrieval_config(o, cell.algorithm, rec.seed);
                SolverSettings stage1 = stage1_defaults();
                stage1.max_iters = take(o, "stage1_max_iters", stage1.max_iters);
                Rng rng(hash_combine(inst, hash_string("omega")));
                const PartialFourierOperator op = PartialFourierOperator::random(cell.n, partial_m(o, cell.n, cell.k), rng);
                Vector samples(op.rows());
                for (Index r = 0; r < op.rows(); ++r) samples[r] = p.p[op.omega[static_cast<std::size_t>(r)]];
                fill_from(rec, partial_psd_pipeline(op, samples, cell.k, cfg, x.values, stage1).recovery);
            } else {
                const RetrievalConfig cfg = retrieval_config(o, cell.algorithm, rec.seed);
                if (cell.algorithm == "algorithm1") fill_from(rec, algorithm1(p, cfg, x.values));
                else if (cell.algorithm == "one_shot_sdp") fill_from(rec, one_shot_weighted_l1(p, cfg, x.values));
                else fill_from(rec, logdet_recovery(p, cfg, x.values));
            }
        }
    } catch (const CombinatorialError& e) {
        rec.success = false;
        rec.error = to_string(e.kind());
    } catch (const std::exception& e) {
        rec.success = false;
        rec.error = e.what();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    return rec;
}

const SummaryRow* SweepSummary::find(Index n, Index k, const std::string& algorithm) const
{
    for (const auto& r : rows)
        if (r.n == n && r.k == k && r.algorithm == algorithm) return &r;
    return nullptr;
}

void sort_records(std::vector<TrialRecord>& records)
{
    std::sort(records.begin(), records.end(),
              [](const TrialRecord& l, const TrialRecord& r) { return order_key(l) < order_key(r); });
}

SweepSummary summarize(const std::vector<TrialRecord>& records)
{
    if (records.empty()) throw std::invalid_argument("summarize: no records");
    std::map<std::tuple<Index, Index, std::string>, SummaryRow> cells;
    for (const auto& r : records) {
        SummaryRow& row = cells[{r.n, r.k, r.algorithm}];
        row.n = r.n;
        row.k = r.k;
        row.algorithm = r.algorithm;
        row.trials += 1;
        row.successes += r.success ? 1 : 0;
        row.mean_wall_ms += r.wall_ms;
    }
    SweepSummary s;
    for (auto& [key, row] : cells) {
        row.success_rate = static_cast<double>(row.successes) / static_cast<double>(row.trials);
        row.mean_wall_ms /= static_cast<double>(row.trials);
        s.rows.push_back(row);
    }
    return s;
}

std::string format_trial_row(const TrialRecord& r)
{
    std::ostringstream os;
    os << r.n << ',' << r.k << ',' << r.algorithm << ',' << r.trial << ',' << r.seed << ',' << (r.success ? 1 : 0)
       << ',' << format_double("%.9e", r.residual) << ',' << r.outer_iters << ',' << format_double("%.3f", r.wall_ms);
    return os.str();
}

std::string format_summary_row(const SummaryRow& r)
{
    std::ostringstream os;
    os << r.n << ',' << r.k << ',' << r.algorithm << ',' << r.trials << ',' << format_double("%.6f", r.success_rate)
       << ',' << format_double("%.3f", r.mean_wall_ms);
    return os.str();
}

void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records)
{
    os << kTrialHeader << '\n';
    for (const auto& r : records) os << format_trial_row(r) << '\n';
}

void write_summary_csv(std::ostream& os, const SweepSummary& summary)
{
    os << kSummaryHeader << '\n';
    for (const auto& r : summary.rows) os << format_summary_row(r) << '\n';
}

namespace {

// (n, algorithm) blocks in first-appearance order of the sorted summary.
std::vector<std::pair<Index, std::string>> plot_blocks(const SweepSummary& summary)
{
    std::vector<std::pair<Index, std::string>> blocks;
    for (const auto& r : summary.rows) {
        std::pair<Index, std::string> key{r.n, r.algorithm};
        if (std::find(blocks.begin(), blocks.end(), key) == blocks.end()) blocks.push_back(key);
    }
    std::sort(blocks.begin(), blocks.end());
    return blocks;
}

} // namespace

void write_plot_data(std::ostream& os, const SweepSummary& summary)
{
    bool first = true;
    for (const auto& [n, algorithm] : plot_blocks(summary)) {
        if (!first) os << "\n\n";
        first = false;
        os << "# n=" << n << " algorithm=" << algorithm << "\n# k success_rate\n";
        for (const auto& r : summary.rows)
            if (r.n == n && r.algorithm == algorithm) os << r.k << ' ' << format_double("%.6f", r.success_rate) << '\n';
    }
}

void write_plot_script(std::ostream& os, const SweepSummary& summary, const std::string& data_file)
{
    const auto blocks = plot_blocks(summary);
    os << "# gnuplot " << "-p plot.gp\n"
       << "set xlabel 'sparsity k'\nset ylabel 'success rate'\nset yrange [0:1.05]\nset key bottom left\n"
       << "set terminal pngcairo size 800,500\nset output 'success_rate.png'\n";
    os << "plot ";
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        if (b) os << ", \\\n     ";
        os << '\'' << data_file << "' index " << b << " using 1:2 with linespoints title '" << blocks[b].second
           << " (n=" << blocks[b].first << ")'";
    }
    os << '\n';
}

namespace {

// Executes every (cell, trial) on a worker pool and hands each record to
// `sink` under a lock as soon as it finishes.
std::vector<TrialRecord> run_jobs(const ExperimentConfig& config, const SweepOptions& options,
                                  const std::function<void(const TrialRecord&)>& sink)
{
    config.validate();
    std::vector<std::pair<Cell, int>> jobs;
    for (Index n : config.n)
        for (Index k : config.k)
            for (const auto& a : config.algorithms)
                for (int t = 0; t < config.trials; ++t) jobs.push_back({Cell{n, k, a}, t});

    std::vector<TrialRecord> records;
    records.reserve(jobs.size());
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    const auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            const auto& [cell, t] = jobs[i];
            const auto it = config.overrides.find(cell.algorithm);
            TrialRecord rec =
                run_trial(cell, t, config.base_seed, it == config.overrides.end() ? json::object() : it->second);
            std::lock_guard lock(mu);
            try {
                if (sink) sink(rec);
            } catch (...) {
                if (!failure) failure = std::current_exception();
                next = jobs.size();
            }
            records.push_back(std::move(rec));
            if (options.progress) options.progress(records.size(), jobs.size());
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(jobs.size())));
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < threads; ++w) pool.emplace_back(worker);
        worker();
    }
    if (failure) std::rethrow_exception(failure);
    sort_records(records);
    return records;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot open " + path.string() + " for writing");
    writer(os);
    os.flush();
    if (!os) throw IoError("failed writing " + path.string());
}

} // namespace

std::vector<TrialRecord> run_trials(const ExperimentConfig& config, const SweepOptions& options)
{
    return run_jobs(config, options, {});
}

SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir, const SweepOptions& options)
{
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

    const auto trials_path = out_dir / "trials.csv";
    std::ofstream live(trials_path, std::ios::trunc);
    if (!live) throw IoError("cannot open " + trials_path.string() + " for writing");
    live << kTrialHeader << '\n' << std::flush;

    SweepResult result;
    result.records = run_jobs(config, options, [&](const TrialRecord& r) {
        live << format_trial_row(r) << '\n' << std::flush;
        if (!live) throw IoError("failed appending to " + trials_path.string());
    });
    live.close();
    result.summary = summarize(result.records);

    write_file(trials_path, [&](std::ostream& os) { write_trials_csv(os, result.records); });
    write_file(out_dir / "summary.csv", [&](std::ostream& os) { write_summary_csv(os, result.summary); });
    write_file(out_dir / "summary.dat", [&](std::ostream& os) { write_plot_data(os, result.summary); });
    write_file(out_dir / "plot.gp", [&](std::ostream& os) { write_plot_script(os, result.summary, "summary.dat"); });

    bool any_error = false;
    for (const auto& r : result.records) any_error = any_error || !r.error.empty();
    if (any_error) {
        write_file(out_dir / "errors.csv", [&](std::ostream& os) {
            os << "n,k,algorithm,trial,error\n";
            for (const auto& r : result.records) {
                if (r.error.empty()) continue;
                std::string msg = r.error;
                std::replace(msg.begin(), msg.end(), ',', ';');
                std::replace(msg.begin(), msg.end(), '\n', ' ');
                os << r.n << ',' << r.k << ',' << r.algorithm << ',' << r.trial << ',' << msg << '\n';
            }
        });
    }

    if (options.dump_signals) {
        write_file(out_dir / "signals.jsonl", [&](std::ostream& os) {
            for (Index n : config.n)
                for (Index k : config.k)
                    for (int t = 0; t < config.trials; ++t) {
                        const std::uint64_t seed = instance_seed(config.base_seed, n, k, t);
                        json line = {{"n", n}, {"k", k}, {"trial", t}, {"seed", seed}};
                        line["real"] = random_sparse_signal(n, k, seed);
                        if (std::find(config.algorithms.begin(), config.algorithms.end(), "combinatorial") !=
                            config.algorithms.end()) {
                            const ComplexSparseSignal c = random_complex_sparse_signal(n, k, seed);
                            std::vector<double> re, im;
                            for (Index j = 0; j < n; ++j) {
                                re.push_back(c.values[j].real());
                                im.push_back(c.values[j].imag());
                            }
                            line["complex"] = {{"support", c.support}, {"real", re}, {"imag", im}};
                        }
                        os << line.dump() << '\n';
                    }
        });
    }
    return result;
}

std::string strip_timing(const std::string& trial_csv)
{
    std::istringstream in(trial_csv);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.rfind(',');
        out << (cut == std::string::npos ? line : line.substr(0, cut)) << '\n';
    }
    return out.str();
}

} // namespace sparsepr
