// Command-line front end: seeded sweeps, single trials and the acceptance
// batteries.

#include "sparsepr/acceptance.hpp"
#include "sparsepr/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;

int run_sweep_command(const std::string& config_path, const std::string& out_dir, unsigned threads, bool dump)
{
    const sparsepr::ExperimentConfig cfg = sparsepr::load_config(config_path);
    sparsepr::SweepOptions opt;
    opt.threads = threads;
    opt.dump_signals = dump;
    opt.progress = [](std::size_t done, std::size_t total) {
        if (done % 25 == 0 || done == total) std::cerr << "\r" << done << "/" << total << " trials" << std::flush;
    };
    const auto result = sparsepr::run_sweep(cfg, out_dir.empty() ? cfg.output : out_dir, opt);
    std::cerr << '\n';
    sparsepr::write_summary_csv(std::cout, result.summary);
    return kExitOk;
}

int run_trial_command(const std::string& algorithm, long n, long k, std::uint64_t seed)
{
    if (!sparsepr::is_known_algorithm(algorithm)) throw sparsepr::ConfigError("unknown algorithm '" + algorithm + "'");
    if (n < 1 || k < 1 || k > n) throw sparsepr::ConfigError("need 1 <= k <= n");
    // The seed is used as the base seed of a single-trial cell.
    const auto rec = sparsepr::run_trial({n, k, algorithm}, 0, seed);
    std::cout << sparsepr::kTrialHeader << '\n' << sparsepr::format_trial_row(rec) << '\n';
    if (!rec.error.empty()) std::cerr << "error: " << rec.error << '\n';
    return kExitOk;
}

int run_acceptance_command(const std::string& suite, unsigned threads, const std::string& out_dir, std::uint64_t seed)
{
    sparsepr::acceptance::Options opt;
    opt.suite = suite;
    opt.threads = threads;
    opt.base_seed = seed;
    opt.log = &std::cerr;
    if (!out_dir.empty()) opt.artifact_dir = out_dir;
    const auto results = sparsepr::acceptance::run_all(opt, std::cout);
    for (const auto& r : results)
        if (!r.passed) return kExitFailure;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sparse phase retrieval experiments"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool dump = false;
    auto* sweep = app.add_subcommand("sweep", "run a Monte Carlo sweep from a JSON config");
    sweep->add_option("--config", config_path, "experiment config (JSON)")->required();
    sweep->add_option("--out", out_dir, "output directory (defaults to the config's output field)");
    sweep->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sweep->add_flag("--dump-signals", dump, "also write every generated instance");

    std::string algorithm;
    long n = 0, k = 0;
    std::uint64_t seed = 0;
    auto* trial = app.add_subcommand("trial", "run one trial and print its CSV row");
    trial->add_option("--algorithm", algorithm, "algorithm name")->required();
    trial->add_option("--n", n, "signal length")->required();
    trial->add_option("--k", k, "sparsity")->required();
    trial->add_option("--seed", seed, "base seed")->required();

    std::string suite = "full";
    std::string artifacts;
    std::uint64_t acceptance_seed = sparsepr::acceptance::Options{}.base_seed;
    auto* acc = app.add_subcommand("acceptance", "run the acceptance batteries");
    acc->add_option("--suite", suite, "full or quick")->required();
    acc->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    acc->add_option("--out", artifacts, "directory for sweep artifacts");
    acc->add_option("--seed", acceptance_seed, "base seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*sweep) return run_sweep_command(config_path, out_dir, threads, dump);
        if (*trial) return run_trial_command(algorithm, n, k, seed);
        return run_acceptance_command(suite, threads, artifacts, acceptance_seed);
    } catch (const sparsepr::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const sparsepr::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}
