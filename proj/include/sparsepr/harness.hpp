#ifndef SPARSEPR_HARNESS_HPP
#define SPARSEPR_HARNESS_HPP

#include "sparsepr/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsepr {

/// Invalid experiment description (CLI exit status 2).
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Failure reading or writing sweep artifacts (CLI exit status 3).
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// The closed set of algorithm names a sweep may request.
const std::vector<std::string>& known_algorithms();
bool is_known_algorithm(const std::string& name);

struct ExperimentConfig
{
    std::vector<Index> n;
    std::vector<Index> k;
    std::vector<std::string> algorithms;
    int trials = 1;
    std::uint64_t base_seed = 0;
    /// Per-algorithm parameter overrides, keyed by algorithm name.
    std::map<std::string, nlohmann::json> overrides;
    std::string output = "results";

    void validate() const;
};

/// Parses and validates; throws ConfigError on any problem.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct Cell
{
    Index n = 0;
    Index k = 0;
    std::string algorithm;
};

/// Seed of the problem instance. It omits the algorithm name so every
/// algorithm in a sweep sees the same signal for a given (n, k, trial).
std::uint64_t instance_seed(std::uint64_t base_seed, Index n, Index k, int trial);

/// Seed of the algorithm's own randomness (recorded in the trial CSV).
std::uint64_t derive_seed(std::uint64_t base_seed, Index n, Index k, const std::string& algorithm, int trial);

struct TrialRecord
{
    Index n = 0;
    Index k = 0;
    std::string algorithm;
    int trial = 0;
    std::uint64_t seed = 0;
    bool success = false;
    double residual = 0.0;
    int outer_iters = 0;
    double wall_ms = 0.0;
    std::string error; ///< empty unless the algorithm threw
};

/// Runs one trial. Algorithm exceptions are caught and reported through
/// `error` with `success = false`.
TrialRecord run_trial(const Cell& cell, int trial, std::uint64_t base_seed,
                      const nlohmann::json& overrides = nlohmann::json::object());

struct SummaryRow
{
    Index n = 0;
    Index k = 0;
    std::string algorithm;
    int trials = 0;
    int successes = 0;
    double success_rate = 0.0;
    double mean_wall_ms = 0.0;
};

struct SweepSummary
{
    std::vector<SummaryRow> rows; ///< ordered by (n, k, algorithm)

    const SummaryRow* find(Index n, Index k, const std::string& algorithm) const;
};

/// Exact aggregation. Throws std::invalid_argument on an empty input.
SweepSummary summarize(const std::vector<TrialRecord>& records);

/// Orders records by (n, k, algorithm, trial).
void sort_records(std::vector<TrialRecord>& records);

inline constexpr const char* kTrialHeader = "n,k,algorithm,trial,seed,success,residual,outer_iters,wall_ms";
inline constexpr const char* kSummaryHeader = "n,k,algorithm,trials,success_rate,mean_wall_ms";

std::string format_trial_row(const TrialRecord& r);
std::string format_summary_row(const SummaryRow& r);
void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& records);
void write_summary_csv(std::ostream& os, const SweepSummary& summary);

/// gnuplot data: one block per (n, algorithm), columns `k success_rate`,
/// blocks separated by two blank lines.
void write_plot_data(std::ostream& os, const SweepSummary& summary);
/// Script that renders the data file next to it.
void write_plot_script(std::ostream& os, const SweepSummary& summary, const std::string& data_file);

struct SweepOptions
{
    unsigned threads = 1;
    bool dump_signals = false;
    /// Called after every finished trial with (done, total).
    std::function<void(std::size_t, std::size_t)> progress;
};

struct SweepResult
{
    std::vector<TrialRecord> records; ///< sorted
    SweepSummary summary;
};

/// Runs every cell x trial on a pool of worker threads. Trial rows are
/// appended to `out_dir/trials.csv` as they finish; at the end the file is
/// rewritten in sorted order and `summary.csv`, `summary.dat` and `plot.gp`
/// are written. Throws IoError when the directory or files cannot be written.
SweepResult run_sweep(const ExperimentConfig& config, const std::filesystem::path& out_dir,
                      const SweepOptions& options = {});

/// Same trials without touching the filesystem.
std::vector<TrialRecord> run_trials(const ExperimentConfig& config, const SweepOptions& options = {});

/// Trial CSV with the wall-time column removed, for determinism checks.
std::string strip_timing(const std::string& trial_csv);

} // namespace sparsepr

#endif // SPARSEPR_HARNESS_HPP
