#ifndef SPARSEPR_ACCEPTANCE_HPP
#define SPARSEPR_ACCEPTANCE_HPP

#include "sparsepr/harness.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace sparsepr::acceptance {

struct Options
{
    /// "full" runs every battery at its stated size; "quick" shrinks trial
    /// counts for smoke runs and marks its lines accordingly.
    std::string suite = "full";
    unsigned threads = 1;
    std::uint64_t base_seed = 20240601;
    /// Sweep artifacts (CSV, plot data) land here when set.
    std::optional<std::filesystem::path> artifact_dir;
    /// Progress messages for the long batteries.
    std::ostream* log = nullptr;
};

struct CriterionResult
{
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

/// FFT autocorrelation and PSD against the direct definitions on every
/// grid signal with n <= 8.
CriterionResult oracle_equivalence(const Options& opt);
/// PSD projection, diagonal-sum projection and full-sample basis pursuit.
CriterionResult solver_battery(const Options& opt);

/// Success rates shared by criteria 3 and 4 (n = 32 sweep).
struct SweepRun
{
    SweepSummary summary;
    int trials = 0;
};
SweepRun run_n32_sweep(const Options& opt);
CriterionResult reweighting_dominance(const Options& opt, const SweepRun& run);
CriterionResult beyond_sqrt_n(const Options& opt, const SweepRun& run);

CriterionResult partial_psd_stage_one(const Options& opt);
CriterionResult autocorrelation_density(const Options& opt);
CriterionResult designed_recovery(const Options& opt);
CriterionResult designed_invariants(const Options& opt);
CriterionResult determinism(const Options& opt);

/// `criterion N: PASS|FAIL  title  [detail] (seconds)`.
std::string format_line(const CriterionResult& r);

/// Runs criteria 1..9 in order, printing each line to `out` as it finishes.
std::vector<CriterionResult> run_all(const Options& opt, std::ostream& out);

} // namespace sparsepr::acceptance

#endif // SPARSEPR_ACCEPTANCE_HPP
