#ifndef SPARSEPR_RETRIEVAL_HPP
#define SPARSEPR_RETRIEVAL_HPP

#include "sparsepr/conic.hpp"
#include "sparsepr/signals.hpp"

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace sparsepr {

/// Raised when the lifted program has no feasible point for the given data.
class InfeasibleInput : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct RetrievalConfig
{
    int max_outer_iters = 40;
    /// Entries of the rank-one estimate above `ratio * max |x|` count as support.
    double support_threshold_ratio = 0.2;
    double weight_lo = 0.0;
    double weight_hi = 1.0;
    std::uint64_t seed = 0;
    double rank1_ratio_tol = 1e-3;
    /// Relative l2 mismatch between psd(estimate) and the input spectrum
    /// accepted as a rank-one solution.
    double psd_match_tol = 1e-3;
    /// Scale of the log-det rank term added on re-solves (0 disables it).
    double logdet_weight = 1.0;
    /// When two consecutive passes yield the same support estimate, redraw all
    /// weights and drop the log-det term instead of repeating the update.
    bool redraw_on_stall = true;
    /// Refine rank-one estimates with `polish_estimate`. In the reweighted
    /// loop a rank-one point is then accepted only if the polished estimate
    /// reaches a relative spectral mismatch of `exact_fit_tol`.
    bool polish = true;
    double polish_support_ratio = 1e-3;
    double exact_fit_tol = 1e-6;
    /// Signals are known to be nonnegative: a rank-one estimate with entries of
    /// both signs (beyond `polish_support_ratio * max`) is not accepted.
    bool nonnegative = false;
    SolverSettings solver = default_solver();

    static SolverSettings default_solver()
    {
        SolverSettings s;
        s.max_iters = 3000;
        s.primal_tol = 1e-5;
        s.dual_tol = 1e-5;
        s.rank_one_exit_tol = 1e-6;
        return s;
    }

    void validate() const;
};

struct RecoveryResult
{
    Vector estimate;
    bool success = false;
    int outer_iterations = 0;
    double final_eigen_ratio = 1.0;
    double psd_residual = 0.0;  ///< ||psd(estimate) - p|| / ||p||
    double equivalence_residual = -1.0; ///< vs ground truth; -1 when none given
    int restarts = 0;                   ///< full weight redraws after a stalled support
    std::chrono::duration<double> wall_time{};
    std::string note;
};

/// sqrt(lambda_1) * v_1 for the top eigenpair of a symmetric matrix, with the
/// first nonzero entry of v_1 made positive.
Vector rank1_extract(const Matrix& X);
inline Vector rank1_extract(const LiftedMatrix& X) { return rank1_extract(X.X); }

/// Reweighted-l1 lifted recovery from a power spectral density.
///
/// Each outer pass solves `min trace(V|X|)` over the lifted feasible set. If
/// the solution is not rank one, V is zeroed on index pairs whose entries in
/// the rank-one estimate both exceed `support_threshold_ratio * max|x1|`, the
/// remaining entries are redrawn uniformly from [weight_lo, weight_hi], and a
/// log-det linearization term `logdet_weight * (X + eps I)^{-1}` (normalized
/// to unit max entry) is added so the zero-weight block still prefers low rank.
/// If the support estimate repeats, all weights are redrawn and the log-det
/// term is dropped for the next pass (see `redraw_on_stall`).
///
/// With `truth` the success flag is equivalence within `kEquivalenceTolerance`;
/// otherwise it is `psd_residual <= cfg.psd_match_tol`.
RecoveryResult algorithm1(const PowerSpectralDensity& p, const RetrievalConfig& cfg,
                          const std::optional<Vector>& truth = std::nullopt);

/// A single weighted-l1 solve with random weights (no reweighting).
RecoveryResult one_shot_weighted_l1(const PowerSpectralDensity& p, const RetrievalConfig& cfg,
                                    const std::optional<Vector>& truth = std::nullopt);

/// Log-det heuristic: repeatedly minimize trace((X_prev + eps I)^{-1} X).
/// The first weight is the identity plus a seeded uniform symmetric matrix.
RecoveryResult logdet_recovery(const PowerSpectralDensity& p, const RetrievalConfig& cfg,
                               const std::optional<Vector>& truth = std::nullopt);

struct GsConfig
{
    int k = 1;
    int iters = 1000;
    int restarts = 10;
    std::uint64_t seed = 0;
};

/// Error-reduction alternating projection: impose the Fourier magnitudes, then
/// project onto real nonnegative vectors with at most k nonzeros. The restart
/// with the smallest spectral residual wins.
RecoveryResult gerchberg_saxton(const PowerSpectralDensity& p, const GsConfig& cfg,
                                const std::optional<Vector>& truth = std::nullopt);

/// Circularly symmetrizes `raw` and clamps its spectrum at zero, which makes
/// it the diagonal-sum vector of some PSD matrix.
Autocorrelation project_autocorrelation(const Vector& raw);

/// Basis-pursuit settings for stage one of the partial-PSD pipeline.
SolverSettings stage1_defaults();

struct PipelineResult
{
    RecoveryResult recovery;
    Autocorrelation stage1;   ///< cleaned autocorrelation handed to stage two
    BasisPursuitSolution basis_pursuit;
    bool stage1_ok = false;
};

/// Recovery from PSD samples at the frequencies in `op`: basis pursuit for the
/// (at most k^2 sparse) autocorrelation, cleanup into a valid autocorrelation,
/// then `algorithm1` on its spectrum.
PipelineResult partial_psd_pipeline(const PartialFourierOperator& op, const Vector& samples, Index k,
                                    const RetrievalConfig& cfg, const std::optional<Vector>& truth = std::nullopt,
                                    const SolverSettings& stage1_settings = stage1_defaults());

/// Levenberg-Marquardt refinement of the autocorrelation fit over the entries
/// of `x` above `support_ratio * max|x|`; the other entries are set to zero.
/// The lifted solver stops at a modest accuracy, and a spectral mismatch of
/// 1e-3 can hide a much larger error in the signal when entries are close in
/// value, so the SDP-based methods finish with this step. The estimate is only
/// replaced when its spectral mismatch improves.
Vector polish_estimate(const Vector& x, const PowerSpectralDensity& p, double support_ratio = 1e-3,
                       int max_iters = 100);

/// Apply the weight update of the reweighting loop to `V` in place.
void update_weights(Matrix& V, const Vector& x1, double threshold_ratio, double lo, double hi, Rng& rng);

} // namespace sparsepr

#endif // SPARSEPR_RETRIEVAL_HPP
