#ifndef SPARSEPR_COMBINATORIAL_HPP
#define SPARSEPR_COMBINATORIAL_HPP

#include "sparsepr/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparsepr {

/// Complex k-sparse signal for designed phaseless measurements.
struct ComplexSparseSignal
{
    CVector values;
    std::vector<Index> support;

    Index size() const { return values.size(); }

    static ComplexSparseSignal from_dense(const CVector& values);
};

/// Support uniform over k-subsets; magnitudes uniform on (0, 1], phases
/// uniform on [0, 2 pi).
ComplexSparseSignal random_complex_sparse_signal(Index n, Index k, std::uint64_t seed);

/// m masked measurement pairs. Row i of `masks` is z_i (each entry zero with
/// probability 1 - 1/k, else standard normal); rows of `phase_a` and
/// `phase_b` hold the angles of the unit-modulus vectors a_i and b_i.
struct MaskedMeasurementEnsemble
{
    Index n = 0;
    Index k_design = 1;
    std::uint64_t seed = 0;
    Matrix masks;   // m x n
    Matrix phase_a; // m x n, radians in [0, 2 pi)
    Matrix phase_b; // m x n
    std::vector<std::vector<Index>> mask_support;

    Index size() const { return masks.rows(); }

    /// a_i . z_i
    CVector first_vector(Index i) const;
    /// b_i . z_i
    CVector second_vector(Index i) const;
};

MaskedMeasurementEnsemble design_measurements(Index n, Index k, Index m, std::uint64_t seed);

/// One ensemble per sparsity level k_i = 2^i, i = 1..ceil(log2 n).
std::vector<MaskedMeasurementEnsemble> design_measurements_unknown_k(Index n, Index m_per_level, std::uint64_t seed);

struct PhaselessObservations
{
    Vector alpha; ///< |<a_i . z_i, x>|^2
    Vector beta;  ///< |<b_i . z_i, x>|^2
};

/// Exact squared moduli, with `<u, x> = u^* x`.
PhaselessObservations measure(const CVector& x, const MaskedMeasurementEnsemble& e);
inline PhaselessObservations measure(const ComplexSparseSignal& x, const MaskedMeasurementEnsemble& e)
{
    return measure(x.values, e);
}

/// Edge {first, second} of the phase graph, tagged with the measurement whose
/// mask meets the support exactly in those two indices.
struct PhaseEdge
{
    Index first;
    Index second;
    Index measurement;
};

struct PhaseGraph
{
    std::vector<Index> nodes;
    std::vector<PhaseEdge> edges;
};

class CombinatorialError : public std::runtime_error
{
public:
    enum class Kind { MissingSingleton, GraphDisconnected, DegenerateSystem, LengthMismatch };

    CombinatorialError(Kind kind, Index index, const std::string& what)
        : std::runtime_error(what), kind_(kind), index_(index)
    {
    }

    Kind kind() const noexcept { return kind_; }
    /// Offending support index or measurement, when applicable.
    Index index() const noexcept { return index_; }

private:
    Kind kind_;
    Index index_;
};

std::string to_string(CombinatorialError::Kind kind);

/// Zero-test threshold: 1e-12 times the largest first-vector observation.
double zero_threshold(const PhaselessObservations& obs);

/// Complement of the union of the mask supports whose observation is zero.
std::vector<Index> recover_support(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e);

/// |x_j| for each j in `support` (same order), read off the first measurement
/// whose mask meets the support only at j. Throws MissingSingleton.
Vector recover_magnitudes(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e,
                          const std::vector<Index>& support);

PhaseGraph build_phase_graph(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e,
                             const std::vector<Index>& support);

/// Depth-first spanning tree from the lowest node; returns the tree edges.
/// Throws GraphDisconnected.
std::vector<PhaseEdge> spanning_tree(const PhaseGraph& g);

/// Values on `support` (same order) with the root's phase fixed to zero.
/// Throws GraphDisconnected or DegenerateSystem.
CVector recover_phases(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e,
                       const std::vector<Index>& support, const Vector& magnitudes, const PhaseGraph& g);

/// Full three-stage recovery of x up to a global phase.
ComplexSparseSignal recover(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e);

/// min over phi of ||xhat - e^{i phi} x|| / ||x||.
double global_phase_residual(const CVector& x, const CVector& xhat);

struct LevelRecovery
{
    std::size_t level;
    ComplexSparseSignal signal;
};

/// Tries each level in order and accepts the first whose output reproduces all
/// of that level's observations to `tol` (relative).
std::optional<LevelRecovery> recover_unknown_k(const std::vector<PhaselessObservations>& obs,
                                               const std::vector<MaskedMeasurementEnsemble>& levels,
                                               double tol = 1e-8);

void to_json(nlohmann::json& j, const MaskedMeasurementEnsemble& e);
void from_json(const nlohmann::json& j, MaskedMeasurementEnsemble& e);

} // namespace sparsepr

#endif // SPARSEPR_COMBINATORIAL_HPP
