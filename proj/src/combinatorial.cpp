#include "sparsepr/combinatorial.hpp"

#include "sparsepr/signals.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace sparsepr {

namespace {

std::vector<char> membership(Index n, const std::vector<Index>& support)
{
    std::vector<char> in(static_cast<std::size_t>(n), 0);
    for (Index j : support) {
        if (j < 0 || j >= n) throw std::out_of_range("support index out of range");
        in[static_cast<std::size_t>(j)] = 1;
    }
    return in;
}

// Indices of S_i that lie in the support, stopping once `limit` is exceeded.
// Up to limit + 1 members of `mask` that lie in the support (limit <= 2).
struct Hits
{
    std::array<Index, 3> index{};
    std::size_t count = 0;
};

Hits intersect(const std::vector<Index>& mask, const std::vector<char>& in, std::size_t limit)
{
    Hits hits;
    for (Index j : mask) {
        if (in[static_cast<std::size_t>(j)]) {
            hits.index[hits.count++] = j;
            if (hits.count > limit) break;
        }
    }
    return hits;
}

double squared_modulus(const MaskedMeasurementEnsemble& e, const Matrix& phase, Index i, const CVector& x)
{
    Complex acc{0.0, 0.0};
    for (Index j : e.mask_support[static_cast<std::size_t>(i)]) {
        // conj(z e^{i t}) x
        acc += e.masks(i, j) * std::polar(1.0, -phase(i, j)) * x[j];
    }
    return std::norm(acc);
}

double wrap_angle(double t)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    t = std::fmod(t, two_pi);
    return t < 0.0 ? t + two_pi : t;
}

} // namespace

ComplexSparseSignal ComplexSparseSignal::from_dense(const CVector& values)
{
    ComplexSparseSignal s;
    s.values = values;
    for (Index j = 0; j < values.size(); ++j)
        if (values[j] != Complex(0.0, 0.0)) s.support.push_back(j);
    return s;
}

ComplexSparseSignal random_complex_sparse_signal(Index n, Index k, std::uint64_t seed)
{
    Rng rng(seed);
    const SparseSignal real = random_sparse_signal(n, k, rng);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    ComplexSparseSignal s;
    s.values = CVector::Zero(n);
    s.support = real.support;
    for (Index j : s.support) s.values[j] = std::polar(real.values[j], angle(rng));
    return s;
}

CVector MaskedMeasurementEnsemble::first_vector(Index i) const
{
    CVector c(n);
    for (Index j = 0; j < n; ++j) c[j] = masks(i, j) * std::polar(1.0, phase_a(i, j));
    return c;
}

CVector MaskedMeasurementEnsemble::second_vector(Index i) const
{
    CVector c(n);
    for (Index j = 0; j < n; ++j) c[j] = masks(i, j) * std::polar(1.0, phase_b(i, j));
    return c;
}

MaskedMeasurementEnsemble design_measurements(Index n, Index k, Index m, std::uint64_t seed)
{
    if (n < 1 || k < 1 || m < 1) throw std::invalid_argument("design_measurements: n, k, m must be >= 1");
    MaskedMeasurementEnsemble e;
    e.n = n;
    e.k_design = k;
    e.seed = seed;
    e.masks = Matrix::Zero(m, n);
    e.phase_a.resize(m, n);
    e.phase_b.resize(m, n);
    e.mask_support.resize(static_cast<std::size_t>(m));

    Rng rng(seed);
    std::bernoulli_distribution keep(1.0 / static_cast<double>(k));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    for (Index i = 0; i < m; ++i) {
        auto& s = e.mask_support[static_cast<std::size_t>(i)];
        for (Index j = 0; j < n; ++j) {
            if (keep(rng)) {
                e.masks(i, j) = gauss(rng);
                s.push_back(j);
            }
            e.phase_a(i, j) = angle(rng);
            e.phase_b(i, j) = angle(rng);
        }
    }
    return e;
}

std::vector<MaskedMeasurementEnsemble> design_measurements_unknown_k(Index n, Index m_per_level, std::uint64_t seed)
{
    if (n < 2) throw std::invalid_argument("design_measurements_unknown_k: n must be >= 2");
    int levels = 0;
    while ((Index{1} << levels) < n) ++levels;
    std::vector<MaskedMeasurementEnsemble> out;
    out.reserve(static_cast<std::size_t>(levels));
    for (int i = 1; i <= levels; ++i)
        out.push_back(design_measurements(n, Index{1} << i, m_per_level, hash_combine(seed, static_cast<std::uint64_t>(i))));
    return out;
}

PhaselessObservations measure(const CVector& x, const MaskedMeasurementEnsemble& e)
{
    if (x.size() != e.n)
        throw CombinatorialError(CombinatorialError::Kind::LengthMismatch, x.size(),
                                 "measure: signal length " + std::to_string(x.size()) + " != ensemble length " +
                                     std::to_string(e.n));
    const Index m = e.size();
    PhaselessObservations obs{Vector(m), Vector(m)};
    for (Index i = 0; i < m; ++i) {
        obs.alpha[i] = squared_modulus(e, e.phase_a, i, x);
        obs.beta[i] = squared_modulus(e, e.phase_b, i, x);
    }
    return obs;
}

std::string to_string(CombinatorialError::Kind kind)
{
    switch (kind) {
    case CombinatorialError::Kind::MissingSingleton: return "missing_singleton";
    case CombinatorialError::Kind::GraphDisconnected: return "graph_disconnected";
    case CombinatorialError::Kind::DegenerateSystem: return "degenerate_system";
    case CombinatorialError::Kind::LengthMismatch: return "length_mismatch";
    }
    return "unknown";
}

double zero_threshold(const PhaselessObservations& obs)
{
    const double peak = obs.alpha.size() > 0 ? obs.alpha.maxCoeff() : 0.0;
    return 1e-12 * (peak + 1e-300);
}

std::vector<Index> recover_support(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e)
{
    if (obs.alpha.size() != e.size())
        throw CombinatorialError(CombinatorialError::Kind::LengthMismatch, obs.alpha.size(),
                                 "recover_support: observation count does not match ensemble");
    const double eta = zero_threshold(obs);
    std::vector<char> excluded(static_cast<std::size_t>(e.n), 0);
    for (Index i = 0; i < e.size(); ++i) {
        if (obs.alpha[i] > eta) continue;
        for (Index j : e.mask_support[static_cast<std::size_t>(i)]) excluded[static_cast<std::size_t>(j)] = 1;
    }
    std::vector<Index> support;
    for (Index j = 0; j < e.n; ++j)
        if (!excluded[static_cast<std::size_t>(j)]) support.push_back(j);
    return support;
}

Vector recover_magnitudes(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e,
                          const std::vector<Index>& support)
{
    const auto in = membership(e.n, support);
    std::vector<double> found(static_cast<std::size_t>(e.n), -1.0);
    std::size_t remaining = support.size();
    for (Index i = 0; i < e.size() && remaining > 0; ++i) {
        const auto hits = intersect(e.mask_support[static_cast<std::size_t>(i)], in, 1);
        if (hits.count != 1) continue;
        const Index j = hits.index[0];
        auto& slot = found[static_cast<std::size_t>(j)];
        if (slot >= 0.0) continue;
        slot = std::sqrt(obs.alpha[i]) / std::abs(e.masks(i, j));
        --remaining;
    }
    Vector mags(static_cast<Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
        const double v = found[static_cast<std::size_t>(support[s])];
        if (v < 0.0)
            throw CombinatorialError(CombinatorialError::Kind::MissingSingleton, support[s],
                                     "recover_magnitudes: no measurement isolates index " +
                                         std::to_string(support[s]));
        mags[static_cast<Index>(s)] = v;
    }
    return mags;
}

PhaseGraph build_phase_graph(const PhaselessObservations&, const MaskedMeasurementEnsemble& e,
                             const std::vector<Index>& support)
{
    PhaseGraph g;
    g.nodes = support;
    std::sort(g.nodes.begin(), g.nodes.end());
    const auto in = membership(e.n, support);

    // Collapse parallel edges, keeping the first label.
    std::vector<std::pair<Index, Index>> seen;
    for (Index i = 0; i < e.size(); ++i) {
        const auto hits = intersect(e.mask_support[static_cast<std::size_t>(i)], in, 2);
        if (hits.count != 2) continue;
        const auto key = std::minmax(hits.index[0], hits.index[1]);
        const std::pair<Index, Index> edge{key.first, key.second};
        if (std::find(seen.begin(), seen.end(), edge) != seen.end()) continue;
        seen.push_back(edge);
        g.edges.push_back({edge.first, edge.second, i});
    }
    return g;
}

std::vector<PhaseEdge> spanning_tree(const PhaseGraph& g)
{
    std::vector<PhaseEdge> tree;
    if (g.nodes.empty()) return tree;

    std::vector<Index> nodes = g.nodes;
    std::sort(nodes.begin(), nodes.end());
    auto slot = [&](Index v) {
        return static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), v) - nodes.begin());
    };

    std::vector<std::vector<std::size_t>> adjacency(nodes.size());
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
        adjacency[slot(g.edges[k].first)].push_back(k);
        adjacency[slot(g.edges[k].second)].push_back(k);
    }

    std::vector<char> visited(nodes.size(), 0);
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}}; // (node slot, next adjacency position)
    visited[0] = 1;
    while (!stack.empty()) {
        auto& [u, pos] = stack.back();
        if (pos == adjacency[u].size()) {
            stack.pop_back();
            continue;
        }
        const PhaseEdge& edge = g.edges[adjacency[u][pos++]];
        const Index from = nodes[u];
        const Index to = edge.first == from ? edge.second : edge.first;
        const std::size_t v = slot(to);
        if (visited[v]) continue;
        visited[v] = 1;
        tree.push_back({from, to, edge.measurement});
        stack.emplace_back(v, 0);
    }

    if (tree.size() + 1 != nodes.size()) {
        const auto missing = std::find(visited.begin(), visited.end(), 0) - visited.begin();
        throw CombinatorialError(CombinatorialError::Kind::GraphDisconnected, nodes[static_cast<std::size_t>(missing)],
                                 "spanning_tree: phase graph is disconnected");
    }
    return tree;
}

CVector recover_phases(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e,
                       const std::vector<Index>& support, const Vector& magnitudes, const PhaseGraph& g)
{
    if (magnitudes.size() != static_cast<Index>(support.size()))
        throw CombinatorialError(CombinatorialError::Kind::LengthMismatch, magnitudes.size(),
                                 "recover_phases: magnitudes do not match support");
    std::vector<double> mag(static_cast<std::size_t>(e.n), 0.0);
    for (std::size_t s = 0; s < support.size(); ++s) {
        if (!(magnitudes[static_cast<Index>(s)] > 0.0))
            throw CombinatorialError(CombinatorialError::Kind::DegenerateSystem, support[s],
                                     "recover_phases: zero magnitude on support");
        mag[static_cast<std::size_t>(support[s])] = magnitudes[static_cast<Index>(s)];
    }

    std::vector<double> phase(static_cast<std::size_t>(e.n), 0.0);
    for (const PhaseEdge& edge : spanning_tree(g)) {
        const Index i = edge.measurement;
        const Index j = edge.first;
        const Index l = edge.second;
        const double zj = e.masks(i, j);
        const double zl = e.masks(i, l);
        const double mj = mag[static_cast<std::size_t>(j)];
        const double ml = mag[static_cast<std::size_t>(l)];
        // Observation = zj^2 |xj|^2 + zl^2 |xl|^2 + 2 zj zl |xj||xl| cos(t + theta),
        // with t the measurement phase difference and theta = arg(xj conj(xl)).
        const double base = zj * zj * mj * mj + zl * zl * ml * ml;
        const double scale = 2.0 * zj * zl * mj * ml;
        const double t1 = e.phase_a(i, l) - e.phase_a(i, j);
        const double t2 = e.phase_b(i, l) - e.phase_b(i, j);
        const double r1 = (obs.alpha[i] - base) / scale;
        const double r2 = (obs.beta[i] - base) / scale;

        const double det = std::sin(t1 - t2);
        if (std::abs(det) < 1e-10)
            throw CombinatorialError(CombinatorialError::Kind::DegenerateSystem, i,
                                     "recover_phases: measurement " + std::to_string(i) +
                                         " gives dependent equations");
        // [cos t1, -sin t1; cos t2, -sin t2] [c; s] = [r1; r2]
        const double c = (-r1 * std::sin(t2) + r2 * std::sin(t1)) / det;
        const double s = (std::cos(t1) * r2 - std::cos(t2) * r1) / det;
        phase[static_cast<std::size_t>(l)] = phase[static_cast<std::size_t>(j)] - std::atan2(s, c);
    }

    CVector out(static_cast<Index>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) {
        const auto j = static_cast<std::size_t>(support[s]);
        out[static_cast<Index>(s)] = std::polar(mag[j], wrap_angle(phase[j]));
    }
    return out;
}

ComplexSparseSignal recover(const PhaselessObservations& obs, const MaskedMeasurementEnsemble& e)
{
    ComplexSparseSignal x;
    x.values = CVector::Zero(e.n);
    x.support = recover_support(obs, e);
    if (x.support.empty()) return x;

    const Vector mags = recover_magnitudes(obs, e, x.support);
    if (x.support.size() == 1) {
        x.values[x.support.front()] = mags[0];
        return x;
    }
    const PhaseGraph g = build_phase_graph(obs, e, x.support);
    const CVector vals = recover_phases(obs, e, x.support, mags, g);
    for (std::size_t s = 0; s < x.support.size(); ++s) x.values[x.support[s]] = vals[static_cast<Index>(s)];
    return x;
}

double global_phase_residual(const CVector& x, const CVector& xhat)
{
    if (x.size() != xhat.size()) throw std::invalid_argument("global_phase_residual: length mismatch");
    const double nx = x.norm();
    if (nx == 0.0) return xhat.norm();
    // The optimal rotation aligns x with xhat: e^{i phi} = <x, xhat> / |<x, xhat>|.
    const Complex inner = x.dot(xhat);
    const Complex rot = std::abs(inner) > 0.0 ? inner / std::abs(inner) : Complex(1.0, 0.0);
    return (xhat - rot * x).norm() / nx;
}

std::optional<LevelRecovery> recover_unknown_k(const std::vector<PhaselessObservations>& obs,
                                               const std::vector<MaskedMeasurementEnsemble>& levels, double tol)
{
    if (obs.size() != levels.size()) throw std::invalid_argument("recover_unknown_k: one observation set per level");
    for (std::size_t l = 0; l < levels.size(); ++l) {
        ComplexSparseSignal candidate;
        try {
            candidate = recover(obs[l], levels[l]);
        } catch (const CombinatorialError&) {
            continue;
        }
        const PhaselessObservations again = measure(candidate.values, levels[l]);
        const double ref = std::max(std::hypot(obs[l].alpha.norm(), obs[l].beta.norm()), 1e-300);
        const double err = std::hypot((again.alpha - obs[l].alpha).norm(), (again.beta - obs[l].beta).norm());
        if (err <= tol * ref) return LevelRecovery{l, std::move(candidate)};
    }
    return std::nullopt;
}

void to_json(nlohmann::json& j, const MaskedMeasurementEnsemble& e)
{
    nlohmann::json masks = nlohmann::json::array();
    nlohmann::json pa = nlohmann::json::array();
    nlohmann::json pb = nlohmann::json::array();
    for (Index i = 0; i < e.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Index c : e.mask_support[static_cast<std::size_t>(i)]) row.push_back({c, e.masks(i, c)});
        masks.push_back(std::move(row));
        pa.push_back(std::vector<double>(e.phase_a.row(i).begin(), e.phase_a.row(i).end()));
        pb.push_back(std::vector<double>(e.phase_b.row(i).begin(), e.phase_b.row(i).end()));
    }
    j = {{"n", e.n}, {"k_design", e.k_design}, {"seed", e.seed}, {"m", e.size()},
         {"masks", std::move(masks)}, {"phase_a", std::move(pa)}, {"phase_b", std::move(pb)}};
}

void from_json(const nlohmann::json& j, MaskedMeasurementEnsemble& e)
{
    const Index n = j.at("n").get<Index>();
    const Index m = j.at("m").get<Index>();
    if (n < 1 || m < 0) throw std::invalid_argument("ensemble json: bad dimensions");
    const auto& masks = j.at("masks");
    const auto& pa = j.at("phase_a");
    const auto& pb = j.at("phase_b");
    if (static_cast<Index>(masks.size()) != m || static_cast<Index>(pa.size()) != m ||
        static_cast<Index>(pb.size()) != m)
        throw std::invalid_argument("ensemble json: row count does not match m");

    MaskedMeasurementEnsemble out;
    out.n = n;
    out.k_design = j.at("k_design").get<Index>();
    out.seed = j.at("seed").get<std::uint64_t>();
    out.masks = Matrix::Zero(m, n);
    out.phase_a.resize(m, n);
    out.phase_b.resize(m, n);
    out.mask_support.resize(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) {
        const auto& row = masks[static_cast<std::size_t>(i)];
        auto& s = out.mask_support[static_cast<std::size_t>(i)];
        for (const auto& entry : row) {
            const Index c = entry.at(0).get<Index>();
            if (c < 0 || c >= n || (!s.empty() && c <= s.back()))
                throw std::invalid_argument("ensemble json: mask indices must be increasing and in range");
            out.masks(i, c) = entry.at(1).get<double>();
            s.push_back(c);
        }
        const auto a = pa[static_cast<std::size_t>(i)].get<std::vector<double>>();
        const auto b = pb[static_cast<std::size_t>(i)].get<std::vector<double>>();
        if (static_cast<Index>(a.size()) != n || static_cast<Index>(b.size()) != n)
            throw std::invalid_argument("ensemble json: phase row length does not match n");
        out.phase_a.row(i) = Eigen::Map<const Vector>(a.data(), n).transpose();
        out.phase_b.row(i) = Eigen::Map<const Vector>(b.data(), n).transpose();
    }
    e = std::move(out);
}

} // namespace sparsepr
