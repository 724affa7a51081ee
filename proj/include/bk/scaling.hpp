#ifndef BK_SCALING_HPP
#define BK_SCALING_HPP

#include "bk/model.hpp"
#include "bk/simulation.hpp"
#include "bk/statistics.hpp"

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace bk {

/// Parameters of the n-th doubling of the chain. With N -> 2^n N the
/// products N m, N k_p, N f0 and the ratio k_c / N stay fixed; sigma, alpha
/// and V are level independent.
template <typename Scalar = double>
struct ScalingLevel {
    int n{0};
    ModelParams<Scalar> params{};

    Index n_blocks() const { return params.n_blocks; }
};

template <typename Scalar>
ScalingLevel<Scalar> rescale(const ModelParams<Scalar>& base, int n)
{
    if (n < 0)
        throw std::invalid_argument("doubling count must be non-negative");
    ScalingLevel<Scalar> level;
    level.n = n;
    level.params = base;
    level.params.n_blocks = base.n_blocks << n;
    // Powers of two scale exactly, so the matching constants are preserved bit for bit.
    level.params.mass = std::ldexp(base.mass, -n);
    level.params.plate_stiffness = std::ldexp(base.plate_stiffness, -n);
    level.params.coupling_stiffness = std::ldexp(base.coupling_stiffness, n);
    level.params.friction.f0 = std::ldexp(base.friction.f0, -n);
    level.params.spacing = std::ldexp(base.spacing, -n);
    return level;
}

/// Continuum matching constants N m, k_c / N, N k_p, N f0.
template <typename Scalar>
std::array<Scalar, 4> matching_constants(const ModelParams<Scalar>& p)
{
    const auto n = static_cast<Scalar>(p.n_blocks);
    return {n * p.mass, p.coupling_stiffness / n, n * p.plate_stiffness, n * p.friction.f0};
}

struct DistanceRow {
    int from{0};
    int to{1};
    double euclidean{0};
    double max{0};
};

struct ScalingReport {
    std::vector<ScalingLevel<double>> levels;
    std::vector<EventCatalog> catalogs;
    std::vector<MagnitudeDistribution> distributions;  // over M1
    std::vector<DistanceRow> distances;
};

using LevelRunner = std::function<EventCatalog(const ScalingLevel<double>&)>;

/// Runs levels 0..n_max with `runner`, bins M1 with width `bin_width` and
/// tabulates the distances between consecutive levels. Levels run on up to
/// `workers` threads; results are ordered by level.
ScalingReport run_scaling_suite(const ModelParams<double>& base,
                                int n_max,
                                const LevelRunner& runner,
                                double bin_width = 0.2,
                                unsigned workers = 1);

/// Simulates every level with `cfg`, giving level n the seed
/// derive_seed(cfg.seed, n).
ScalingReport run_scaling_suite(const ModelParams<double>& base,
                                int n_max,
                                const IntegratorConfig<double>& cfg,
                                double bin_width = 0.2,
                                unsigned workers = 1);

/// Distances between consecutive levels, all measured on the bins populated
/// at every level except the lowest of them.
std::vector<DistanceRow> distance_table(const std::vector<MagnitudeDistribution>& dists);

} // namespace bk

#endif // BK_SCALING_HPP
