#include "bk/scaling.hpp"

#include <atomic>
#include <exception>
#include <string>
#include <thread>

namespace bk {

std::vector<DistanceRow> distance_table(const std::vector<MagnitudeDistribution>& dists)
{
    // One support for every pair: bins populated at all levels, lowest dropped.
    auto bins = common_bins(dists);
    if (bins.size() < 2)
        throw std::invalid_argument("scaling levels share fewer than two nonempty bins");
    bins.erase(bins.begin());

    std::vector<DistanceRow> rows;
    for (std::size_t k = 0; k + 1 < dists.size(); ++k) {
        DistanceRow row;
        row.from = static_cast<int>(k);
        row.to = static_cast<int>(k + 1);
        row.euclidean = distribution_distance(dists[k], dists[k + 1], Norm::euclidean, bins);
        row.max = distribution_distance(dists[k], dists[k + 1], Norm::max, bins);
        rows.push_back(row);
    }
    return rows;
}

ScalingReport run_scaling_suite(const ModelParams<double>& base,
                                int n_max,
                                const LevelRunner& runner,
                                double bin_width,
                                unsigned workers)
{
    if (n_max < 1)
        throw std::invalid_argument("scaling suite needs n_max >= 1");

    const auto count = static_cast<std::size_t>(n_max) + 1;
    ScalingReport report;
    for (int n = 0; n <= n_max; ++n)
        report.levels.push_back(rescale(base, n));
    report.catalogs.resize(count);
    std::vector<std::exception_ptr> errors(count);

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t k = next++; k < count; k = next++) {
            const auto& level = report.levels[k];
            try {
                report.catalogs[k] = runner(level);
                if (report.catalogs[k].empty())
                    throw std::runtime_error("empty catalog");
            } catch (const std::exception& e) {
                errors[k] = std::make_exception_ptr(std::runtime_error(
                    "scaling level n=" + std::to_string(level.n) + " (N=" + std::to_string(level.n_blocks()) +
                    "): " + e.what()));
            }
        }
    };

    const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(count)));
    if (threads == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back(work);
    }
    for (const auto& e : errors)
        if (e)
            std::rethrow_exception(e);

    for (const auto& catalog : report.catalogs)
        report.distributions.push_back(build_distribution(catalog, bin_width, LogBase::natural));
    report.distances = distance_table(report.distributions);
    return report;
}

ScalingReport run_scaling_suite(const ModelParams<double>& base,
                                int n_max,
                                const IntegratorConfig<double>& cfg,
                                double bin_width,
                                unsigned workers)
{
    auto runner = [&cfg](const ScalingLevel<double>& level) {
        IntegratorConfig<double> c = cfg;
        c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(level.n));
        return simulate(level.params, c).catalog;
    };
    return run_scaling_suite(base, n_max, runner, bin_width, workers);
}

} // namespace bk
