#include "bk/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bk {

namespace {

constexpr double edge_tolerance = 1e-9;

double log_in(LogBase base, double x)
{
    return base == LogBase::natural ? std::log(x) : std::log10(x);
}

} // namespace

long bin_index(double m, double dm)
{
    return static_cast<long>(std::floor(m / dm + edge_tolerance));
}

double MagnitudeDistribution::cumulative_ratio(double m) const
{
    if (total == 0)
        return 0.0;
    const auto it = std::lower_bound(sorted_magnitudes.begin(), sorted_magnitudes.end(), m);
    return static_cast<double>(std::distance(it, sorted_magnitudes.end())) / static_cast<double>(total);
}

MagnitudeDistribution build_distribution(std::span<const double> magnitudes, double bin_width, LogBase base)
{
    if (magnitudes.empty())
        throw std::invalid_argument("cannot build a magnitude distribution from an empty catalog");
    if (!(bin_width > 0.0))
        throw std::invalid_argument("bin width must be positive");

    MagnitudeDistribution d;
    d.bin_width = bin_width;
    d.log_base = base;
    d.total = magnitudes.size();
    d.sorted_magnitudes.assign(magnitudes.begin(), magnitudes.end());
    std::sort(d.sorted_magnitudes.begin(), d.sorted_magnitudes.end());

    d.first_bin = bin_index(d.sorted_magnitudes.front(), bin_width);
    const long last_bin = bin_index(d.sorted_magnitudes.back(), bin_width);
    d.counts.assign(static_cast<std::size_t>(last_bin - d.first_bin + 1), 0);
    for (double m : d.sorted_magnitudes)
        ++d.counts[static_cast<std::size_t>(bin_index(m, bin_width) - d.first_bin)];
    return d;
}

MagnitudeDistribution build_distribution(const EventCatalog& catalog, double bin_width, LogBase base)
{
    std::vector<double> mags;
    mags.reserve(catalog.events.size());
    for (const auto& e : catalog.events)
        mags.push_back(base == LogBase::natural ? e.magnitude_ln : e.magnitude_log10);
    return build_distribution(mags, bin_width, base);
}

std::vector<CurvePoint> cumulative_curve(const MagnitudeDistribution& dist)
{
    std::vector<CurvePoint> out;
    std::size_t at_or_above = dist.total;
    for (std::size_t k = 0; k < dist.bins(); ++k) {
        if (dist.counts[k] > 0)
            out.push_back({dist.lower_edge(k),
                           std::log10(static_cast<double>(at_or_above) / static_cast<double>(dist.total))});
        at_or_above -= dist.counts[k];
    }
    return out;
}

GrFit fit_gr_points(std::span<const CurvePoint> points, FitWindow window)
{
    std::vector<CurvePoint> used;
    for (const auto& pt : points)
        if (pt.magnitude >= window.lo && pt.magnitude <= window.hi && std::isfinite(pt.value))
            used.push_back(pt);
    if (used.size() < 2)
        throw std::invalid_argument("Gutenberg-Richter fit needs at least two usable bins in the window");

    const auto n = static_cast<Eigen::Index>(used.size());
    Eigen::MatrixXd design(n, 2);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = used[static_cast<std::size_t>(i)].magnitude;
        rhs(i) = used[static_cast<std::size_t>(i)].value;
    }
    const Eigen::Vector2d coef = design.colPivHouseholderQr().solve(rhs);
    const Eigen::VectorXd residual = rhs - design * coef;

    GrFit fit;
    fit.intercept = coef(0);
    fit.slope_B = -coef(1);
    fit.b_value = 1.5 * fit.slope_B;
    fit.window = window;
    fit.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(n));
    fit.points = used.size();
    return fit;
}

GrFit fit_gr_slope(const MagnitudeDistribution& dist, FitWindow window)
{
    // The abscissa is shifted to the bin center; the slope is unaffected.
    std::vector<CurvePoint> pts = cumulative_curve(dist);
    for (auto& pt : pts)
        pt.magnitude += 0.5 * dist.bin_width;
    return fit_gr_points(pts, window);
}

std::vector<RatePoint> rate_distribution(const MagnitudeDistribution& dist)
{
    std::vector<RatePoint> out;
    for (std::size_t k = 0; k < dist.bins(); ++k) {
        if (dist.counts[k] == 0)
            continue;
        const double r = static_cast<double>(dist.counts[k]) / static_cast<double>(dist.total);
        out.push_back({dist.center(k), r, log_in(dist.log_base, r)});
    }
    return out;
}

namespace {

void check_comparable(const MagnitudeDistribution& a, const MagnitudeDistribution& b)
{
    if (a.log_base != b.log_base)
        throw std::invalid_argument("distributions use different magnitude bases");
    if (std::abs(a.bin_width - b.bin_width) > 1e-12 * std::max(a.bin_width, b.bin_width))
        throw std::invalid_argument("distributions use different bin widths");
}

double log_rate(const MagnitudeDistribution& d, long bin)
{
    const long k = bin - d.first_bin;
    if (k < 0 || k >= static_cast<long>(d.bins()) || d.counts[static_cast<std::size_t>(k)] == 0)
        throw std::invalid_argument("bin " + std::to_string(bin) + " is empty in one of the distributions");
    return log_in(d.log_base, static_cast<double>(d.counts[static_cast<std::size_t>(k)]) / static_cast<double>(d.total));
}

} // namespace

std::vector<long> common_bins(std::span<const MagnitudeDistribution> dists)
{
    std::vector<long> out;
    if (dists.empty())
        return out;
    const auto& first = dists.front();
    for (std::size_t k = 0; k < first.bins(); ++k) {
        if (first.counts[k] == 0)
            continue;
        const long bin = first.first_bin + static_cast<long>(k);
        const bool everywhere = std::all_of(dists.begin() + 1, dists.end(), [bin](const MagnitudeDistribution& d) {
            const long j = bin - d.first_bin;
            return j >= 0 && j < static_cast<long>(d.bins()) && d.counts[static_cast<std::size_t>(j)] > 0;
        });
        if (everywhere)
            out.push_back(bin);
    }
    return out;
}

double distribution_distance(const MagnitudeDistribution& a,
                             const MagnitudeDistribution& b,
                             Norm norm,
                             std::span<const long> bins)
{
    check_comparable(a, b);
    if (bins.empty())
        throw std::invalid_argument("distance over an empty set of bins");
    Eigen::VectorXd diff(static_cast<Eigen::Index>(bins.size()));
    for (std::size_t i = 0; i < bins.size(); ++i)
        diff(static_cast<Eigen::Index>(i)) = log_rate(a, bins[i]) - log_rate(b, bins[i]);
    return norm == Norm::euclidean ? diff.norm() : diff.cwiseAbs().maxCoeff();
}

double distribution_distance(const MagnitudeDistribution& a, const MagnitudeDistribution& b, Norm norm)
{
    check_comparable(a, b);
    const MagnitudeDistribution pair[] = {a, b};
    auto bins = common_bins(pair);
    if (bins.size() < 2)
        throw std::invalid_argument("distributions share fewer than two nonempty bins");
    bins.erase(bins.begin());
    return distribution_distance(a, b, norm, bins);
}

} // namespace bk
