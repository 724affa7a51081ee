#ifndef BK_STATISTICS_HPP
#define BK_STATISTICS_HPP

#include "bk/events.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace bk {

enum class LogBase { ten, natural };

/// Magnitudes binned into half-open intervals [k dM, (k+1) dM) for integer
/// k >= first_bin. The sorted raw magnitudes are kept so that cumulative
/// ratios are exact counts, not bin approximations.
struct MagnitudeDistribution {
    long first_bin{0};
    double bin_width{0.2};
    std::vector<std::size_t> counts;
    std::size_t total{0};
    LogBase log_base{LogBase::ten};
    std::vector<double> sorted_magnitudes;

    double bin_origin() const { return static_cast<double>(first_bin) * bin_width; }
    double lower_edge(std::size_t k) const { return static_cast<double>(first_bin + static_cast<long>(k)) * bin_width; }
    double center(std::size_t k) const { return lower_edge(k) + 0.5 * bin_width; }
    std::size_t bins() const { return counts.size(); }

    /// Fraction of events with magnitude >= m.
    double cumulative_ratio(double m) const;
};

/// Builds the distribution over M (base ten) or M1 (natural).
MagnitudeDistribution build_distribution(const EventCatalog& catalog, double bin_width = 0.2, LogBase base = LogBase::ten);
MagnitudeDistribution build_distribution(std::span<const double> magnitudes, double bin_width, LogBase base);

/// Bin index of `m` for bins of width `dm`, robust to the last-ulp noise of
/// values sitting on an edge.
long bin_index(double m, double dm);

struct CurvePoint {
    double magnitude;
    double value;
};

/// (lower edge, log10 P) for every nonempty bin.
std::vector<CurvePoint> cumulative_curve(const MagnitudeDistribution& dist);

struct FitWindow {
    double lo{-3.7};
    double hi{1.7};
};

struct GrFit {
    double slope_B{0};
    double intercept{0};
    FitWindow window{};
    double residual_rms{0};
    double b_value{0};
    std::size_t points{0};
};

/// Least-squares line through (magnitude, log10 P) pairs inside `window`,
/// reported as log10 P ~ intercept - B M.
GrFit fit_gr_points(std::span<const CurvePoint> points, FitWindow window);

/// Fits the Gutenberg-Richter slope. Every nonempty bin whose center lies in
/// the window contributes (center, log10 P(lower edge)).
GrFit fit_gr_slope(const MagnitudeDistribution& dist, FitWindow window = {});

struct RatePoint {
    double magnitude;  // bin center
    double rate;       // count / total
    double log_rate;   // ln(rate) for natural-base distributions, log10 otherwise
};

/// Per-bin event rate R. Empty bins are omitted.
std::vector<RatePoint> rate_distribution(const MagnitudeDistribution& dist);

enum class Norm { euclidean, max };

/// Distance between the per-bin log-rate vectors of two distributions over
/// their common nonempty bins, skipping the lowest common bin.
double distribution_distance(const MagnitudeDistribution& a, const MagnitudeDistribution& b, Norm norm);

/// Same distance restricted to the given bin indices, which must be nonempty
/// in both distributions. No bin is skipped.
double distribution_distance(const MagnitudeDistribution& a,
                             const MagnitudeDistribution& b,
                             Norm norm,
                             std::span<const long> bins);

/// Bin indices (k for [k dM, (k+1) dM)) that are nonempty in every
/// distribution, ascending.
std::vector<long> common_bins(std::span<const MagnitudeDistribution> dists);

/// Mean block displacement of one configuration.
template <typename Derived>
double center_of_mass(const Eigen::MatrixBase<Derived>& positions)
{
    return static_cast<double>(positions.mean());
}

struct TimeValue {
    double time;
    double value;
};

template <typename Scalar>
std::vector<TimeValue> center_of_mass_series(std::span<const SystemState<Scalar>> samples)
{
    std::vector<TimeValue> out;
    out.reserve(samples.size());
    for (const auto& s : samples)
        out.push_back({static_cast<double>(s.time), center_of_mass(s.positions)});
    return out;
}

/// Records the center of mass every `stride` steps.
template <typename Scalar = double>
class CenterOfMassRecorder : public StepObserver<Scalar> {
public:
    explicit CenterOfMassRecorder(std::size_t stride = 1) : stride_(stride == 0 ? 1 : stride) {}

    void on_step(const TrajectorySample<Scalar>& sample) override
    {
        if (++count_ % stride_ == 0)
            series_.push_back({static_cast<double>(sample.time), center_of_mass(sample.positions)});
        last_ = {static_cast<double>(sample.time), center_of_mass(sample.positions)};
    }

    const std::vector<TimeValue>& series() const { return series_; }
    TimeValue last() const { return last_; }

private:
    std::size_t stride_;
    std::size_t count_{0};
    std::vector<TimeValue> series_;
    TimeValue last_{0, 0};
};

} // namespace bk

#endif // BK_STATISTICS_HPP
