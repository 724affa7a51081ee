#ifndef BK_EVENTS_HPP
#define BK_EVENTS_HPP

#include "bk/integrator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bk {

struct Magnitudes {
    double log10;  // M
    double ln;     // M1
};

/// Magnitudes of an event whose blocks slipped by `slip`.
template <typename Derived>
Magnitudes magnitude(const Eigen::MatrixBase<Derived>& slip)
{
    const double total = static_cast<double>(slip.sum());
    if (!(total > 0.0))
        throw std::domain_error("magnitude needs a strictly positive total slip");
    const double m = std::log10(total);
    return {m, m * std::numbers::ln10};
}

/// One earthquake. `per_block_slip` may be empty when the record was read
/// back from a summary file that does not carry it.
struct EventRecord {
    double start_time{0};
    double end_time{0};
    Eigen::VectorXd per_block_slip;
    double magnitude_log10{0};
    double magnitude_ln{0};
    Index participating_blocks{0};

    double total_slip() const { return std::pow(10.0, magnitude_log10); }
};

struct EventCatalog {
    std::vector<EventRecord> events;
    double window_start{0};
    double window_end{0};
    /// Events dropped because they were still open at the end of the window.
    std::size_t discarded_open{0};
    /// Events that closed with zero accumulated slip and so carry no magnitude.
    std::size_t discarded_empty{0};

    std::size_t total_events() const { return events.size(); }
    bool empty() const { return events.empty(); }
};

/// Segments the step stream into events: an event opens at the first sample
/// where any block slips and closes at the next sample where all blocks are
/// stuck again. Each block's positive displacement increments are summed
/// while the event is open, including the step that opens it.
template <typename Scalar = double>
class EventDetector : public StepObserver<Scalar> {
public:
    explicit EventDetector(const SystemState<Scalar>& initial)
        : last_time_(initial.time), last_positions_(initial.positions), slip_(Vector<Scalar>::Zero(initial.size()))
    {
        catalog_.window_start = static_cast<double>(initial.time);
        catalog_.window_end = catalog_.window_start;
    }

    void on_step(const TrajectorySample<Scalar>& sample) override
    {
        if (!(sample.time > last_time_))
            throw std::invalid_argument("samples must arrive in strictly increasing time order");
        if (sample.positions.size() != last_positions_.size())
            throw std::invalid_argument("sample size does not match the detector");

        const auto increment = (sample.positions - last_positions_).cwiseMax(Scalar(0));
        if (!open_ && sample.any_slipping) {
            open_ = true;
            start_ = sample.time;
            slip_.setZero();
        }
        if (open_) {
            slip_ += increment;
            if (!sample.any_slipping)
                close(sample.time);
        } else {
            unattributed_ += static_cast<double>(increment.sum());
        }

        last_time_ = sample.time;
        last_positions_ = sample.positions;
        catalog_.window_end = static_cast<double>(sample.time);
    }

    bool event_open() const { return open_; }

    /// Slip observed while no event was open. Zero for a consistent stream.
    double unattributed_slip() const { return unattributed_; }

    const EventCatalog& catalog() const { return catalog_; }

    /// Final catalog; a still-open event is discarded.
    EventCatalog finish()
    {
        if (open_) {
            ++catalog_.discarded_open;
            open_ = false;
        }
        return std::move(catalog_);
    }

private:
    void close(Scalar end)
    {
        open_ = false;
        Eigen::VectorXd slip = slip_.template cast<double>();
        if (!(slip.sum() > 0.0)) {
            ++catalog_.discarded_empty;
            return;
        }
        const auto mags = magnitude(slip);
        EventRecord rec;
        rec.start_time = static_cast<double>(start_);
        rec.end_time = static_cast<double>(end);
        rec.magnitude_log10 = mags.log10;
        rec.magnitude_ln = mags.ln;
        rec.participating_blocks = (slip.array() > 0.0).count();
        rec.per_block_slip = std::move(slip);
        catalog_.events.push_back(std::move(rec));
    }

    EventCatalog catalog_;
    Scalar last_time_;
    Vector<Scalar> last_positions_;
    Vector<Scalar> slip_;
    Scalar start_{0};
    bool open_{false};
    double unattributed_{0};
};

} // namespace bk

#endif // BK_EVENTS_HPP
