#ifndef BK_SIMULATION_HPP
#define BK_SIMULATION_HPP

#include "bk/events.hpp"
#include "bk/integrator.hpp"
#include "bk/statistics.hpp"

#include <chrono>
#include <cstdint>
#include <random>
#include <vector>

namespace bk {

/// Seed for run `index` of a batch started from `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

template <typename Scalar = double>
struct RunOutput {
    SystemState<Scalar> initial;
    SystemState<Scalar> final;
    EventCatalog catalog;
    /// Center of mass sampled every `com_stride` steps.
    std::vector<TimeValue> center_of_mass;
    double wall_seconds{0};

    double center_of_mass_displacement() const
    {
        return bk::center_of_mass(final.positions) - bk::center_of_mass(initial.positions);
    }
};

/// Warm-up followed by the observed integration over [0, cfg.t_end].
template <typename Scalar>
RunOutput<Scalar> simulate(const ModelParams<Scalar>& p,
                           const IntegratorConfig<Scalar>& cfg,
                           std::size_t com_stride = 0,
                           std::vector<StepObserver<Scalar>*> extra = {})
{
    validate(p);
    validate(cfg);
    const auto started = std::chrono::steady_clock::now();

    RunOutput<Scalar> out;
    out.initial = warm_up(p, cfg);

    EventDetector<Scalar> events(out.initial);
    CenterOfMassRecorder<Scalar> com(com_stride);
    std::vector<StepObserver<Scalar>*> observers{&events};
    if (com_stride > 0)
        observers.push_back(&com);
    observers.insert(observers.end(), extra.begin(), extra.end());

    out.final = integrate(out.initial, p, cfg, observers);
    out.catalog = events.finish();
    out.catalog.window_end = static_cast<double>(cfg.t_end);
    out.center_of_mass = com.series();
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

} // namespace bk

#endif // BK_SIMULATION_HPP
