#ifndef BK_INTEGRATOR_HPP
#define BK_INTEGRATOR_HPP

#include "bk/adams.hpp"
#include "bk/model.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace bk {

template <typename Scalar = double>
struct IntegratorConfig {
    Scalar step_size{0.001};
    Scalar t_end{10000};
    std::uint64_t seed{0};
    Scalar perturbation_amplitude{0.1};
    /// Longest warm-up before giving up; non-positive means 10 * t_end.
    Scalar warmup_cap{0};
    /// Advance globally stuck steps without evaluating the vector field. The
    /// result is identical to the full step.
    bool skip_quiescent{true};

    Scalar effective_warmup_cap() const { return warmup_cap > Scalar(0) ? warmup_cap : Scalar(10) * t_end; }
};

template <typename Scalar>
void validate(const IntegratorConfig<Scalar>& c)
{
    if (!(c.step_size > Scalar(0)) || !std::isfinite(static_cast<double>(c.step_size)))
        throw ValidationError("step_size must be positive");
    if (!(c.t_end >= Scalar(0)) || !std::isfinite(static_cast<double>(c.t_end)))
        throw ValidationError("t_end must be non-negative");
    if (!(c.perturbation_amplitude >= Scalar(0)))
        throw ValidationError("perturbation_amplitude must be non-negative");
}

/// Post-step view of the state handed to observers. Valid only during the
/// callback.
template <typename Scalar = double>
struct TrajectorySample {
    Scalar time;
    const Vector<Scalar>& positions;
    const Vector<Scalar>& velocities;
    const Flags& stuck;
    bool any_slipping;

    static TrajectorySample of(const SystemState<Scalar>& s)
    {
        return {s.time, s.positions, s.velocities, s.stuck, s.any_slipping()};
    }
};

template <typename Scalar = double>
class StepObserver {
public:
    virtual ~StepObserver() = default;
    virtual void on_step(const TrajectorySample<Scalar>& sample) = 0;
};

class NonFiniteStateError : public std::runtime_error {
public:
    NonFiniteStateError(double time, Index block)
        : std::runtime_error(message(time, block)), time_(time), block_(block)
    {
    }
    double time() const { return time_; }
    Index block() const { return block_; }

private:
    static std::string message(double time, Index block)
    {
        std::ostringstream os;
        os.precision(17);
        os << "non-finite state at t=" << time << " in block " << block;
        return os.str();
    }
    double time_;
    Index block_;
};

/// Clamps negative velocities to zero and recomputes the stick flags: a block
/// is stuck iff it is at rest and its resultant force does not exceed f0.
/// Any flag flip or clamp invalidates the multistep history.
template <typename Scalar>
SystemState<Scalar> post_step_projection(SystemState<Scalar> s, const ModelParams<Scalar>& p)
{
    const Flags clamped = s.velocities.array() < Scalar(0);
    s.velocities = s.velocities.cwiseMax(Scalar(0));

    const Vector<Scalar> force = elastic_forces(s.positions, s.time, p);
    const Flags stuck = (s.velocities.array() == Scalar(0)) && (force.array() <= p.friction.f0);

    if (clamped.any() || (stuck != s.stuck).any())
        s.history.reset();
    s.stuck = stuck;
    return s;
}

namespace detail {

template <typename Scalar>
SystemState<Scalar> unpack(const SystemState<Scalar>& from, const Vector<Scalar>& y, Scalar t)
{
    const Index n = from.size();
    SystemState<Scalar> s;
    s.time = t;
    s.positions = y.head(n);
    s.velocities = y.tail(n);
    s.stuck = from.stuck;
    return s;
}

template <typename Scalar>
auto field(const ModelParams<Scalar>& p)
{
    return [&p](Scalar t, const Vector<Scalar>& y) { return vector_field(t, y, p); };
}

template <typename Scalar>
SystemState<Scalar> bootstrap_to(const SystemState<Scalar>& s, Scalar h, Scalar t_next, const ModelParams<Scalar>& p)
{
    const Vector<Scalar> y = s.packed();
    Vector<Scalar> f_start = vector_field(s.time, y, p);
    auto r = midpoint_step(field(p), s.time, y, h, f_start);
    SystemState<Scalar> out = unpack(s, r.y, t_next);
    out.history = typename SystemState<Scalar>::History{std::move(r.f), std::move(f_start)};
    return post_step_projection(std::move(out), p);
}

template <typename Scalar>
SystemState<Scalar> pece_to(const SystemState<Scalar>& s, Scalar h, Scalar t_next, const ModelParams<Scalar>& p)
{
    if (!s.history)
        throw std::logic_error("pece_step needs a step history; call bootstrap_step first");
    const auto& hist = *s.history;
    auto r = pece_ab2_am3(field(p), s.time, s.packed(), h, hist.current, hist.previous);
    SystemState<Scalar> out = unpack(s, r.y, t_next);
    out.history = typename SystemState<Scalar>::History{std::move(r.f), hist.current};
    return post_step_projection(std::move(out), p);
}

/// True when every block is stuck and none is released at `t_next`; the
/// step is then the identity on positions and velocities.
template <typename Scalar>
bool quiescent(const SystemState<Scalar>& s, Scalar t_next, const ModelParams<Scalar>& p)
{
    if (!s.all_stuck())
        return false;
    const Vector<Scalar> force = elastic_forces(s.positions, t_next, p);
    return (force.array() <= p.friction.f0).all();
}

template <typename Scalar>
SystemState<Scalar> advance_to(SystemState<Scalar> s, Scalar h, Scalar t_next, const ModelParams<Scalar>& p, bool skip_quiescent)
{
    if (skip_quiescent && quiescent(s, t_next, p)) {
        const Vector<Scalar> zero = Vector<Scalar>::Zero(2 * s.size());
        s.time = t_next;
        s.history = typename SystemState<Scalar>::History{zero, zero};
        return s;
    }
    return s.history ? pece_to(s, h, t_next, p) : bootstrap_to(s, h, t_next, p);
}

template <typename Scalar>
void check_finite(const SystemState<Scalar>& s)
{
    for (Index i = 0; i < s.size(); ++i)
        if (!std::isfinite(static_cast<double>(s.positions(i))) || !std::isfinite(static_cast<double>(s.velocities(i))))
            throw NonFiniteStateError(static_cast<double>(s.time), i);
}

} // namespace detail

/// One explicit-midpoint step that also records the step history.
template <typename Scalar>
SystemState<Scalar> bootstrap_step(const SystemState<Scalar>& s, Scalar h, const ModelParams<Scalar>& p)
{
    return detail::bootstrap_to(s, h, s.time + h, p);
}

/// One AB2/AM3 predict-evaluate-correct-evaluate step followed by the
/// stick/slip projection.
template <typename Scalar>
SystemState<Scalar> pece_step(const SystemState<Scalar>& s, Scalar h, const ModelParams<Scalar>& p)
{
    return detail::pece_to(s, h, s.time + h, p);
}

/// Bootstraps when there is no history, otherwise takes a PECE step.
template <typename Scalar>
SystemState<Scalar> advance(const SystemState<Scalar>& s, Scalar h, const ModelParams<Scalar>& p)
{
    return detail::advance_to(s, h, s.time + h, p, false);
}

/// Draws the randomized initial displacements, lets the chain relax to its
/// first global stick and restarts the clock there.
///
/// Positions are shifted by -V t so the restart keeps every resultant force
/// unchanged when t is reset to zero.
template <typename Scalar>
SystemState<Scalar> warm_up(const ModelParams<Scalar>& p, const IntegratorConfig<Scalar>& cfg)
{
    validate(cfg);
    auto s = SystemState<Scalar>::at_rest(p.n_blocks);
    if (cfg.perturbation_amplitude > Scalar(0)) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> draw(-static_cast<double>(cfg.perturbation_amplitude),
                                                    static_cast<double>(cfg.perturbation_amplitude));
        for (Index i = 0; i < s.size(); ++i)
            s.positions(i) = static_cast<Scalar>(draw(rng));
    }
    s = post_step_projection(std::move(s), p);
    if (s.all_stuck())
        return s;

    const Scalar h = cfg.step_size;
    const auto max_steps = static_cast<long long>(std::ceil(cfg.effective_warmup_cap() / h));
    for (long long k = 1; k <= max_steps; ++k) {
        s = detail::advance_to(s, h, static_cast<Scalar>(k) * h, p, cfg.skip_quiescent);
        detail::check_finite(s);
        if (s.all_stuck()) {
            s.positions.array() -= p.plate_velocity * s.time;
            s.time = Scalar(0);
            return s;
        }
    }
    throw std::runtime_error("warm-up found no global stick within t=" +
                             std::to_string(static_cast<double>(cfg.effective_warmup_cap())));
}

/// Advances on the fixed grid t0 + k h up to `cfg.t_end`, notifying the
/// observers after every step in registration order.
template <typename Scalar>
SystemState<Scalar> integrate(SystemState<Scalar> s,
                              const ModelParams<Scalar>& p,
                              const IntegratorConfig<Scalar>& cfg,
                              const std::vector<StepObserver<Scalar>*>& observers = {})
{
    validate(cfg);
    const Scalar h = cfg.step_size;
    const Scalar t0 = s.time;
    const auto steps = static_cast<long long>(std::llround(static_cast<double>((cfg.t_end - t0) / h)));
    for (long long k = 1; k <= steps; ++k) {
        s = detail::advance_to(s, h, t0 + static_cast<Scalar>(k) * h, p, cfg.skip_quiescent);
        detail::check_finite(s);
        const auto sample = TrajectorySample<Scalar>::of(s);
        for (auto* obs : observers)
            obs->on_step(sample);
    }
    return s;
}

} // namespace bk

#endif // BK_INTEGRATOR_HPP
