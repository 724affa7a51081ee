#include <gtest/gtest.h>

#include "bk/events.hpp"
#include "bk/integrator.hpp"

#include <cmath>
#include <limits>

using bk::IntegratorConfig;
using bk::ModelParams;
using bk::SystemState;

namespace {

struct CountingObserver : bk::StepObserver<double> {
    std::size_t calls{0};
    std::vector<double> times;
    void on_step(const bk::TrajectorySample<double>& s) override
    {
        ++calls;
        times.push_back(s.time);
    }
};

bool bit_identical(const SystemState<double>& a, const SystemState<double>& b)
{
    return a.time == b.time && a.positions == b.positions && a.velocities == b.velocities &&
           (a.stuck == b.stuck).all();
}

} // namespace

TEST(Projection, ClampsNegativeVelocities)
{
    auto p = ModelParams<double>::chain(3);
    auto s = SystemState<double>::at_rest(3);
    s.velocities << 0.1, -0.02, 0.0;
    s.stuck << false, false, true;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
    s.history = SystemState<double>::History{zero, zero};

    const auto out = bk::post_step_projection(s, p);
    EXPECT_EQ(out.velocities(0), 0.1);
    EXPECT_EQ(out.velocities(1), 0.0);
    EXPECT_EQ(out.velocities(2), 0.0);
    EXPECT_FALSE(out.stuck(0));
    EXPECT_TRUE(out.stuck(1));
    EXPECT_TRUE(out.stuck(2));
    EXPECT_FALSE(out.history.has_value());
}

TEST(Projection, FixedPointWhenQuiet)
{
    auto p = ModelParams<double>::chain(3);
    auto s = SystemState<double>::at_rest(3);
    s.time = 100.0;
    s.positions << 0.001, -0.002, 0.0;
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(6);
    s.history = SystemState<double>::History{zero, zero};

    const auto out = bk::post_step_projection(s, p);
    EXPECT_TRUE(bit_identical(out, s));
    EXPECT_TRUE(out.history.has_value());
}

TEST(Projection, ReleasesOverloadedBlock)
{
    auto p = ModelParams<double>::single_block();
    auto s = SystemState<double>::at_rest(1);
    s.positions(0) = -(p.friction.f0 + 0.1);
    const auto out = bk::post_step_projection(s, p);
    EXPECT_FALSE(out.stuck(0));
    EXPECT_EQ(out.velocities(0), 0.0);
}

TEST(Projection, ForceAtThresholdStaysStuck)
{
    auto p = ModelParams<double>::single_block();
    auto s = SystemState<double>::at_rest(1);
    s.positions(0) = -1.0;
    EXPECT_TRUE(bk::post_step_projection(s, p).stuck(0));
}

TEST(Steps, PeceNeedsHistory)
{
    auto p = ModelParams<double>::single_block();
    const auto s = SystemState<double>::at_rest(1);
    EXPECT_THROW(bk::pece_step(s, 0.001, p), std::logic_error);
}

TEST(Steps, BootstrapRecordsHistory)
{
    auto p = ModelParams<double>::single_block();
    const auto s = SystemState<double>::at_rest(1);
    const auto next = bk::bootstrap_step(s, 0.001, p);
    ASSERT_TRUE(next.history.has_value());
    EXPECT_EQ(next.positions(0), 0.0);
    EXPECT_DOUBLE_EQ(next.time, 0.001);
    const auto after = bk::pece_step(next, 0.001, p);
    EXPECT_EQ(after.positions(0), 0.0);
    EXPECT_DOUBLE_EQ(after.time, 0.002);
}

TEST(Steps, ReleasedBlockAcceleratesFromRest)
{
    auto p = ModelParams<double>::single_block();
    auto s = SystemState<double>::at_rest(1);
    s.positions(0) = -1.5;
    s = bk::post_step_projection(s, p);
    ASSERT_FALSE(s.stuck(0));
    const double h = 0.001;
    s = bk::advance(s, h, p);
    EXPECT_GT(s.velocities(0), 0.0);
    // a ~ force - onset friction = 1.5 - 0.99
    EXPECT_NEAR(s.velocities(0), 0.51 * h, 1e-5);
}

TEST(WarmUp, UnperturbedChainReturnsImmediately)
{
    auto p = ModelParams<double>::chain(8);
    IntegratorConfig<double> cfg;
    cfg.perturbation_amplitude = 0.0;
    const auto s = bk::warm_up(p, cfg);
    EXPECT_EQ(s.time, 0.0);
    EXPECT_TRUE(s.all_stuck());
    EXPECT_TRUE(s.positions.isZero());
}

TEST(WarmUp, SingleBlockIsStuckBelowThreshold)
{
    auto p = ModelParams<double>::single_block();
    IntegratorConfig<double> cfg;
    cfg.perturbation_amplitude = 0.0;
    const auto s = bk::warm_up(p, cfg);
    EXPECT_TRUE(s.all_stuck());
    EXPECT_LT(bk::net_elastic_force(0, s.positions, s.time, p), p.friction.f0);
}

TEST(WarmUp, SeededRunsAreBitIdentical)
{
    auto p = ModelParams<double>::chain(20);
    IntegratorConfig<double> cfg;
    cfg.t_end = 100;
    cfg.seed = 42;
    const auto a = bk::warm_up(p, cfg);
    const auto b = bk::warm_up(p, cfg);
    EXPECT_TRUE(bit_identical(a, b));
    cfg.seed = 43;
    const auto c = bk::warm_up(p, cfg);
    EXPECT_FALSE(a.positions == c.positions);
}

TEST(WarmUp, EndsInGlobalStickWithForcesPreserved)
{
    auto p = ModelParams<double>::chain(10);
    IntegratorConfig<double> cfg;
    cfg.t_end = 100;
    cfg.seed = 7;
    cfg.perturbation_amplitude = 0.5;
    const auto s = bk::warm_up(p, cfg);
    EXPECT_EQ(s.time, 0.0);
    EXPECT_TRUE(s.all_stuck());
    EXPECT_TRUE(s.velocities.isZero());
    const Eigen::VectorXd f = bk::elastic_forces(s.positions, 0.0, p);
    EXPECT_TRUE((f.array() <= p.friction.f0).all());
}

TEST(WarmUp, CapExceeded)
{
    auto p = ModelParams<double>::chain(10);
    IntegratorConfig<double> cfg;
    cfg.t_end = 100;
    cfg.seed = 7;
    cfg.perturbation_amplitude = 0.5;
    cfg.warmup_cap = 0.005;
    EXPECT_THROW(bk::warm_up(p, cfg), std::runtime_error);
}

TEST(Integrate, ZeroHorizon)
{
    auto p = ModelParams<double>::chain(4);
    IntegratorConfig<double> cfg;
    cfg.t_end = 0;
    auto s = SystemState<double>::at_rest(4);
    CountingObserver obs;
    const auto out = bk::integrate(s, p, cfg, {&obs});
    EXPECT_EQ(obs.calls, 0u);
    EXPECT_TRUE(bit_identical(out, s));
}

TEST(Integrate, TimeGridDoesNotDrift)
{
    auto p = ModelParams<double>::single_block();
    IntegratorConfig<double> cfg;
    cfg.t_end = 10;
    CountingObserver obs;
    const auto out = bk::integrate(SystemState<double>::at_rest(1), p, cfg, {&obs});
    ASSERT_EQ(obs.calls, 10000u);
    EXPECT_EQ(out.time, 10000 * 0.001);
    for (std::size_t k = 0; k < obs.times.size(); ++k)
        EXPECT_EQ(obs.times[k], static_cast<double>(k + 1) * 0.001);
}

TEST(Integrate, ObserversInRegistrationOrder)
{
    struct Tagger : bk::StepObserver<double> {
        std::vector<int>* log;
        int tag;
        Tagger(std::vector<int>* l, int t) : log(l), tag(t) {}
        void on_step(const bk::TrajectorySample<double>&) override { log->push_back(tag); }
    };
    std::vector<int> log;
    Tagger a(&log, 1), b(&log, 2);
    IntegratorConfig<double> cfg;
    cfg.t_end = 0.003;
    bk::integrate(SystemState<double>::at_rest(1), ModelParams<double>::single_block(), cfg, {&a, &b});
    EXPECT_EQ(log, (std::vector<int>{1, 2, 1, 2, 1, 2}));
}

TEST(Integrate, NonFiniteStateIsReported)
{
    auto p = ModelParams<double>::chain(3);
    auto s = SystemState<double>::at_rest(3);
    s.positions(2) = std::numeric_limits<double>::quiet_NaN();
    s.stuck(2) = false;
    IntegratorConfig<double> cfg;
    cfg.t_end = 0.01;
    try {
        bk::integrate(s, p, cfg);
        FAIL() << "expected NonFiniteStateError";
    } catch (const bk::NonFiniteStateError& e) {
        EXPECT_DOUBLE_EQ(e.time(), 0.001);
        EXPECT_GE(e.block(), 0);
        EXPECT_LT(e.block(), 3);
        EXPECT_NE(std::string(e.what()).find("block"), std::string::npos);
    }
}

TEST(Integrate, QuiescentShortcutIsExact)
{
    auto p = ModelParams<double>::chain(5);
    IntegratorConfig<double> cfg;
    cfg.t_end = 3000;
    cfg.seed = 11;
    const auto start = bk::warm_up(p, cfg);

    bk::EventDetector<double> fast_events(start), full_events(start);
    cfg.skip_quiescent = true;
    const auto fast = bk::integrate(start, p, cfg, {&fast_events});
    cfg.skip_quiescent = false;
    const auto full = bk::integrate(start, p, cfg, {&full_events});

    EXPECT_TRUE(bit_identical(fast, full));
    const auto a = fast_events.finish();
    const auto b = full_events.finish();
    ASSERT_EQ(a.events.size(), b.events.size());
    ASSERT_GT(a.events.size(), 0u);
    for (std::size_t k = 0; k < a.events.size(); ++k) {
        EXPECT_EQ(a.events[k].start_time, b.events[k].start_time);
        EXPECT_EQ(a.events[k].magnitude_log10, b.events[k].magnitude_log10);
    }
}

TEST(Integrate, SingleBlockSettlesIntoPeriodicCycle)
{
    auto p = ModelParams<double>::single_block();
    IntegratorConfig<double> cfg;
    cfg.t_end = 4000;
    cfg.perturbation_amplitude = 0;
    const auto start = bk::warm_up(p, cfg);
    bk::EventDetector<double> det(start);
    bk::integrate(start, p, cfg, {&det});
    const auto cat = det.finish();
    ASSERT_GE(cat.events.size(), 5u);
    for (std::size_t k = 2; k < cat.events.size(); ++k) {
        const double gap = cat.events[k].start_time - cat.events[k - 1].start_time;
        const double prev_gap = cat.events[k - 1].start_time - cat.events[k - 2].start_time;
        EXPECT_NEAR(gap / prev_gap, 1.0, 0.01);
        EXPECT_NEAR(cat.events[k].total_slip() / cat.events[k - 1].total_slip(), 1.0, 0.01);
    }
}

TEST(Config, Validation)
{
    IntegratorConfig<double> cfg;
    EXPECT_NO_THROW(bk::validate(cfg));
    cfg.step_size = 0;
    EXPECT_THROW(bk::validate(cfg), bk::ValidationError);
    cfg = {};
    cfg.t_end = -1;
    EXPECT_THROW(bk::validate(cfg), bk::ValidationError);
    cfg = {};
    cfg.perturbation_amplitude = -0.1;
    EXPECT_THROW(bk::validate(cfg), bk::ValidationError);
}
