#include <gtest/gtest.h>

#include "bk/model.hpp"

#include <random>

using bk::FrictionParams;
using bk::ModelParams;
using bk::SystemState;

namespace {

FrictionParams<double> reference_friction()
{
    return {1.0, 0.01, 1.0};
}

} // namespace

TEST(DynamicFriction, OnsetLimit)
{
    const auto fp = reference_friction();
    EXPECT_NEAR(bk::dynamic_friction(1e-15, fp), 0.99, 1e-12);
    EXPECT_DOUBLE_EQ(fp.onset_friction(), 0.99);
}

TEST(DynamicFriction, HalfAtCharacteristicVelocity)
{
    const auto fp = reference_friction();
    const double v = (1.0 - fp.sigma) / (2.0 * fp.alpha);
    EXPECT_DOUBLE_EQ(bk::dynamic_friction(v, fp), 0.495);
}

TEST(DynamicFriction, DecaysAtLargeVelocity)
{
    EXPECT_LT(bk::dynamic_friction(1e6, reference_friction()), 1e-5);
}

TEST(DynamicFriction, RejectsNonPositiveVelocity)
{
    EXPECT_THROW(bk::dynamic_friction(0.0, reference_friction()), std::domain_error);
    EXPECT_THROW(bk::dynamic_friction(-1.0, reference_friction()), std::domain_error);
}

TEST(DynamicFriction, StrictlyDecreasing)
{
    const auto fp = reference_friction();
    double prev = fp.onset_friction();
    for (double v = 1e-6; v < 1e3; v *= 1.7) {
        const double f = bk::dynamic_friction(v, fp);
        EXPECT_LT(f, prev);
        EXPECT_GT(f, 0.0);
        prev = f;
    }
}

TEST(NetElasticForce, SingleBlockAtRest)
{
    const auto p = ModelParams<double>::single_block();
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
    EXPECT_EQ(bk::net_elastic_force(0, x, 0.0, p), 0.0);
}

TEST(NetElasticForce, ConstantDisplacementFeelsOnlyThePlate)
{
    auto p = ModelParams<double>::chain(3);
    const double t = 250.0;
    for (double c : {-2.0, 0.0, 0.37, 5.0}) {
        const Eigen::VectorXd x = Eigen::VectorXd::Constant(3, c);
        for (bk::Index i = 0; i < 3; ++i)
            EXPECT_DOUBLE_EQ(bk::net_elastic_force(i, x, t, p), p.plate_stiffness * (p.plate_velocity * t - c));
    }
}

TEST(NetElasticForce, LaplacianStencil)
{
    ModelParams<double> p;
    p.n_blocks = 3;
    p.coupling_stiffness = 1;
    p.plate_stiffness = 0;
    const Eigen::Vector3d x(0, 1, 0);
    EXPECT_DOUBLE_EQ(bk::net_elastic_force(1, x, 0.0, p), -2.0);
    // free ends: ghost cell copies the end block
    EXPECT_DOUBLE_EQ(bk::net_elastic_force(0, x, 0.0, p), 1.0);
    EXPECT_DOUBLE_EQ(bk::net_elastic_force(2, x, 0.0, p), 1.0);
}

TEST(NetElasticForce, IndexOutOfRange)
{
    const auto p = ModelParams<double>::chain(3);
    const Eigen::VectorXd x = Eigen::VectorXd::Zero(3);
    EXPECT_THROW(bk::net_elastic_force(3, x, 0.0, p), std::out_of_range);
    EXPECT_THROW(bk::net_elastic_force(-1, x, 0.0, p), std::out_of_range);
}

TEST(NetElasticForce, VectorFormMatchesPerBlock)
{
    auto p = ModelParams<double>::chain(7);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    Eigen::VectorXd x(7);
    for (auto& xi : x)
        xi = g(rng);
    const Eigen::VectorXd f = bk::elastic_forces(x, 12.5, p);
    for (bk::Index i = 0; i < 7; ++i)
        EXPECT_DOUBLE_EQ(f(i), bk::net_elastic_force(i, x, 12.5, p));
}

TEST(StickRelease, Threshold)
{
    const auto fp = reference_friction();
    EXPECT_FALSE(bk::stick_release_check(1.0, fp));
    EXPECT_TRUE(bk::stick_release_check(1.0 + 1e-12, fp));
    EXPECT_FALSE(bk::stick_release_check(-5.0, fp));
}

TEST(Acceleration, StuckBelowThreshold)
{
    auto p = ModelParams<double>::single_block();
    auto s = SystemState<double>::at_rest(1);
    // force 0.5 at t = 500
    s.time = 500.0;
    EXPECT_EQ(bk::acceleration(0, s, p), 0.0);
}

TEST(Acceleration, ReleaseUsesOnsetFriction)
{
    auto p = ModelParams<double>::single_block();
    auto s = SystemState<double>::at_rest(1);
    s.positions(0) = -1.01;  // k_p (V t - x) = 1.01 at t = 0
    EXPECT_NEAR(bk::acceleration(0, s, p), 0.02, 1e-14);
}

TEST(Acceleration, Slipping)
{
    auto p = ModelParams<double>::single_block();
    auto s = SystemState<double>::at_rest(1);
    s.positions(0) = -1.0;
    s.velocities(0) = 0.99 / 2.0;
    s.stuck(0) = false;
    EXPECT_NEAR(bk::acceleration(0, s, p), 0.505, 1e-14);
}

TEST(ModelParams, StiffnessRatio)
{
    EXPECT_EQ(ModelParams<double>::chain(200).stiffness_ratio(), 100.0);
    EXPECT_EQ(ModelParams<double>::single_block().stiffness_ratio(), 60.0);
}

TEST(ModelParams, Validation)
{
    auto p = ModelParams<double>::chain(4);
    EXPECT_TRUE(bk::validate(p).empty());

    auto bad = p;
    bad.plate_stiffness = 0;
    EXPECT_THROW(bk::validate(bad), bk::ValidationError);
    bad = p;
    bad.friction.sigma = 1.0;
    EXPECT_THROW(bk::validate(bad), bk::ValidationError);
    bad = p;
    bad.friction.alpha = -1.0;
    EXPECT_THROW(bk::validate(bad), bk::ValidationError);
    bad = p;
    bad.n_blocks = 0;
    EXPECT_THROW(bk::validate(bad), bk::ValidationError);
    bad = p;
    bad.coupling_stiffness = 0.5;
    EXPECT_THROW(bk::validate(bad), bk::ValidationError);

    auto equal = p;
    equal.coupling_stiffness = equal.plate_stiffness;
    EXPECT_EQ(bk::validate(equal).size(), 1u);
}

TEST(VectorField, MatchesPerBlockAcceleration)
{
    auto p = ModelParams<double>::chain(5, 2.0);
    SystemState<double> s = SystemState<double>::at_rest(5);
    s.time = 3.0;
    s.positions << -1.2, 0.1, -0.3, 0.0, -2.0;
    s.velocities << 0.0, 0.2, 0.0, 1.5, 0.0;
    s.stuck << true, false, true, false, true;
    const Eigen::VectorXd dy = bk::vector_field(s.time, s.packed(), p);
    for (bk::Index i = 0; i < 5; ++i) {
        EXPECT_EQ(dy(i), s.velocities(i));
        EXPECT_DOUBLE_EQ(dy(5 + i), bk::acceleration(i, s, p));
    }
}
