#ifndef BK_MODEL_HPP
#define BK_MODEL_HPP

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bk {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Flags = Eigen::Array<bool, Eigen::Dynamic, 1>;

/// Raised when a parameter set violates the model invariants.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Velocity-weakening friction law with a static threshold `f0`, a drop
/// `sigma` at slip onset and a weakening rate `alpha`.
template <typename Scalar = double>
struct FrictionParams {
    Scalar f0{1};
    Scalar sigma{0.01};
    Scalar alpha{1};

    /// Friction on a block that has just started to slip (the v -> 0+ limit).
    Scalar onset_friction() const { return f0 * (Scalar(1) - sigma); }
};

/// Physical constants of a chain of `n_blocks` identical blocks.
///
/// Everything is dimensionless. `spacing` only labels the lattice and never
/// enters the equations of motion.
template <typename Scalar = double>
struct ModelParams {
    Index n_blocks{1};
    Scalar mass{1};
    Scalar coupling_stiffness{60};
    Scalar plate_stiffness{1};
    Scalar plate_velocity{0.001};
    FrictionParams<Scalar> friction{};
    Scalar spacing{1};

    /// k_c / k_p, usually written l^2.
    Scalar stiffness_ratio() const { return coupling_stiffness / plate_stiffness; }

    /// Single block with the reference one-block constants.
    static ModelParams single_block()
    {
        ModelParams p;
        p.n_blocks = 1;
        p.coupling_stiffness = 60;
        return p;
    }

    /// Reference chain used for magnitude statistics.
    static ModelParams chain(Index n, Scalar alpha = 1)
    {
        ModelParams p;
        p.n_blocks = n;
        p.coupling_stiffness = 100;
        p.friction.alpha = alpha;
        return p;
    }
};

/// Checks the parameter invariants. Returns human-readable warnings for
/// admissible but borderline choices; throws ValidationError otherwise.
template <typename Scalar>
std::vector<std::string> validate(const ModelParams<Scalar>& p)
{
    auto require = [](bool ok, const char* what) {
        if (!ok)
            throw ValidationError(what);
    };
    auto positive = [](Scalar v) { return std::isfinite(static_cast<double>(v)) && v > Scalar(0); };

    require(p.n_blocks >= 1, "n_blocks must be at least 1");
    require(positive(p.mass), "mass must be positive");
    require(positive(p.coupling_stiffness), "coupling_stiffness must be positive");
    require(positive(p.plate_stiffness), "plate_stiffness must be positive");
    require(positive(p.plate_velocity), "plate_velocity must be positive");
    require(positive(p.spacing), "spacing must be positive");
    require(positive(p.friction.f0), "friction.f0 must be positive");
    require(positive(p.friction.alpha), "friction.alpha must be positive");
    require(p.friction.sigma > Scalar(0) && p.friction.sigma < Scalar(1), "friction.sigma must lie in (0, 1)");
    require(p.coupling_stiffness >= p.plate_stiffness,
            "coupling_stiffness must not be smaller than plate_stiffness");

    std::vector<std::string> warnings;
    if (p.coupling_stiffness == p.plate_stiffness)
        warnings.emplace_back("coupling_stiffness equals plate_stiffness (l^2 = 1)");
    return warnings;
}

/// Positions, velocities and stick flags of the chain at one instant.
///
/// `history` carries the vector-field evaluations at the current and the
/// previous step, packed as [dx/dt; dv/dt]. An empty history means the next
/// step has to bootstrap.
template <typename Scalar = double>
struct SystemState {
    struct History {
        Vector<Scalar> current;
        Vector<Scalar> previous;
    };

    Scalar time{0};
    Vector<Scalar> positions;
    Vector<Scalar> velocities;
    Flags stuck;
    std::optional<History> history;

    Index size() const { return positions.size(); }

    static SystemState at_rest(Index n)
    {
        SystemState s;
        s.positions = Vector<Scalar>::Zero(n);
        s.velocities = Vector<Scalar>::Zero(n);
        s.stuck = Flags::Constant(n, true);
        return s;
    }

    bool any_slipping() const { return !stuck.all(); }
    bool all_stuck() const { return stuck.all(); }

    /// [x; v] stacked into one vector of length 2N.
    Vector<Scalar> packed() const
    {
        Vector<Scalar> y(2 * size());
        y << positions, velocities;
        return y;
    }
};

/// Dynamic friction on a slipping block, v > 0.
template <typename Scalar>
Scalar dynamic_friction(Scalar v, const FrictionParams<Scalar>& fp)
{
    if (!(v > Scalar(0)))
        throw std::domain_error("dynamic_friction requires a strictly positive velocity");
    const Scalar drop = Scalar(1) - fp.sigma;
    return fp.f0 * drop / (Scalar(1) + Scalar(2) * fp.alpha * v / drop);
}

/// True iff a resultant `force` overcomes static friction. The static branch
/// is the closed range (-inf, f0], so equality stays stuck.
template <typename Scalar>
bool stick_release_check(Scalar force, const FrictionParams<Scalar>& fp)
{
    return force > fp.f0;
}

/// Coupling plus plate-spring force on every block, free ends (x_0 = x_1,
/// x_{N+1} = x_N).
template <typename Derived, typename Scalar = typename Derived::Scalar>
Vector<Scalar> elastic_forces(const Eigen::MatrixBase<Derived>& x, Scalar t, const ModelParams<Scalar>& p)
{
    const Index n = x.size();
    Vector<Scalar> f = p.plate_stiffness * (p.plate_velocity * t - x.array()).matrix();
    if (n >= 2) {
        Vector<Scalar> lap(n);
        lap(0) = x(1) - x(0);
        lap(n - 1) = x(n - 2) - x(n - 1);
        if (n > 2)
            lap.segment(1, n - 2) = x.segment(2, n - 2) - Scalar(2) * x.segment(1, n - 2) + x.segment(0, n - 2);
        f += p.coupling_stiffness * lap;
    }
    return f;
}

/// Net elastic force on block `i` (zero-based).
template <typename Derived, typename Scalar = typename Derived::Scalar>
Scalar net_elastic_force(Index i, const Eigen::MatrixBase<Derived>& x, Scalar t, const ModelParams<Scalar>& p)
{
    const Index n = x.size();
    if (i < 0 || i >= n)
        throw std::out_of_range("block index " + std::to_string(i) + " outside [0, " + std::to_string(n) + ")");
    const Scalar left = i > 0 ? x(i - 1) : x(i);
    const Scalar right = i + 1 < n ? x(i + 1) : x(i);
    return p.coupling_stiffness * (right - Scalar(2) * x(i) + left) + p.plate_stiffness * (p.plate_velocity * t - x(i));
}

/// Acceleration of one block given its velocity and resultant force.
///
/// A block at rest (v <= 0) is held by static friction unless the force
/// exceeds f0, in which case it starts with the onset friction f0 (1 - sigma).
template <typename Scalar>
Scalar block_acceleration(Scalar v, Scalar force, const ModelParams<Scalar>& p)
{
    if (v > Scalar(0))
        return (force - dynamic_friction(v, p.friction)) / p.mass;
    if (stick_release_check(force, p.friction))
        return (force - p.friction.onset_friction()) / p.mass;
    return Scalar(0);
}

template <typename Scalar>
Scalar acceleration(Index i, const SystemState<Scalar>& s, const ModelParams<Scalar>& p)
{
    const Scalar force = net_elastic_force(i, s.positions, s.time, p);
    const Scalar v = s.stuck(i) ? Scalar(0) : s.velocities(i);
    return block_acceleration(v, force, p);
}

/// Right-hand side of the first-order system y = [x; v], y' = [v; a].
template <typename Derived, typename Scalar = typename Derived::Scalar>
Vector<Scalar> vector_field(Scalar t, const Eigen::MatrixBase<Derived>& y, const ModelParams<Scalar>& p)
{
    const Index n = y.size() / 2;
    const auto x = y.head(n);
    const auto v = y.tail(n);
    const Vector<Scalar> force = elastic_forces(x, t, p);

    Vector<Scalar> dy(2 * n);
    dy.head(n) = v;
    for (Index i = 0; i < n; ++i)
        dy(n + i) = block_acceleration(v(i), force(i), p);
    return dy;
}

} // namespace bk

#endif // BK_MODEL_HPP
