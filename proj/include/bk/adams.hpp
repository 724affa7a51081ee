#ifndef BK_ADAMS_HPP
#define BK_ADAMS_HPP

#include <Eigen/Dense>

namespace bk {

// Fixed-step kernels for y' = f(t, y). `f` is any callable returning a
// dense vector of the same size as y.

template <typename Scalar>
struct StepResult {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> f;  // f(t + h, y)
};

/// Explicit midpoint rule (second order) given k1 = f(t, y). Used to start
/// the two-step scheme.
template <typename Field, typename Derived, typename D1, typename Scalar = typename Derived::Scalar>
StepResult<Scalar> midpoint_step(Field&& f, Scalar t, const Eigen::MatrixBase<Derived>& y, Scalar h,
                                 const Eigen::MatrixBase<D1>& k1)
{
    using V = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const V mid = y + (h / Scalar(2)) * k1;
    const V k2 = f(t + h / Scalar(2), mid);
    StepResult<Scalar> out;
    out.y = y + h * k2;
    out.f = f(t + h, out.y);
    return out;
}

template <typename Field, typename Derived, typename Scalar = typename Derived::Scalar>
StepResult<Scalar> midpoint_step(Field&& f, Scalar t, const Eigen::MatrixBase<Derived>& y, Scalar h)
{
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> k1 = f(t, y);
    return midpoint_step(f, t, y, h, k1);
}

/// One PECE step: AB2 predictor, AM3 corrector, final evaluation.
///
/// `f_n` is f(t, y) and `f_prev` is the evaluation one step earlier.
template <typename Field, typename Derived, typename D1, typename D2, typename Scalar = typename Derived::Scalar>
StepResult<Scalar> pece_ab2_am3(Field&& f,
                                Scalar t,
                                const Eigen::MatrixBase<Derived>& y,
                                Scalar h,
                                const Eigen::MatrixBase<D1>& f_n,
                                const Eigen::MatrixBase<D2>& f_prev)
{
    using V = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    const V predicted = y + (h / Scalar(2)) * (Scalar(3) * f_n - f_prev);
    const V f_predicted = f(t + h, predicted);
    StepResult<Scalar> out;
    out.y = y + (h / Scalar(12)) * (Scalar(5) * f_predicted + Scalar(8) * f_n - f_prev);
    out.f = f(t + h, out.y);
    return out;
}

} // namespace bk

#endif // BK_ADAMS_HPP
