#pragma once

// Smoothed p-energy density
//
//     phi(x) = (tau^2 + |x|^2)^(p/2) / p,     x in R^n, 1 < p < inf, tau >= 0,
//
// together with its gradient and Hessian. The formulas are dimension
// agnostic; the PDE modules instantiate them with n = 2.

#include <plap/errors.hpp>

#include <Eigen/Core>

#include <cmath>

namespace plap {

class EnergyParams {
public:
    EnergyParams(double p, double tau);

    double p() const noexcept { return p_; }
    double tau() const noexcept { return tau_; }
    /// Conjugate exponent q = p / (p - 1).
    double q() const noexcept { return p_ / (p_ - 1.0); }

private:
    double p_;
    double tau_;
};

namespace detail {
inline double shifted_norm2(double tau, double x_norm2) { return tau * tau + x_norm2; }
} // namespace detail

template <typename Derived>
double phi(const Eigen::MatrixBase<Derived>& x, const EnergyParams& params)
{
    const double s = detail::shifted_norm2(params.tau(), x.squaredNorm());
    return std::pow(s, 0.5 * params.p()) / params.p();
}

/// D phi(x) = (tau^2 + |x|^2)^((p-2)/2) x. At the singular point
/// (tau = 0, x = 0) the continuous limit 0 is returned for every p > 1.
template <typename Derived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, 1>
grad_phi(const Eigen::MatrixBase<Derived>& x, const EnergyParams& params)
{
    const double s = detail::shifted_norm2(params.tau(), x.squaredNorm());
    if (s == 0.0) {
        return Eigen::Matrix<double, Derived::RowsAtCompileTime, 1>::Zero(x.rows());
    }
    return std::pow(s, 0.5 * (params.p() - 2.0)) * x;
}

/// H(x) = s^((p-2)/2) I + (p-2) s^((p-4)/2) x x^T with s = tau^2 + |x|^2.
/// Throws SingularPoint at tau = 0, x = 0 unless p = 2.
template <typename Derived>
Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime>
hessian_phi(const Eigen::MatrixBase<Derived>& x, const EnergyParams& params)
{
    using Matrix = Eigen::Matrix<double, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime>;
    const auto n = x.rows();
    const double p = params.p();
    const double s = detail::shifted_norm2(params.tau(), x.squaredNorm());
    if (p == 2.0) {
        return Matrix::Identity(n, n);
    }
    if (s == 0.0) {
        throw SingularPoint("Hessian of phi is undefined at tau = 0, x = 0 for p != 2");
    }
    const double a = std::pow(s, 0.5 * (p - 2.0));
    return a * Matrix::Identity(n, n) + ((p - 2.0) * a / s) * (x * x.transpose());
}

/// Third derivative d^3 phi / dx_j dx_k dx_l.
double third_derivative_phi(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const EnergyParams& params, int j, int k, int l);

/// Largest |d^3 phi| over all index triples.
double max_abs_third_derivative_phi(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const EnergyParams& params);

/// Per-triangle evaluation used by the assembly loops. The gradient magnitude
/// is floored at `floor` when tau = 0 so that the Hessian stays finite.
struct PlanarKernel {
    double energy;
    Eigen::Vector2d flux;      // D phi(g)
    Eigen::Matrix2d tangent;   // H(g), possibly regularized
};

PlanarKernel evaluate_planar(const Eigen::Vector2d& g, const EnergyParams& params,
                             double gradient_floor);

} // namespace plap
