#include <plap/energy.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace plap {

EnergyParams::EnergyParams(double p, double tau) : p_(p), tau_(tau)
{
    if (!(p > 1.0) || !std::isfinite(p)) {
        std::ostringstream os;
        os << "exponent p must satisfy 1 < p < inf, got " << p;
        throw InvalidArgument(os.str());
    }
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        std::ostringstream os;
        os << "smoothing parameter tau must be finite and >= 0, got " << tau;
        throw InvalidArgument(os.str());
    }
}

double third_derivative_phi(const Eigen::Ref<const Eigen::VectorXd>& x,
                            const EnergyParams& params, int j, int k, int l)
{
    const double p = params.p();
    const double s = params.tau() * params.tau() + x.squaredNorm();
    if (p == 2.0) {
        return 0.0;
    }
    if (s == 0.0) {
        throw SingularPoint("third derivative of phi is undefined at tau = 0, x = 0");
    }
    const double b = std::pow(s, 0.5 * (p - 4.0));
    const auto delta = [](int a, int c) { return a == c ? 1.0 : 0.0; };
    const double sym = delta(j, k) * x(l) + delta(j, l) * x(k) + delta(k, l) * x(j);
    return (p - 2.0) * b * sym + (p - 2.0) * (p - 4.0) * (b / s) * x(j) * x(k) * x(l);
}

double max_abs_third_derivative_phi(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    const EnergyParams& params)
{
    const int n = static_cast<int>(x.size());
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
            for (int l = k; l < n; ++l) {
                worst = std::max(worst, std::abs(third_derivative_phi(x, params, j, k, l)));
            }
        }
    }
    return worst;
}

PlanarKernel evaluate_planar(const Eigen::Vector2d& g, const EnergyParams& params,
                             double gradient_floor)
{
    const double p = params.p();
    const double tau2 = params.tau() * params.tau();
    const double g2 = g.squaredNorm();
    const double s = tau2 + g2;

    PlanarKernel out;
    if (p == 2.0) {
        out.energy = 0.5 * s;
        out.flux = g;
        out.tangent.setIdentity();
        return out;
    }

    out.energy = s > 0.0 ? std::pow(s, 0.5 * p) / p : 0.0;
    const double a = s > 0.0 ? std::pow(s, 0.5 * (p - 2.0)) : 0.0;
    out.flux = a * g;

    // Regularized tangent: only the degenerate case tau = 0 needs the floor.
    double s_tan = s;
    if (tau2 == 0.0) {
        s_tan = std::max(s, gradient_floor * gradient_floor);
    }
    const double a_tan = std::pow(s_tan, 0.5 * (p - 2.0));
    out.tangent = a_tan * Eigen::Matrix2d::Identity() + ((p - 2.0) * a_tan / s_tan) * (g * g.transpose());
    return out;
}

} // namespace plap
