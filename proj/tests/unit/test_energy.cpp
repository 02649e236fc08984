#include <plap/energy.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace plap;

namespace {

// Central differences of phi and of its gradient, independent of the closed forms.
Eigen::Vector2d fd_gradient(const Eigen::Vector2d& x, const EnergyParams& params, double h)
{
    Eigen::Vector2d g;
    for (int i = 0; i < 2; ++i) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e(i) = h;
        g(i) = (phi(x + e, params) - phi(x - e, params)) / (2 * h);
    }
    return g;
}

Eigen::Matrix2d fd_hessian(const Eigen::Vector2d& x, const EnergyParams& params, double h)
{
    Eigen::Matrix2d hess;
    for (int i = 0; i < 2; ++i) {
        Eigen::Vector2d e = Eigen::Vector2d::Zero();
        e(i) = h;
        hess.col(i) = (grad_phi(x + e, params) - grad_phi(x - e, params)) / (2 * h);
    }
    return hess;
}

} // namespace

TEST(EnergyParams, RejectsInvalidExponents)
{
    EXPECT_THROW(EnergyParams(1.0, 0.0), InvalidArgument);
    EXPECT_THROW(EnergyParams(0.5, 0.0), InvalidArgument);
    EXPECT_THROW(EnergyParams(2.0, -0.1), InvalidArgument);
    EXPECT_DOUBLE_EQ(EnergyParams(3.0, 0.0).q(), 1.5);
}

TEST(Energy, HandValues)
{
    // (0 + 9 + 16)^(3/2) / 3 = 125 / 3
    EXPECT_NEAR(phi(Eigen::Vector2d(3, 4), EnergyParams(3.0, 0.0)), 125.0 / 3.0, 1e-12);
    // tau = 1, x = 0, p = 4: 1 / 4
    EXPECT_NEAR(phi(Eigen::Vector2d::Zero(), EnergyParams(4.0, 1.0)), 0.25, 1e-15);
    // p = 2 is the Dirichlet energy shifted by tau^2 / 2
    EXPECT_NEAR(phi(Eigen::Vector2d(1, 2), EnergyParams(2.0, 0.5)), 0.5 * (0.25 + 5.0), 1e-15);
    EXPECT_TRUE(grad_phi(Eigen::Vector2d(0, 0), EnergyParams(1.5, 0.0)).isZero());
}

TEST(Energy, GradientAndHessianMatchFiniteDifferences)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> p_dist(1.2, 4.0), t_dist(0.0, 1.0), x_dist(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const EnergyParams params(p_dist(rng), trial % 4 == 0 ? 0.0 : t_dist(rng));
        const Eigen::Vector2d x(x_dist(rng), x_dist(rng));
        if (x.norm() < 0.05) {
            continue;
        }
        const double h = 1e-5 * std::max(1.0, x.norm());
        const Eigen::Vector2d g = grad_phi(x, params);
        EXPECT_LE((g - fd_gradient(x, params, h)).norm(), 1e-6 * std::max(1.0, g.norm()));
        const Eigen::Matrix2d hess = hessian_phi(x, params);
        EXPECT_LE((hess - fd_hessian(x, params, h)).norm(), 1e-5 * std::max(1.0, hess.norm()));
    }
}

TEST(Energy, ThirdDerivativeMatchesFiniteDifferences)
{
    const EnergyParams params(2.7, 0.3);
    const Eigen::Vector2d x(0.4, -0.9);
    const double h = 1e-5;
    for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
            for (int l = 0; l < 2; ++l) {
                Eigen::Vector2d e = Eigen::Vector2d::Zero();
                e(l) = h;
                const double fd = (hessian_phi(x + e, params)(j, k) - hessian_phi(x - e, params)(j, k)) / (2 * h);
                EXPECT_NEAR(third_derivative_phi(x, params, j, k, l), fd, 1e-7);
            }
        }
    }
    EXPECT_GE(max_abs_third_derivative_phi(x, params), std::abs(third_derivative_phi(x, params, 0, 0, 0)));
}

TEST(Energy, HomogeneityAtZeroTau)
{
    // phi(t x) = t^p phi(x) and D phi(t x) = t^(p - 1) D phi(x) for tau = 0.
    for (double p : {1.5, 2.0, 3.0}) {
        const EnergyParams params(p, 0.0);
        const Eigen::Vector2d x(0.3, 1.7);
        for (double t : {0.5, 2.0, 7.0}) {
            EXPECT_NEAR(phi(t * x, params), std::pow(t, p) * phi(x, params), 1e-12 * phi(t * x, params));
            EXPECT_LE((grad_phi(t * x, params) - std::pow(t, p - 1) * grad_phi(x, params)).norm(),
                      1e-12 * grad_phi(t * x, params).norm());
        }
    }
}

TEST(Energy, HessianAtSingularPoint)
{
    EXPECT_THROW(hessian_phi(Eigen::Vector2d(0, 0), EnergyParams(1.5, 0.0)), SingularPoint);
    EXPECT_TRUE(hessian_phi(Eigen::Vector2d(0, 0), EnergyParams(2.0, 0.0)).isIdentity());
    EXPECT_NO_THROW(hessian_phi(Eigen::Vector2d(0, 0), EnergyParams(1.5, 0.1)));
}

TEST(Energy, PlanarKernelFloorsVanishingGradientAtZeroTau)
{
    const PlanarKernel k = evaluate_planar(Eigen::Vector2d::Zero(), EnergyParams(3.0, 0.0), 1e-12);
    EXPECT_TRUE(k.flux.isZero());
    EXPECT_TRUE(k.tangent.allFinite());
    const Eigen::Vector2d g(0.2, -0.5);
    const PlanarKernel ok = evaluate_planar(g, EnergyParams(1.7, 0.0), 1e-12);
    EXPECT_LE((ok.tangent - hessian_phi(g, EnergyParams(1.7, 0.0))).norm(), 1e-14);
    EXPECT_LE((ok.flux - grad_phi(g, EnergyParams(1.7, 0.0))).norm(), 1e-15);
    EXPECT_NEAR(ok.energy, phi(g, EnergyParams(1.7, 0.0)), 1e-15);
}
