#include <plap/reconstruct.hpp>
#include <plap/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

using namespace plap;

namespace {

struct Fixture {
    JacobianMatrix j;
    CovarianceModel model;
    MeasurementVector base;
    MeasurementVector data;
};

Fixture make(Parametrization param, std::uint64_t seed = 1)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Fixture f;
    f.j.entries.resize(16, 6);
    for (Eigen::Index r = 0; r < 16; ++r) {
        for (Eigen::Index c = 0; c < 6; ++c) {
            f.j.entries(r, c) = normal(rng) / (1.0 + static_cast<double>(r));
        }
    }
    f.j.parametrization = param;
    std::vector<Eigen::Vector2d> pts;
    for (int i = 0; i < 6; ++i) {
        pts.emplace_back(0.3 * i - 0.75, 0.0);
    }
    f.model = covariance_matrix(pts, 0.25, 1.0 / 3.0);
    f.base.j_max = 2;
    f.base.values = Eigen::VectorXd::LinSpaced(16, 1.0, 0.1);
    f.data = f.base;
    for (Eigen::Index r = 0; r < 16; ++r) {
        f.data.values(r) += 0.05 * normal(rng);
    }
    return f;
}

double objective(const Fixture& f, const OneStepMap& map, const Eigen::VectorXd& x)
{
    const Eigen::VectorXd r = f.data.values - f.base.values - f.j.entries * (x - map.base_point());
    const Eigen::VectorXd d = x - map.prior().mean;
    return r.squaredNorm() + map.effective_lambda2() * d.dot(map.prior().cov.ldlt().solve(d));
}

} // namespace

TEST(Reconstruct, ParameterPriors)
{
    const Fixture f = make(Parametrization::log_conductivity);
    const ParameterPrior exp_prior = parameter_prior(f.model, Parametrization::log_conductivity, 2.0);
    EXPECT_EQ(exp_prior.mean, Eigen::VectorXd::Zero(6));
    EXPECT_EQ(exp_prior.cov, f.model.sigma);
    // rho = exp(-kappa) and sigma = exp(kappa) share their moments.
    const ParameterPrior std_prior = parameter_prior(f.model, Parametrization::conductivity, 2.0);
    const ParameterPrior inv_prior = parameter_prior(f.model, Parametrization::resistivity, 2.0);
    EXPECT_TRUE(std_prior.mean.isApprox(inv_prior.mean, 1e-15));
    EXPECT_NEAR(std_prior.mean(0), std::exp(0.125), 1e-14);
    // mu = exp(-kappa / (p - 1)) at p = 2 equals rho.
    const ParameterPrior nat_prior = parameter_prior(f.model, Parametrization::natural, 2.0);
    EXPECT_TRUE(nat_prior.cov.isApprox(inv_prior.cov, 1e-15));
}

TEST(Reconstruct, DataAtTheBasePointReturnsTheBasePoint)
{
    for (auto param : kAllParametrizations) {
        Fixture f = make(param);
        const ParameterPrior prior{Eigen::VectorXd::Constant(6, base_value(param)), f.model.sigma};
        const OneStepMap map(f.j, prior, 1e-2);
        const Eigen::VectorXd x = map.reconstruct(f.base, f.base);
        EXPECT_LE((x - map.base_point()).cwiseAbs().maxCoeff(), 1e-12) << to_string(param);
    }
}

TEST(Reconstruct, LargeNoiseLevelReturnsThePriorMean)
{
    const Fixture f = make(Parametrization::conductivity);
    const ParameterPrior prior = parameter_prior(f.model, Parametrization::conductivity, 2.0);
    const OneStepMap map(f.j, prior, 1e6);
    EXPECT_LE((map.reconstruct(f.data, f.base) - prior.mean).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Reconstruct, StationarityAndLocalOptimality)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto param : kAllParametrizations) {
        const Fixture f = make(param, 3);
        const OneStepMap map(f.j, parameter_prior(f.model, param, 2.5), 1e-2);
        const Eigen::VectorXd x = map.reconstruct(f.data, f.base);
        EXPECT_LE(map.stationarity_residual(x, f.data, f.base), 1e-10) << to_string(param);
        const double best = objective(f, map, x);
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::VectorXd y = x;
            for (Eigen::Index i = 0; i < y.size(); ++i) {
                y(i) += 1e-3 * normal(rng);
            }
            EXPECT_LE(best, objective(f, map, y) * (1.0 + 1e-12)) << to_string(param);
        }
    }
}

TEST(Reconstruct, AffineInTheData)
{
    const Fixture f = make(Parametrization::log_conductivity);
    const OneStepMap map(f.j, parameter_prior(f.model, Parametrization::log_conductivity, 2.0), 1e-2);
    MeasurementVector a = f.data, b = f.data;
    b.values = f.base.values + 2.0 * (f.data.values - f.base.values);
    a.values = f.base.values + 0.5 * (f.data.values - f.base.values);
    const Eigen::VectorXd xa = map.reconstruct(a, f.base);
    const Eigen::VectorXd xb = map.reconstruct(b, f.base);
    const Eigen::VectorXd x0 = map.reconstruct(f.base, f.base);
    // x(t) = x0 + t g, so x(2) - x0 = 4 (x(1/2) - x0).
    EXPECT_LE(((xb - x0) - 4.0 * (xa - x0)).norm(), 1e-12 * (xb - x0).norm());
}

TEST(Reconstruct, ConvenienceFunctionMatchesTheClass)
{
    const Fixture f = make(Parametrization::conductivity);
    const ParameterPrior prior = parameter_prior(f.model, Parametrization::conductivity, 2.0);
    const OneStepMap map(f.j, prior, 3e-2);
    EXPECT_TRUE(one_step_map(f.data, f.j, f.base, prior.mean, prior.cov, 3e-2)
                    .isApprox(map.reconstruct(f.data, f.base), 1e-14));
}

TEST(Reconstruct, RejectsBadInput)
{
    const Fixture f = make(Parametrization::conductivity);
    const ParameterPrior prior = parameter_prior(f.model, Parametrization::conductivity, 2.0);
    EXPECT_THROW(OneStepMap(f.j, prior, 0.0), InvalidArgument);
    EXPECT_THROW(OneStepMap(f.j, prior, 1e-2, -1.0), InvalidArgument);
    EXPECT_THROW(OneStepMap(f.j, ParameterPrior{Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3)}, 1e-2),
                 MeshMismatch);
    // Rank-deficient J with a tiny noise level.
    JacobianMatrix flat = f.j;
    flat.entries.setZero();
    flat.entries.col(0).setOnes();
    flat.entries *= 1e4;
    EXPECT_THROW(OneStepMap(flat, prior, 1e-8), IllConditioned);
}

TEST(Reconstruct, ToLogConductivity)
{
    Eigen::VectorXd x(1);
    x << std::exp(1.0);
    EXPECT_NEAR(to_log_conductivity(x, Parametrization::natural, 2.0).kappa(0), -1.0, 1e-15);
    EXPECT_NEAR(to_log_conductivity(x, Parametrization::natural, 3.0).kappa(0), -2.0, 1e-15);
    EXPECT_NEAR(to_log_conductivity(x, Parametrization::resistivity, 3.0).kappa(0), -1.0, 1e-15);
    EXPECT_NEAR(to_log_conductivity(x, Parametrization::conductivity, 3.0).kappa(0), 1.0, 1e-15);
    EXPECT_EQ(to_log_conductivity(x, Parametrization::log_conductivity, 3.0).kappa(0), x(0));

    Eigen::VectorXd bad(3);
    bad << 1.0, 0.0, -2.0;
    const LogConductivity k = to_log_conductivity(bad, Parametrization::conductivity, 2.0, 1e-6);
    EXPECT_EQ(k.clipped, 2u);
    EXPECT_NEAR(k.kappa(2), std::log(1e-6), 1e-14);
    EXPECT_EQ(to_log_conductivity(bad, Parametrization::log_conductivity, 2.0).clipped, 0u);
}

TEST(Reconstruct, ManifestAndCsv)
{
    ReconstructionRecord rec;
    rec.sample = "A";
    rec.p = 1.5;
    const std::string manifest = reconstruction_manifest(rec);
    EXPECT_NE(manifest.find("plap-reconstruction-v1"), std::string::npos);
    EXPECT_NE(manifest.find("\"exp\""), std::string::npos);
    std::ostringstream os;
    write_reconstruction_csv(os, {Eigen::VectorXd::Zero(2)}, {Eigen::VectorXd::Ones(2)});
    EXPECT_EQ(os.str(), "member,kind,cell0,cell1\n0,truth,0,0\n0,reco,1,1\n");
}
