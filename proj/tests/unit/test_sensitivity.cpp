#include <plap/experiments.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace plap;

namespace {

const Discretization& small()
{
    static const auto disc = Discretization::disk(64, 24);
    return *disc;
}

SolverOptions tight()
{
    SolverOptions o;
    o.tol = 1e-13;
    return o;
}

Eigen::VectorXd bump()
{
    const auto& c = small().partition().centroids();
    Eigen::VectorXd eta(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
        eta(static_cast<Eigen::Index>(i)) = std::exp(-4.0 * (c[i] - Eigen::Vector2d(0.3, -0.2)).squaredNorm());
    }
    return eta;
}

} // namespace

TEST(Sensitivity, DerivativeMatchesCentralDifferences)
{
    const auto f = BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::cosine, 2, 64);
    const Eigen::VectorXd eta = bump();
    for (double p : {1.5, 3.0}) {
        const EnergyParams params(p, 0.1);
        const auto sigma0 = ConductivityField::constant(24, 1.0);
        const ForwardProblem problem(small().space(), small().partition(), sigma0, params);
        const auto u = solve_forward(problem, f, tight());
        const NodalField du = solve_derivative(problem, u.u, eta, Parametrization::conductivity);
        const double h = 1e-4;
        const auto up = solve_forward(small().space(), small().partition(),
                                      ConductivityField(Eigen::VectorXd::Ones(24) + h * eta), params, f, tight());
        const auto um = solve_forward(small().space(), small().partition(),
                                      ConductivityField(Eigen::VectorXd::Ones(24) - h * eta), params, f, tight());
        const Eigen::VectorXd fd = (up.u.values - um.u.values) / (2 * h);
        EXPECT_LE((du.values - fd).norm(), 1e-5 * fd.norm()) << "p=" << p;
    }
}

TEST(Sensitivity, DerivativeIsLinearInEta)
{
    const EnergyParams params(2.5, 0.1);
    const ForwardProblem problem(small().space(), small().partition(), ConductivityField::constant(24, 1.0), params);
    const auto u = solve_forward(problem, BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::sine, 3, 64));
    const DerivativeSolver solver(problem, u.u);
    const Eigen::VectorXd a = bump();
    const Eigen::VectorXd b = Eigen::VectorXd::LinSpaced(24, -1.0, 1.0);
    const Eigen::VectorXd lhs = solver.solve(2.0 * a - 3.0 * b, Parametrization::conductivity).values;
    const Eigen::VectorXd rhs = 2.0 * solver.solve(a, Parametrization::conductivity).values -
                                3.0 * solver.solve(b, Parametrization::conductivity).values;
    EXPECT_LE((lhs - rhs).norm(), 1e-12 * lhs.norm());
    // Columns add up to the response to a uniform perturbation.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(lhs.size());
    for (int c = 0; c < 24; ++c) {
        sum += solver.solve_cell(c, Parametrization::conductivity).values;
    }
    const Eigen::VectorXd uniform = solver.solve(Eigen::VectorXd::Ones(24), Parametrization::conductivity).values;
    EXPECT_LE((sum - uniform).norm(), 1e-11 * uniform.norm());
    EXPECT_THROW(solver.solve_cell(24, Parametrization::conductivity), InvalidArgument);
}

TEST(Sensitivity, ChainRuleAtUnitConductivity)
{
    const MeasurementModel model(small().space(), small().partition(), 8);
    const auto sigma0 = ConductivityField::constant(24, 1.0);
    for (double p : {1.5, 3.0}) {
        const EnergyParams params(p, 0.0);
        const JacobianMatrix std_j = assemble_jacobian(model, sigma0, params, Parametrization::conductivity);
        const double scale = std_j.entries.cwiseAbs().maxCoeff();
        const auto check = [&](Parametrization param, double factor) {
            const JacobianMatrix j = assemble_jacobian(model, sigma0, params, param);
            EXPECT_LE((j.entries - factor * std_j.entries).cwiseAbs().maxCoeff(), 1e-8 * scale) << to_string(param);
        };
        check(Parametrization::log_conductivity, 1.0);
        check(Parametrization::resistivity, -1.0);
        check(Parametrization::natural, -(p - 1.0));
    }
}

TEST(Sensitivity, JacobianSetAgreesWithSingleAssembly)
{
    const MeasurementModel model(small().space(), small().partition(), 8);
    Eigen::VectorXd sigma = Eigen::VectorXd::LinSpaced(24, 0.5, 2.0);
    const ConductivityField field(sigma);
    const EnergyParams params(2.5, 0.1);
    const JacobianSet set = assemble_jacobians(model, field, params);
    for (auto param : kAllParametrizations) {
        const JacobianMatrix single = assemble_jacobian(model, field, params, param);
        EXPECT_LE((set[param].entries - single.entries).norm(), 1e-10 * single.entries.norm()) << to_string(param);
    }
    EXPECT_LE((set.base.values - model.simulate(field, params).values).norm(), 1e-10);
}

TEST(Sensitivity, FrechetRemainderIsSuperlinear)
{
    const EnergyParams params(3.0, 0.1);
    const auto f = BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::cosine, 1, 64);
    const ForwardProblem problem(small().space(), small().partition(), ConductivityField::constant(24, 1.0), params);
    const auto u = solve_forward(problem, f, tight());
    const Eigen::VectorXd eta = bump();
    const Eigen::VectorXd du = solve_derivative(problem, u.u, eta, Parametrization::conductivity).values;
    std::vector<double> hs{1e-1, 1e-2, 1e-3}, rem;
    for (double h : hs) {
        const auto uh = solve_forward(small().space(), small().partition(),
                                      ConductivityField(Eigen::VectorXd::Ones(24) + h * eta), params, f, tight());
        rem.push_back(gradient_norm(small().space(), uh.u.values - u.u.values - h * du));
    }
    const double slope = (std::log(rem.front()) - std::log(rem.back())) / (std::log(hs.front()) - std::log(hs.back()));
    EXPECT_GE(slope, 1.8);
}

TEST(Sensitivity, JacobianCsvRoundTrip)
{
    JacobianMatrix j;
    j.entries = Eigen::MatrixXd::Random(4, 3);
    j.p = 1.75;
    j.tau = 0.1;
    j.parametrization = Parametrization::natural;
    j.mesh_hash = "00ff";
    std::stringstream ss;
    write_jacobian_csv(ss, j);
    EXPECT_EQ(ss.str().rfind("# plap jacobian", 0), 0u);
    const JacobianMatrix back = read_jacobian_csv(ss);
    EXPECT_EQ(back.entries, j.entries);
    EXPECT_EQ(back.p, j.p);
    EXPECT_EQ(back.tau, j.tau);
    EXPECT_EQ(back.parametrization, j.parametrization);
    EXPECT_EQ(back.mesh_hash, j.mesh_hash);
    std::istringstream broken("# p=2\n");
    EXPECT_THROW(read_jacobian_csv(broken), ParseError);
}

TEST(Sensitivity, RejectsForeignSolution)
{
    const ForwardProblem problem(small().space(), small().partition(), ConductivityField::constant(24, 1.0),
                                 EnergyParams(2.0, 0.0));
    NodalField u{Eigen::VectorXd::Zero(3), small().mesh().id()};
    EXPECT_THROW(DerivativeSolver(problem, u), MeshMismatch);
}
