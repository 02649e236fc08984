#include <plap/experiments.hpp>
#include <plap/parallel.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace plap;

namespace {

const Discretization& desk()
{
    static const auto disc = Discretization::disk(128, 240);
    return *disc;
}

BoundaryCurrent cosine(int j)
{
    return BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::cosine, j, desk().mesh().boundary_count());
}

ConductivityField ones()
{
    return ConductivityField::constant(desk().partition().cell_count(), 1.0);
}

ForwardSolution solve(const ConductivityField& sigma, double p, double tau, const BoundaryCurrent& f,
                      SolverOptions options = {})
{
    return solve_forward(desk().space(), desk().partition(), sigma, EnergyParams(p, tau), f, options);
}

double coefficient(const NodalField& u, std::size_t slot)
{
    return project_trace(boundary_trace(desk().mesh(), u), 8)(static_cast<Eigen::Index>(slot));
}

Eigen::VectorXd smooth_log_field(double amplitude)
{
    const auto& c = desk().partition().centroids();
    Eigen::VectorXd k(static_cast<Eigen::Index>(c.size()));
    for (std::size_t i = 0; i < c.size(); ++i) {
        k(static_cast<Eigen::Index>(i)) = amplitude * std::sin(2.0 * c[i].x()) * std::cos(1.5 * c[i].y() + 0.3);
    }
    return k;
}

} // namespace

TEST(BoundaryCurrent, LabelsAndParsing)
{
    const auto f = BoundaryCurrent::parse("sin5", 64);
    EXPECT_EQ(f.kind, BoundaryCurrent::Kind::sine);
    EXPECT_EQ(f.frequency, 5);
    EXPECT_EQ(f.label(), "sin5");
    EXPECT_NEAR(f.samples.sum(), 0.0, 1e-12);
    EXPECT_THROW(BoundaryCurrent::parse("tan1", 64), InvalidArgument);
    EXPECT_THROW(BoundaryCurrent::parse("cos", 64), InvalidArgument);
    EXPECT_THROW(BoundaryCurrent::parse("cos2x", 64), InvalidArgument);
}

TEST(Forward, LinearFieldIsExactForEveryExponent)
{
    for (double p : {1.5, 2.0, 2.5, 3.0}) {
        const auto sol = solve(ones(), p, 0.0, cosine(1));
        EXPECT_NEAR(coefficient(sol.u, 0), 1.0, 1e-2) << "p=" << p;
        EXPECT_EQ(sol.u.values(desk().space().gauge()), 0.0);
        EXPECT_LE(sol.report.residual, 1e-10);
    }
}

TEST(Forward, HarmonicTracesAtPTwo)
{
    for (int j = 1; j <= 8; ++j) {
        const auto sol = solve(ones(), 2.0, 0.0, cosine(j));
        const double c = coefficient(sol.u, 2 * static_cast<std::size_t>(j - 1));
        EXPECT_NEAR(c * j, 1.0, 2e-2) << "j=" << j;
    }
}

TEST(Forward, EnergyOfCoordinateField)
{
    // v = x1, sigma = 1, p = 2: int |grad v|^2 / 2 = area / 2, boundary term = pi.
    NodalField v;
    v.mesh_id = desk().mesh().id();
    v.values.resize(static_cast<Eigen::Index>(desk().mesh().node_count()));
    for (std::size_t i = 0; i < desk().mesh().node_count(); ++i) {
        v.values(static_cast<Eigen::Index>(i)) = desk().mesh().nodes()[i].x();
    }
    const double e = energy(desk().space(), desk().partition(), v, ones(), EnergyParams(2.0, 0.0), cosine(1));
    EXPECT_NEAR(e, -std::numbers::pi / 2, 2e-3);

    NodalField zero{Eigen::VectorXd::Zero(v.values.size()), v.mesh_id};
    EXPECT_EQ(energy(desk().space(), desk().partition(), zero, ones(), EnergyParams(3.0, 0.0), cosine(2)), 0.0);
    NodalField foreign{v.values, v.mesh_id + 1};
    EXPECT_THROW(energy(desk().space(), desk().partition(), foreign, ones(), EnergyParams(2.0, 0.0), cosine(1)),
                 MeshMismatch);
}

TEST(Forward, SolutionMinimizesTheEnergy)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double p : {1.5, 3.0}) {
        const EnergyParams params(p, 0.1);
        const auto f = cosine(3);
        const auto sol = solve(ones(), p, 0.1, f);
        const double e0 = energy(desk().space(), desk().partition(), sol.u, ones(), params, f);
        for (int trial = 0; trial < 20; ++trial) {
            NodalField v = sol.u;
            for (Eigen::Index i = 0; i < v.values.size(); ++i) {
                v.values(i) += 1e-3 * normal(rng);
            }
            EXPECT_LE(e0, energy(desk().space(), desk().partition(), v, ones(), params, f));
        }
    }
}

TEST(Forward, NewtonEnergyIsNonIncreasing)
{
    const ConductivityField sigma = ConductivityField::from_log(smooth_log_field(0.8));
    for (double p : {1.5, 3.0}) {
        const auto sol = solve(sigma, p, 0.0, cosine(4));
        double previous = std::numeric_limits<double>::infinity();
        for (const auto& entry : sol.report.history) {
            if (entry.p != p) {
                previous = std::numeric_limits<double>::infinity();
                continue;
            }
            EXPECT_LE(entry.energy, previous + 1e-12 * std::abs(previous));
            previous = entry.energy;
        }
    }
}

TEST(Forward, IterationBudgets)
{
    EXPECT_EQ(solve(ones(), 2.0, 0.0, cosine(2)).report.steps, 1);
    EXPECT_LE(solve(ones(), 3.0, 0.0, cosine(1)).report.steps, 15);
    const ConductivityField sample_a = ConductivityField::from_log(smooth_log_field(0.5));
    const auto sol = solve(sample_a, 1.5, 0.1, cosine(1));
    EXPECT_LE(sol.report.residual, 1e-10);
}

TEST(Forward, CurrentScalingLaw)
{
    const ConductivityField sigma = ConductivityField::from_log(smooth_log_field(0.5));
    for (double p : {1.5, 3.0}) {
        const auto f = cosine(2);
        const auto base = solve(sigma, p, 0.0, f);
        for (double s : {0.5, 2.0, 10.0}) {
            BoundaryCurrent scaled = f;
            scaled.samples *= s;
            const auto u = solve(sigma, p, 0.0, scaled);
            const Eigen::VectorXd expected = std::pow(s, 1.0 / (p - 1.0)) * base.u.values;
            EXPECT_LE((u.u.values - expected).norm(), 1e-8 * expected.norm()) << "p=" << p << " s=" << s;
        }
    }
}

TEST(Forward, ConductivityScalingLaw)
{
    for (double p : {1.5, 3.0}) {
        const auto f = cosine(3);
        const auto base = solve(ones(), p, 0.0, f);
        for (double c : {0.5, 2.0}) {
            const auto u = solve(ConductivityField::constant(desk().partition().cell_count(), c), p, 0.0, f);
            const Eigen::VectorXd expected = std::pow(c, -1.0 / (p - 1.0)) * base.u.values;
            EXPECT_LE((u.u.values - expected).norm(), 1e-8 * expected.norm()) << "p=" << p << " c=" << c;
        }
    }
}

TEST(Forward, LipschitzInTheConductivity)
{
    const EnergyParams params(3.0, 0.1);
    const auto f = cosine(1);
    const Eigen::VectorXd direction = smooth_log_field(1.0);
    const auto u0 = solve(ones(), 3.0, 0.1, f);
    std::vector<double> ratios;
    for (double h = 0.2; h > 0.2 / 32; h *= 0.5) {
        const Eigen::VectorXd sigma1 = Eigen::VectorXd::Ones(direction.size()) + h * direction;
        const auto u1 = solve(ConductivityField(sigma1), 3.0, 0.1, f);
        ratios.push_back(gradient_norm(desk().space(), u1.u.values - u0.u.values) / (h * direction.cwiseAbs().maxCoeff()));
    }
    for (double r : ratios) {
        EXPECT_LT(r, 2.0 * ratios.front());
        EXPECT_GT(r, 0.0);
    }
}

TEST(Forward, RejectsInvalidInput)
{
    BoundaryCurrent f = cosine(1);
    f.samples.array() += 1.0;
    EXPECT_THROW(solve(ones(), 2.0, 0.0, f), InvalidArgument);
    BoundaryCurrent short_f = BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::cosine, 1, 64);
    EXPECT_THROW(solve(ones(), 2.0, 0.0, short_f), MeshMismatch);
    const auto other = Discretization::disk(32, 8);
    EXPECT_THROW(ForwardProblem(desk().space(), other->partition(), ones(), EnergyParams(2.0, 0.0)), MeshMismatch);
}

TEST(Forward, ConcurrentSolvesAgreeWithSequential)
{
    const ConductivityField sigma = ConductivityField::from_log(smooth_log_field(0.7));
    std::vector<Eigen::VectorXd> serial(4), threaded(4);
    for (int j = 0; j < 4; ++j) {
        serial[j] = solve(sigma, 2.5, 0.0, cosine(j + 1)).u.values;
    }
    set_thread_count(4);
    parallel_for(4, [&](std::size_t j) { threaded[j] = solve(sigma, 2.5, 0.0, cosine(static_cast<int>(j) + 1)).u.values; });
    set_thread_count(1);
    for (int j = 0; j < 4; ++j) {
        EXPECT_EQ(serial[j], threaded[j]);
    }
}
