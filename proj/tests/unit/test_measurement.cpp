#include <plap/experiments.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

using namespace plap;

TEST(Measurement, SlotLabels)
{
    EXPECT_EQ(trig_label(0), "cos1");
    EXPECT_EQ(trig_label(1), "sin1");
    EXPECT_EQ(trig_label(15), "sin8");
}

TEST(Measurement, ProjectionRecoversTrigonometricTraces)
{
    const int n = 128;
    for (int j = 1; j <= 8; ++j) {
        Eigen::VectorXd c(n), s(n);
        for (int k = 0; k < n; ++k) {
            const double theta = 2.0 * std::numbers::pi * k / n;
            c(k) = std::cos(j * theta);
            s(k) = std::sin(j * theta) + 3.0; // constants drop out
        }
        const Eigen::VectorXd pc = project_trace(c, 8);
        const Eigen::VectorXd ps = project_trace(s, 8);
        for (int slot = 0; slot < 16; ++slot) {
            EXPECT_NEAR(pc(slot), slot == 2 * (j - 1) ? 1.0 : 0.0, 1e-13);
            EXPECT_NEAR(ps(slot), slot == 2 * (j - 1) + 1 ? 1.0 : 0.0, 1e-13);
        }
    }
}

TEST(Measurement, AliasingGuard)
{
    EXPECT_NO_THROW(trig_currents(8, 64));
    EXPECT_THROW(trig_currents(8, 32), AliasingError);
    EXPECT_THROW(trig_currents(0, 64), InvalidArgument);
    EXPECT_EQ(trig_currents(8, 128).size(), 16u);
    EXPECT_EQ(trig_currents(8, 128)[3].label(), "sin2");
}

TEST(Measurement, NoiseStatisticsAndReproducibility)
{
    MeasurementVector u;
    u.j_max = 8;
    u.values = Eigen::VectorXd::Zero(20000);
    const auto a = add_noise(u, 0.01, 5);
    const auto b = add_noise(u, 0.01, 5);
    const auto c = add_noise(u, 0.01, 6);
    EXPECT_EQ(a.values, b.values);
    EXPECT_NE(a.values, c.values);
    const double mean = a.values.mean();
    const double sd = std::sqrt((a.values.array() - mean).square().sum() / (a.values.size() - 1));
    EXPECT_NEAR(mean, 0.0, 5 * 0.01 / std::sqrt(20000.0));
    EXPECT_NEAR(sd, 0.01, 0.01 * 0.03);
    EXPECT_EQ(add_noise(u, 0.0, 5).values, u.values);
    EXPECT_THROW(add_noise(u, -1.0, 5), InvalidArgument);
}

TEST(Measurement, ModelAtUnitConductivity)
{
    const auto disc = Discretization::disk(64, 24);
    const MeasurementModel model(disc->space(), disc->partition(), 8);
    EXPECT_EQ(model.size(), 256u);
    const MeasurementVector u =
        model.simulate(ConductivityField::constant(24, 1.0), EnergyParams(2.0, 0.0));
    ASSERT_EQ(u.size(), 256u);
    // Diagonal slots approximate 1 / j; the data is symmetric (reciprocity at p = 2).
    for (std::size_t c = 0; c < 16; ++c) {
        EXPECT_NEAR(u.at(c, c) * static_cast<double>(c / 2 + 1), 1.0, 6e-2);
        for (std::size_t k = 0; k < 16; ++k) {
            EXPECT_NEAR(u.at(c, k), u.at(k, c), 1e-10);
        }
    }
}

TEST(Measurement, CsvHeaderQuotesSlots)
{
    MeasurementVector u;
    u.j_max = 1;
    u.values = Eigen::VectorXd::LinSpaced(4, 0.0, 3.0);
    std::ostringstream os;
    write_measurement_csv(os, u);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "\"cur=cos1,coef=cos1\",\"cur=cos1,coef=sin1\",\"cur=sin1,coef=cos1\",\"cur=sin1,coef=sin1\"");
}
