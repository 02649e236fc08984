#include <plap/experiments.hpp>
#include <plap/inequalities.hpp>

#include <benchmark/benchmark.h>

using namespace plap;

namespace {

const Discretization& desk()
{
    static const auto disc = Discretization::disk(128, 240);
    return *disc;
}

} // namespace

static void BM_BuildDiskMesh(benchmark::State& state)
{
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_disk_mesh(n));
    }
}
BENCHMARK(BM_BuildDiskMesh)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_ForwardSolve(benchmark::State& state)
{
    const double p = static_cast<double>(state.range(0)) / 10.0;
    const auto& d = desk();
    const auto f = BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::cosine, 5, d.mesh().boundary_count());
    const auto sigma = ConductivityField::constant(d.partition().cell_count(), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_forward(d.space(), d.partition(), sigma, EnergyParams(p, 0.0), f));
    }
}
BENCHMARK(BM_ForwardSolve)->Arg(15)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_AssembleJacobians(benchmark::State& state)
{
    const auto& d = desk();
    const MeasurementModel model(d.space(), d.partition(), 8);
    const auto sigma = ConductivityField::constant(d.partition().cell_count(), 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble_jacobians(model, sigma, EnergyParams(2.5, 0.0)));
    }
}
BENCHMARK(BM_AssembleJacobians)->Unit(benchmark::kMillisecond);

static void BM_SampleLogConductivity(benchmark::State& state)
{
    const PolarGrid grid(0, static_cast<int>(state.range(0)));
    const CovarianceModel cov = covariance_matrix(grid.centroids(), 0.25, 2.0 / 3.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sample_logconductivity(cov, 100, 1));
    }
}
BENCHMARK(BM_SampleLogConductivity)->Arg(240)->Arg(960)->Unit(benchmark::kMillisecond);

static void BM_OneStepMap(benchmark::State& state)
{
    const auto& d = desk();
    const MeasurementModel model(d.space(), d.partition(), 8);
    const auto jac = assemble_jacobians(model, ConductivityField::constant(d.partition().cell_count(), 1.0),
                                        EnergyParams(2.0, 0.0));
    const CovarianceModel cov = covariance_matrix(d.partition(), 0.01, 1.0 / 3.0);
    for (auto _ : state) {
        const OneStepMap map(jac[Parametrization::log_conductivity],
                             parameter_prior(cov, Parametrization::log_conductivity, 2.0), 1e-3);
        benchmark::DoNotOptimize(map.reconstruct(jac.base, jac.base));
    }
}
BENCHMARK(BM_OneStepMap)->Unit(benchmark::kMillisecond);

static void BM_Inequalities(benchmark::State& state)
{
    InequalityOptions options;
    options.samples = 10000;
    options.calibration_samples = 10000;
    for (auto _ : state) {
        benchmark::DoNotOptimize(verify_inequalities(options));
    }
}
BENCHMARK(BM_Inequalities)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
