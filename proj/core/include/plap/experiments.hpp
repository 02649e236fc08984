#pragma once

// Linearization-error and reconstruction-error studies over sample members,
// exponents and smoothing parameters.

#include <plap/config.hpp>
#include <plap/reconstruct.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace plap {

/// Mesh, partition and FEM space with stable addresses.
class Discretization {
public:
    Discretization(MeshGeometry mesh, int rings, int cells);
    /// Reference disk mesh with N boundary nodes, or its perturbation when a seed is given.
    static std::unique_ptr<Discretization> disk(int boundary_nodes, int cells, int rings = 0,
                                                std::optional<std::uint64_t> perturb_seed = {});

    Discretization(const Discretization&) = delete;
    Discretization& operator=(const Discretization&) = delete;

    const MeshGeometry& mesh() const noexcept { return mesh_; }
    const Partition& partition() const noexcept { return partition_; }
    const FemSpace& space() const noexcept { return space_; }

private:
    MeshGeometry mesh_;
    Partition partition_;
    FemSpace space_;
};

struct MemberFailure {
    std::size_t member = 0;
    std::string what;
};

/// Measurements U(exp(kappa_i)) (+ noise) for every member; failed members stay empty.
struct SimulatedData {
    std::vector<std::optional<MeasurementVector>> values;
    std::vector<MemberFailure> failures;
};

/// Noise for member i is drawn from derive_seed(noise_seed, i), so it does not
/// change with p or tau. lambda = 0 gives clean data.
SimulatedData simulate_data(const MeasurementModel& model, const EnergyParams& params,
                            const std::vector<Eigen::VectorXd>& kappas, double lambda = 0.0,
                            std::uint64_t noise_seed = 0);

struct LinearizationResult {
    /// Mean relative remainder per parametrization, indexed like kAllParametrizations.
    std::array<double, 4> e{};
    std::size_t members = 0;
    std::size_t skipped = 0;
    std::vector<MemberFailure> failures;

    double operator[](Parametrization param) const { return e[static_cast<int>(param)]; }
};

/// e = mean |U(x) - U0 - J (x - x0)| / |U(x)| with clean data U on the Jacobian's mesh.
LinearizationResult linearization_error(const SimulatedData& clean, const JacobianSet& jacobians,
                                        const std::vector<Eigen::VectorXd>& kappas, double p);

struct ReconstructionOptions {
    double penalty = 1.0;
    double clip_floor = 1e-6;
    /// Members whose reconstructions are kept for inspection.
    std::size_t snapshots = 3;
    std::vector<Parametrization> params{kAllParametrizations, kAllParametrizations + 4};
};

struct ReconstructionResult {
    std::array<double, 4> iota{};
    std::array<std::size_t, 4> clipped{};
    std::array<bool, 4> computed{};
    std::size_t members = 0;
    std::size_t skipped = 0;
    std::vector<MemberFailure> failures;
    /// kappa_reco of the first members, per parametrization.
    std::array<std::vector<Eigen::VectorXd>, 4> snapshots;

    double operator[](Parametrization param) const { return iota[static_cast<int>(param)]; }
};

/// iota = sqrt(pi / M) mean |kappa - kappa_reco|. `jacobians` are the
/// reconstruction operators (possibly at a different exponent `reco_p` than
/// the data) and `data` usually lives on a perturbed mesh.
ReconstructionResult reconstruction_error(const SimulatedData& data, const JacobianSet& jacobians, double reco_p,
                                          const CovarianceModel& prior, const std::vector<Eigen::VectorXd>& kappas,
                                          double lambda, const ReconstructionOptions& options = {});

/// Throws NewtonDivergence when more than `max_fraction` of the members failed.
void enforce_skip_policy(std::size_t skipped, std::size_t members, double max_fraction);

/// Number of grid steps where the curve increases.
std::size_t count_increases(const std::vector<double>& curve);

struct LinerrRow {
    std::string sample;
    Parametrization param = Parametrization::conductivity;
    double p = 2.0;
    double tau = 0.0;
    double e = 0.0;
    std::size_t members = 0;
    std::size_t skipped = 0;
};

struct InvertRow {
    std::string sample;
    Parametrization param = Parametrization::conductivity;
    std::string variant; // "correct" or "p2"
    double p = 2.0;
    double tau = 0.0;
    double lambda = 0.0;
    double iota = 0.0;
    std::size_t members = 0;
    std::size_t skipped = 0;
    std::size_t clipped = 0;
};

struct TrendRow {
    std::string study;
    std::string sample;
    Parametrization param = Parametrization::conductivity;
    std::string variant;
    double tau = 0.0;
    std::size_t increases = 0;
};

struct SnapshotRow {
    std::string sample;
    Parametrization param = Parametrization::conductivity;
    std::string variant;
    double p = 2.0;
    double tau = 0.0;
    std::size_t member = 0;
    Eigen::VectorXd truth;
    Eigen::VectorXd reco;
};

struct SweepFailure {
    std::string sample;
    double p = 2.0;
    double tau = 0.0;
    std::string study;
    std::size_t member = 0;
    std::string what;
};

struct SweepTables {
    std::vector<LinerrRow> linerr;
    std::vector<InvertRow> invert;
    std::vector<TrendRow> trends;
    std::vector<SnapshotRow> snapshots;
    std::vector<SweepFailure> failures;
    /// Set when the skip policy was violated; the tables then hold partial results.
    std::string aborted;
};

/// Rough wall time in seconds from a per-solve cost model.
double estimate_sweep_seconds(const RunConfig& config);

using ProgressCallback = std::function<void(const std::string&)>;

/// Runs the configured study; stops at the first point that breaks the skip
/// policy and records it in `aborted`.
SweepTables sweep(const RunConfig& config, const ProgressCallback& progress = {});

/// Writes linerr.csv, invert.csv, trends.csv, snapshots.csv, manifest.json and
/// (if anything failed) failures.json under `dir`.
void write_sweep(const SweepTables& tables, const RunConfig& config, const std::filesystem::path& dir);

} // namespace plap
