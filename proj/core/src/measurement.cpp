#include <plap/measurement.hpp>

#include <plap/errors.hpp>

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace plap {

std::string trig_label(std::size_t k)
{
    return (k % 2 == 0 ? "cos" : "sin") + std::to_string(k / 2 + 1);
}

std::vector<BoundaryCurrent> trig_currents(int j_max, std::size_t boundary_nodes)
{
    if (j_max < 1) {
        throw InvalidArgument("j_max must be >= 1");
    }
    if (static_cast<std::size_t>(8 * j_max) > boundary_nodes) {
        throw AliasingError("2 j_max = " + std::to_string(2 * j_max) + " exceeds a quarter of the " +
                            std::to_string(boundary_nodes) + " boundary nodes");
    }
    std::vector<BoundaryCurrent> out;
    out.reserve(2 * static_cast<std::size_t>(j_max));
    for (int j = 1; j <= j_max; ++j) {
        out.push_back(BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::cosine, j, boundary_nodes));
        out.push_back(BoundaryCurrent::trigonometric(BoundaryCurrent::Kind::sine, j, boundary_nodes));
    }
    return out;
}

Eigen::VectorXd project_trace(const Eigen::Ref<const Eigen::VectorXd>& trace, int j_max)
{
    const auto n = trace.size();
    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(2 * j_max);
    const double scale = 2.0 / static_cast<double>(n); // (1/pi) * (2 pi / N)
    for (Eigen::Index k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        for (int j = 1; j <= j_max; ++j) {
            coeffs(2 * (j - 1)) += trace(k) * std::cos(j * theta);
            coeffs(2 * (j - 1) + 1) += trace(k) * std::sin(j * theta);
        }
    }
    return scale * coeffs;
}

MeasurementVector add_noise(const MeasurementVector& u, double lambda, std::uint64_t seed)
{
    if (!(lambda >= 0.0)) {
        throw InvalidArgument("noise level must be >= 0");
    }
    MeasurementVector out = u;
    if (lambda == 0.0) {
        return out;
    }
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, lambda);
    for (Eigen::Index i = 0; i < out.values.size(); ++i) {
        out.values(i) += normal(rng);
    }
    return out;
}

void write_measurement_csv(std::ostream& os, const MeasurementVector& u)
{
    const std::size_t per_current = 2 * static_cast<std::size_t>(u.j_max);
    for (std::size_t i = 0; i < u.size(); ++i) {
        os << (i ? "," : "") << "\"cur=" << trig_label(i / per_current) << ",coef=" << trig_label(i % per_current)
           << "\"";
    }
    os << "\n";
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < u.size(); ++i) {
        os << (i ? "," : "") << u.values(static_cast<Eigen::Index>(i));
    }
    os << "\n";
    os.precision(old);
}

MeasurementModel::MeasurementModel(const FemSpace& space, const Partition& partition, int j_max,
                                   SolverOptions options)
    : space_(&space), partition_(&partition), j_max_(j_max), options_(std::move(options)),
      currents_(trig_currents(j_max, space.mesh().boundary_count()))
{
    if (partition.mesh_id() != space.mesh().id()) {
        throw MeshMismatch("partition was built on a different mesh");
    }
}

Eigen::VectorXd MeasurementModel::project(const NodalField& u) const
{
    return project_trace(boundary_trace(space_->mesh(), u), j_max_);
}

MeasurementVector MeasurementModel::simulate(const ConductivityField& field, const EnergyParams& params,
                                             std::vector<ForwardSolution>* solutions) const
{
    const ForwardProblem problem(*space_, *partition_, field, params, options_.gradient_floor);
    const auto per_current = static_cast<Eigen::Index>(2 * j_max_);
    MeasurementVector out;
    out.j_max = j_max_;
    out.values.resize(static_cast<Eigen::Index>(size()));
    if (solutions) {
        solutions->clear();
        solutions->reserve(currents_.size());
    }
    for (std::size_t c = 0; c < currents_.size(); ++c) {
        ForwardSolution sol = solve_forward(problem, currents_[c], options_);
        out.values.segment(static_cast<Eigen::Index>(c) * per_current, per_current) = project(sol.u);
        if (solutions) {
            solutions->push_back(std::move(sol));
        }
    }
    return out;
}

} // namespace plap
