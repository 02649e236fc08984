#pragma once

// Trigonometric input currents and boundary measurements.
//
// Layout of a measurement vector: currents ordered cos1, sin1, ..., cosJ, sinJ;
// for each current the projection coefficients of its trace in the same
// order. Slot (c, k) lives at index c * 2J + k.

#include <plap/forward.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace plap {

struct MeasurementVector {
    Eigen::VectorXd values;
    int j_max = 0;

    std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
    std::size_t current_count() const noexcept { return 2 * static_cast<std::size_t>(j_max); }
    double at(std::size_t current, std::size_t coefficient) const
    {
        return values(static_cast<Eigen::Index>(current * 2 * j_max + coefficient));
    }
};

/// Label of basis slot k (0-based) in the cos1, sin1, ... ordering.
std::string trig_label(std::size_t k);

/// cos(j theta), sin(j theta) for j = 1..j_max at the boundary nodes.
/// Throws AliasingError unless 2 j_max <= N / 4.
std::vector<BoundaryCurrent> trig_currents(int j_max, std::size_t boundary_nodes);

/// Coefficients (1/pi) int trace cos(j theta) d theta (trapezoid), likewise for sin.
Eigen::VectorXd project_trace(const Eigen::Ref<const Eigen::VectorXd>& trace, int j_max);

/// I.i.d. N(0, lambda^2) noise on every entry, reproducible from the seed.
MeasurementVector add_noise(const MeasurementVector& u, double lambda, std::uint64_t seed);

/// CSV: header line of quoted slot names ("cur=cos3,coef=sin5") and one value row.
void write_measurement_csv(std::ostream& os, const MeasurementVector& u);

/// Forward map field -> stacked trace coefficients for one mesh and partition.
class MeasurementModel {
public:
    MeasurementModel(const FemSpace& space, const Partition& partition, int j_max, SolverOptions options = {});

    const FemSpace& space() const noexcept { return *space_; }
    const Partition& partition() const noexcept { return *partition_; }
    const std::vector<BoundaryCurrent>& currents() const noexcept { return currents_; }
    int j_max() const noexcept { return j_max_; }
    std::size_t size() const noexcept { return currents_.size() * currents_.size(); }
    const SolverOptions& options() const noexcept { return options_; }

    /// Trace coefficients of one solution.
    Eigen::VectorXd project(const NodalField& u) const;

    /// Runs every current; the solutions are returned through `solutions` when non-null.
    MeasurementVector simulate(const ConductivityField& field, const EnergyParams& params,
                               std::vector<ForwardSolution>* solutions = nullptr) const;

private:
    const FemSpace* space_;
    const Partition* partition_;
    int j_max_;
    SolverOptions options_;
    std::vector<BoundaryCurrent> currents_;
};

} // namespace plap
