#pragma once

// Linearized (derivative) problem
//
//     int sigma H(grad u) grad u' . grad v = - int eta w D phi(grad u) . grad v
//
// with weight w = 1 (sigma), sigma^(1-r) / r (power sigma^r) or sigma (log),
// and the Jacobian of the measurement map built from it.

#include <plap/measurement.hpp>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <iosfwd>
#include <memory>
#include <string>

namespace plap {

struct JacobianMatrix {
    Eigen::MatrixXd entries; // rows: measurement slots, cols: cells
    double p = 2.0;
    double tau = 0.0;
    Parametrization parametrization = Parametrization::conductivity;
    std::string mesh_hash;
    /// Conductivity at the linearization point.
    Eigen::VectorXd base_sigma;
};

/// Factorized tangent at a converged forward solution; serves any number of
/// right-hand sides and may be shared read-only between threads.
class DerivativeSolver {
public:
    DerivativeSolver(const ForwardProblem& problem, const NodalField& u_sigma);

    /// Derivative u'(eta) for a cell-wise perturbation eta of the given parametrization.
    NodalField solve(const Eigen::Ref<const Eigen::VectorXd>& eta, Parametrization param) const;
    /// Same with eta given per triangle.
    NodalField solve_triangles(const Eigen::Ref<const Eigen::VectorXd>& eta_per_triangle,
                               Parametrization param) const;
    /// u'(chi_cell).
    NodalField solve_cell(int cell, Parametrization param) const;

private:
    Eigen::VectorXd weights(Parametrization param) const; // per triangle
    NodalField solve_rhs(Eigen::VectorXd rhs) const;

    const ForwardProblem* problem_;
    std::uint64_t mesh_id_;
    /// area_t * D phi(grad u) per triangle.
    std::vector<Eigen::Vector2d> flux_;
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> factor_;
};

NodalField solve_derivative(const ForwardProblem& problem, const NodalField& u_sigma,
                            const Eigen::Ref<const Eigen::VectorXd>& eta, Parametrization param);

/// Column i: stacked trace coefficients of u'(chi_i) over all currents.
/// One forward solve and one factorization per current.
JacobianMatrix assemble_jacobian(const MeasurementModel& model, const ConductivityField& sigma0,
                                 const EnergyParams& params, Parametrization param);

/// Jacobians of all four parametrizations from one set of factorizations.
struct JacobianSet {
    MeasurementVector base;             // U(sigma0)
    JacobianMatrix by_param[4];         // indexed like kAllParametrizations
    const JacobianMatrix& operator[](Parametrization param) const { return by_param[static_cast<int>(param)]; }
};
JacobianSet assemble_jacobians(const MeasurementModel& model, const ConductivityField& sigma0,
                               const EnergyParams& params);

/// CSV with '#' metadata lines (p, tau, parametrization, mesh hash).
void write_jacobian_csv(std::ostream& os, const JacobianMatrix& j);
JacobianMatrix read_jacobian_csv(std::istream& is);

} // namespace plap
