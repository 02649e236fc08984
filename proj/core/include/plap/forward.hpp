#pragma once

// Piecewise-linear finite elements for the weighted, smoothed p-Laplace
// Neumann problem
//
//     -div(sigma D phi(grad u)) = 0 in the disk,   sigma D phi(grad u) . n = f on the circle,
//
// solved by a damped Newton iteration started from the p = 2 solution.

#include <plap/conductivity.hpp>
#include <plap/energy.hpp>
#include <plap/mesh.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace plap {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nodal coefficients of a P1 function, gauge node pinned to zero.
struct NodalField {
    Eigen::VectorXd values;
    std::uint64_t mesh_id = 0;
};

struct BoundaryCurrent {
    enum class Kind { cosine, sine };
    Kind kind = Kind::cosine;
    int frequency = 1;
    /// Current density at the boundary nodes, ordered like MeshGeometry::boundary().
    Eigen::VectorXd samples;

    /// "cos3", "sin5", ...
    std::string label() const;
    static BoundaryCurrent trigonometric(Kind kind, int frequency, std::size_t boundary_nodes);
    /// Parses "cos3" / "sin1".
    static BoundaryCurrent parse(const std::string& label, std::size_t boundary_nodes);
};

/// Mesh-level data shared by every solve on one mesh: shape-function
/// gradients, the sparsity pattern and the scatter map of local matrices.
class FemSpace {
public:
    explicit FemSpace(const MeshGeometry& mesh);

    const MeshGeometry& mesh() const noexcept { return *mesh_; }
    std::size_t dofs() const noexcept { return mesh_->node_count(); }
    int gauge() const noexcept { return mesh_->gauge_node(); }

    /// Gradients of the three hat functions on triangle t.
    const std::array<Eigen::Vector2d, 3>& shape_gradients(std::size_t t) const { return grads_[t]; }
    Eigen::Vector2d gradient(std::size_t t, const Eigen::Ref<const Eigen::VectorXd>& u) const;

    /// Matrix with the full symmetric sparsity pattern and zero values.
    const SparseMatrix& pattern() const noexcept { return pattern_; }
    /// Position of local entry (a, b) of triangle t inside pattern().valuePtr().
    int scatter(std::size_t t, int a, int b) const { return scatter_[t][3 * a + b]; }
    int gauge_diagonal() const noexcept { return gauge_diag_; }

    /// Trapezoid weights 2 pi / N at the boundary nodes.
    double boundary_weight() const noexcept;

private:
    const MeshGeometry* mesh_;
    std::vector<std::array<Eigen::Vector2d, 3>> grads_;
    SparseMatrix pattern_;
    std::vector<std::array<int, 9>> scatter_;
    int gauge_diag_ = -1;
};

struct NewtonLogEntry {
    double p = 2.0;
    int step = 0;
    double residual = 0.0; // relative to the load norm
    double damping = 1.0;
    double energy = 0.0;
};

struct SolverOptions {
    double tol = 1e-10;
    int max_steps = 50;
    int max_halvings = 30;
    /// Intermediate exponents are inserted when |p - 2| exceeds this.
    double continuation_trigger = 0.75;
    /// Tolerance for intermediate continuation stages.
    double continuation_tol = 1e-6;
    /// Floor of |grad u| inside the tau = 0 tangent.
    double gradient_floor = 1e-12;
    std::function<void(const NewtonLogEntry&)> on_iteration;
};

struct SolveReport {
    int steps = 0;            // Newton steps at the target exponent
    int continuation_steps = 0;
    double residual = 0.0;    // final relative residual
    std::vector<NewtonLogEntry> history;
};

/// The discrete operator for a fixed mesh, conductivity and exponent.
class ForwardProblem {
public:
    ForwardProblem(const FemSpace& space, const Partition& partition, const ConductivityField& field,
                   const EnergyParams& params, double gradient_floor = 1e-12);

    const FemSpace& space() const noexcept { return *space_; }
    const EnergyParams& params() const noexcept { return params_; }
    /// Conductivity per triangle.
    const Eigen::VectorXd& sigma() const noexcept { return sigma_; }
    const Partition& partition() const noexcept { return *partition_; }

    /// Load vector of the boundary integral of f v (trapezoid rule, gauge entry kept).
    Eigen::VectorXd load(const BoundaryCurrent& f) const;

    double energy(const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::Ref<const Eigen::VectorXd>& load) const;
    /// Galerkin residual; the gauge entry is zero.
    Eigen::VectorXd residual(const Eigen::Ref<const Eigen::VectorXd>& u,
                             const Eigen::Ref<const Eigen::VectorXd>& load) const;
    /// Tangent stiffness sigma H(grad u); gauge row and column replaced by the identity.
    SparseMatrix tangent(const Eigen::Ref<const Eigen::VectorXd>& u) const;

    /// Same operator at a different exponent (continuation).
    ForwardProblem with_exponent(double p) const;

private:
    const FemSpace* space_;
    const Partition* partition_;
    Eigen::VectorXd sigma_;
    EnergyParams params_;
    double floor_;
};

struct ForwardSolution {
    NodalField u;
    SolveReport report;
};

ForwardSolution solve_forward(const ForwardProblem& problem, const BoundaryCurrent& f,
                              const SolverOptions& options = {});

/// Convenience overload building the operator on the fly.
ForwardSolution solve_forward(const FemSpace& space, const Partition& partition, const ConductivityField& field,
                              const EnergyParams& params, const BoundaryCurrent& f,
                              const SolverOptions& options = {});

/// Discrete p-energy of v for the given data.
double energy(const FemSpace& space, const Partition& partition, const NodalField& v,
              const ConductivityField& field, const EnergyParams& params, const BoundaryCurrent& f);

/// Nodal values on the boundary, ordered by angle.
Eigen::VectorXd boundary_trace(const MeshGeometry& mesh, const NodalField& u);

/// Gradient-seminorm (the W^{1,2}/R norm used for error measurements).
double gradient_norm(const FemSpace& space, const Eigen::Ref<const Eigen::VectorXd>& u);

} // namespace plap
