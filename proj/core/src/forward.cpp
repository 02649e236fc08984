#include <plap/forward.hpp>

#include <plap/errors.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace plap {

namespace {

using Factorization = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

void check_mesh(const FemSpace& space, const Partition& partition)
{
    if (partition.mesh_id() != space.mesh().id()) {
        throw MeshMismatch("partition was built on a different mesh");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// BoundaryCurrent

std::string BoundaryCurrent::label() const
{
    return (kind == Kind::cosine ? "cos" : "sin") + std::to_string(frequency);
}

BoundaryCurrent BoundaryCurrent::trigonometric(Kind kind, int frequency, std::size_t boundary_nodes)
{
    if (frequency < 1) {
        throw InvalidArgument("current frequency must be >= 1");
    }
    BoundaryCurrent f;
    f.kind = kind;
    f.frequency = frequency;
    f.samples.resize(static_cast<Eigen::Index>(boundary_nodes));
    for (std::size_t k = 0; k < boundary_nodes; ++k) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(boundary_nodes);
        f.samples(static_cast<Eigen::Index>(k)) =
            kind == Kind::cosine ? std::cos(frequency * theta) : std::sin(frequency * theta);
    }
    return f;
}

BoundaryCurrent BoundaryCurrent::parse(const std::string& label, std::size_t boundary_nodes)
{
    if (label.size() < 4 || (label.compare(0, 3, "cos") != 0 && label.compare(0, 3, "sin") != 0)) {
        throw InvalidArgument("current label must look like cos<j> or sin<j>, got '" + label + "'");
    }
    int j = 0;
    try {
        std::size_t used = 0;
        j = std::stoi(label.substr(3), &used);
        if (used != label.size() - 3) {
            throw std::invalid_argument("trailing characters");
        }
    } catch (const std::exception&) {
        throw InvalidArgument("bad current frequency in '" + label + "'");
    }
    return trigonometric(label[0] == 'c' ? Kind::cosine : Kind::sine, j, boundary_nodes);
}

// ---------------------------------------------------------------------------
// FemSpace

FemSpace::FemSpace(const MeshGeometry& mesh) : mesh_(&mesh)
{
    const auto& nodes = mesh.nodes();
    const auto n_tri = mesh.triangle_count();
    grads_.resize(n_tri);
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(9 * n_tri);
    for (std::size_t t = 0; t < n_tri; ++t) {
        const auto& tri = mesh.triangles()[t];
        const Eigen::Vector2d& a = nodes[tri[0]];
        const Eigen::Vector2d& b = nodes[tri[1]];
        const Eigen::Vector2d& c = nodes[tri[2]];
        const double two_area = 2.0 * mesh.areas()[t];
        // grad lambda_i = rot90(opposite edge) / (2 area)
        grads_[t][0] = Eigen::Vector2d(b.y() - c.y(), c.x() - b.x()) / two_area;
        grads_[t][1] = Eigen::Vector2d(c.y() - a.y(), a.x() - c.x()) / two_area;
        grads_[t][2] = Eigen::Vector2d(a.y() - b.y(), b.x() - a.x()) / two_area;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                triplets.emplace_back(tri[i], tri[j], 0.0);
            }
        }
    }
    const auto n = static_cast<Eigen::Index>(mesh.node_count());
    pattern_.resize(n, n);
    pattern_.setFromTriplets(triplets.begin(), triplets.end());
    pattern_.makeCompressed();

    const auto position = [&](int row, int col) {
        const int* inner = pattern_.innerIndexPtr();
        const int begin = pattern_.outerIndexPtr()[col];
        const int end = pattern_.outerIndexPtr()[col + 1];
        const int* hit = std::lower_bound(inner + begin, inner + end, row);
        return static_cast<int>(hit - inner);
    };
    scatter_.resize(n_tri);
    for (std::size_t t = 0; t < n_tri; ++t) {
        const auto& tri = mesh.triangles()[t];
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                scatter_[t][3 * i + j] = position(tri[i], tri[j]);
            }
        }
    }
    gauge_diag_ = position(gauge(), gauge());
}

Eigen::Vector2d FemSpace::gradient(std::size_t t, const Eigen::Ref<const Eigen::VectorXd>& u) const
{
    const auto& tri = mesh_->triangles()[t];
    const auto& g = grads_[t];
    return u(tri[0]) * g[0] + u(tri[1]) * g[1] + u(tri[2]) * g[2];
}

double FemSpace::boundary_weight() const noexcept
{
    return 2.0 * std::numbers::pi / static_cast<double>(mesh_->boundary_count());
}

// ---------------------------------------------------------------------------
// ForwardProblem

ForwardProblem::ForwardProblem(const FemSpace& space, const Partition& partition, const ConductivityField& field,
                               const EnergyParams& params, double gradient_floor)
    : space_(&space), partition_(&partition), params_(params), floor_(gradient_floor)
{
    check_mesh(space, partition);
    sigma_ = partition.to_triangles(field.to_sigma());
}

ForwardProblem ForwardProblem::with_exponent(double p) const
{
    ForwardProblem copy = *this;
    copy.params_ = EnergyParams(p, params_.tau());
    return copy;
}

Eigen::VectorXd ForwardProblem::load(const BoundaryCurrent& f) const
{
    const auto& mesh = space_->mesh();
    if (static_cast<std::size_t>(f.samples.size()) != mesh.boundary_count()) {
        throw MeshMismatch("boundary current has " + std::to_string(f.samples.size()) + " samples, mesh has " +
                           std::to_string(mesh.boundary_count()) + " boundary nodes");
    }
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space_->dofs()));
    const double w = space_->boundary_weight();
    for (std::size_t k = 0; k < mesh.boundary_count(); ++k) {
        b(mesh.boundary()[k]) += w * f.samples(static_cast<Eigen::Index>(k));
    }
    return b;
}

double ForwardProblem::energy(const Eigen::Ref<const Eigen::VectorXd>& u,
                              const Eigen::Ref<const Eigen::VectorXd>& load) const
{
    double bulk = 0.0;
    const auto& areas = space_->mesh().areas();
    for (std::size_t t = 0; t < areas.size(); ++t) {
        bulk += sigma_(static_cast<Eigen::Index>(t)) * areas[t] * phi(space_->gradient(t, u), params_);
    }
    return bulk - load.dot(u);
}

Eigen::VectorXd ForwardProblem::residual(const Eigen::Ref<const Eigen::VectorXd>& u,
                                         const Eigen::Ref<const Eigen::VectorXd>& load) const
{
    Eigen::VectorXd r = -load;
    const auto& mesh = space_->mesh();
    const auto& areas = mesh.areas();
    for (std::size_t t = 0; t < areas.size(); ++t) {
        const Eigen::Vector2d flux =
            sigma_(static_cast<Eigen::Index>(t)) * areas[t] * grad_phi(space_->gradient(t, u), params_);
        const auto& tri = mesh.triangles()[t];
        const auto& g = space_->shape_gradients(t);
        for (int a = 0; a < 3; ++a) {
            r(tri[a]) += flux.dot(g[a]);
        }
    }
    r(space_->gauge()) = 0.0;
    return r;
}

SparseMatrix ForwardProblem::tangent(const Eigen::Ref<const Eigen::VectorXd>& u) const
{
    SparseMatrix k = space_->pattern();
    double* values = k.valuePtr();
    const auto& mesh = space_->mesh();
    const auto& areas = mesh.areas();
    const int gauge = space_->gauge();
    for (std::size_t t = 0; t < areas.size(); ++t) {
        const PlanarKernel kernel = evaluate_planar(space_->gradient(t, u), params_, floor_);
        const Eigen::Matrix2d h = sigma_(static_cast<Eigen::Index>(t)) * areas[t] * kernel.tangent;
        const auto& tri = mesh.triangles()[t];
        const auto& g = space_->shape_gradients(t);
        for (int a = 0; a < 3; ++a) {
            if (tri[a] == gauge) {
                continue;
            }
            const Eigen::Vector2d hg = h * g[a];
            for (int b = 0; b < 3; ++b) {
                if (tri[b] != gauge) {
                    values[space_->scatter(t, b, a)] += hg.dot(g[b]);
                }
            }
        }
    }
    values[space_->gauge_diagonal()] = 1.0;
    return k;
}

// ---------------------------------------------------------------------------
// Newton iteration

namespace {

class NewtonSolver {
public:
    NewtonSolver(const ForwardProblem& problem, const Eigen::VectorXd& load, const SolverOptions& options,
                 SolveReport& report)
        : problem_(problem), load_(load), options_(options), report_(report), load_norm_(load.norm())
    {
        solver_.analyzePattern(problem.space().pattern());
    }

    Eigen::VectorXd linear_start()
    {
        const ForwardProblem linear = problem_.with_exponent(2.0);
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(load_.size());
        factorize(linear.tangent(zero));
        Eigen::VectorXd rhs = load_;
        rhs(problem_.space().gauge()) = 0.0;
        return solver_.solve(rhs);
    }

    // Best multiple c u of a guess for the tau = 0 energy, c = (f.u / int sigma |grad u|^p)^(1/(p-1)).
    Eigen::VectorXd rescale(const ForwardProblem& problem, const Eigen::VectorXd& u) const
    {
        const double p = problem.params().p();
        const double work = load_.dot(u);
        double bulk = 0.0;
        const auto& areas = problem.space().mesh().areas();
        for (std::size_t t = 0; t < areas.size(); ++t) {
            bulk += problem.sigma()(static_cast<Eigen::Index>(t)) * areas[t] *
                    std::pow(problem.space().gradient(t, u).norm(), p);
        }
        if (!(work > 0.0) || !(bulk > 0.0)) {
            return u;
        }
        return std::pow(work / bulk, 1.0 / (p - 1.0)) * u;
    }

    // Damped Newton at the problem's exponent; returns the number of steps taken.
    int iterate(const ForwardProblem& problem, Eigen::VectorXd& u, double tol)
    {
        const double p = problem.params().p();
        Eigen::VectorXd r = problem.residual(u, load_);
        double energy = problem.energy(u, load_);
        double rel = relative(r);
        log({p, 0, rel, 0.0, energy});
        for (int step = 1; step <= options_.max_steps; ++step) {
            if (rel <= tol) {
                return step - 1;
            }
            factorize(problem.tangent(u));
            const Eigen::VectorXd d = -solver_.solve(r);
            const double slope = r.dot(d);
            const double slack = 1e-13 * (std::abs(energy) + std::abs(load_.dot(u)) + 1e-300);

            // Keep halving while the residual norm improves: near vanishing
            // gradients with p < 2 the full step overshoots by a factor 1 / (p - 1).
            double accepted = 0.0;
            double best = r.norm();
            Eigen::VectorXd trial;
            Eigen::VectorXd r_trial;
            double e_trial = 0.0;
            double armijo_step = 0.0;
            double damping = 1.0;
            for (int halving = 0; halving <= options_.max_halvings; ++halving, damping *= 0.5) {
                Eigen::VectorXd candidate = u + damping * d;
                const double e_candidate = problem.energy(candidate, load_);
                if (!std::isfinite(e_candidate)) {
                    continue;
                }
                if (armijo_step == 0.0 && e_candidate <= energy + 1e-4 * damping * slope) {
                    armijo_step = damping;
                }
                if (e_candidate > energy + slack) {
                    if (accepted > 0.0) {
                        break;
                    }
                    continue;
                }
                Eigen::VectorXd r_candidate = problem.residual(candidate, load_);
                const double norm = r_candidate.norm();
                if (norm < best) {
                    best = norm;
                    accepted = damping;
                    trial = std::move(candidate);
                    r_trial = std::move(r_candidate);
                    e_trial = e_candidate;
                } else if (accepted > 0.0) {
                    break;
                }
            }
            if (accepted == 0.0 && armijo_step > 0.0) {
                // Energy decreases although the residual does not: keep descending.
                accepted = armijo_step;
                trial = u + accepted * d;
                e_trial = problem.energy(trial, load_);
                r_trial = problem.residual(trial, load_);
            }
            if (accepted == 0.0) {
                std::ostringstream os;
                os << "no damped step reduced the residual at p=" << p << " (step " << step
                   << ", relative residual " << rel << ")";
                throw NewtonDivergence(os.str());
            }
            u = std::move(trial);
            r = std::move(r_trial);
            energy = e_trial;
            rel = relative(r);
            log({p, step, rel, accepted, energy});
        }
        if (rel <= tol) {
            return options_.max_steps;
        }
        std::ostringstream os;
        os << "Newton iteration did not reach tol " << tol << " in " << options_.max_steps
           << " steps at p=" << p << " (relative residual " << rel << ")";
        throw NewtonDivergence(os.str());
    }

    double relative(const Eigen::VectorXd& r) const { return load_norm_ > 0.0 ? r.norm() / load_norm_ : r.norm(); }

private:
    void factorize(const SparseMatrix& k)
    {
        solver_.factorize(k);
        if (solver_.info() != Eigen::Success) {
            throw SingularTangent("tangent stiffness is not positive definite");
        }
    }

    void log(const NewtonLogEntry& entry)
    {
        report_.history.push_back(entry);
        if (options_.on_iteration) {
            options_.on_iteration(entry);
        }
    }

    const ForwardProblem& problem_;
    const Eigen::VectorXd& load_;
    const SolverOptions& options_;
    SolveReport& report_;
    double load_norm_;
    Factorization solver_;
};

} // namespace

ForwardSolution solve_forward(const ForwardProblem& problem, const BoundaryCurrent& f, const SolverOptions& options)
{
    const Eigen::VectorXd b = problem.load(f);
    const double total = b.sum();
    if (std::abs(total) > 1e-12 * std::max(1.0, b.cwiseAbs().sum())) {
        throw InvalidArgument("boundary current " + f.label() + " does not have zero mean");
    }

    ForwardSolution out;
    out.u.mesh_id = problem.space().mesh().id();
    SolveReport& report = out.report;
    NewtonSolver newton(problem, b, options, report);

    Eigen::VectorXd u = newton.linear_start();
    const double p = problem.params().p();
    if (p == 2.0) {
        report.steps = 1;
        report.residual = newton.relative(problem.residual(u, b));
        report.history.push_back({2.0, 1, report.residual, 1.0, problem.energy(u, b)});
        out.u.values = std::move(u);
        return out;
    }

    const double gap = p - 2.0;
    const int stages = std::abs(gap) > options.continuation_trigger
                           ? static_cast<int>(std::ceil(std::abs(gap) / options.continuation_trigger))
                           : 1;
    for (int stage = 1; stage < stages; ++stage) {
        const ForwardProblem intermediate = problem.with_exponent(2.0 + gap * stage / stages);
        u = newton.rescale(intermediate, u);
        report.continuation_steps += newton.iterate(intermediate, u, options.continuation_tol);
    }
    u = newton.rescale(problem, u);
    report.steps = newton.iterate(problem, u, options.tol);
    report.residual = newton.relative(problem.residual(u, b));
    out.u.values = std::move(u);
    return out;
}

ForwardSolution solve_forward(const FemSpace& space, const Partition& partition, const ConductivityField& field,
                              const EnergyParams& params, const BoundaryCurrent& f, const SolverOptions& options)
{
    const ForwardProblem problem(space, partition, field, params, options.gradient_floor);
    return solve_forward(problem, f, options);
}

double energy(const FemSpace& space, const Partition& partition, const NodalField& v, const ConductivityField& field,
              const EnergyParams& params, const BoundaryCurrent& f)
{
    if (v.mesh_id != space.mesh().id() || static_cast<std::size_t>(v.values.size()) != space.dofs()) {
        throw MeshMismatch("nodal field does not live on this mesh");
    }
    const ForwardProblem problem(space, partition, field, params);
    return problem.energy(v.values, problem.load(f));
}

Eigen::VectorXd boundary_trace(const MeshGeometry& mesh, const NodalField& u)
{
    if (u.mesh_id != mesh.id()) {
        throw MeshMismatch("nodal field does not live on this mesh");
    }
    Eigen::VectorXd trace(static_cast<Eigen::Index>(mesh.boundary_count()));
    for (std::size_t k = 0; k < mesh.boundary_count(); ++k) {
        trace(static_cast<Eigen::Index>(k)) = u.values(mesh.boundary()[k]);
    }
    return trace;
}

double gradient_norm(const FemSpace& space, const Eigen::Ref<const Eigen::VectorXd>& u)
{
    double sum = 0.0;
    const auto& areas = space.mesh().areas();
    for (std::size_t t = 0; t < areas.size(); ++t) {
        sum += areas[t] * space.gradient(t, u).squaredNorm();
    }
    return std::sqrt(sum);
}

} // namespace plap
