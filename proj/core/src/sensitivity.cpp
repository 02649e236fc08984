#include <plap/sensitivity.hpp>

#include <plap/errors.hpp>
#include <plap/parallel.hpp>

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace plap {

DerivativeSolver::DerivativeSolver(const ForwardProblem& problem, const NodalField& u_sigma)
    : problem_(&problem), mesh_id_(problem.space().mesh().id())
{
    const auto& space = problem.space();
    if (u_sigma.mesh_id != mesh_id_ || static_cast<std::size_t>(u_sigma.values.size()) != space.dofs()) {
        throw MeshMismatch("forward solution does not live on the problem mesh");
    }
    const auto& areas = space.mesh().areas();
    flux_.resize(areas.size());
    for (std::size_t t = 0; t < areas.size(); ++t) {
        flux_[t] = areas[t] * grad_phi(space.gradient(t, u_sigma.values), problem.params());
    }
    factor_.compute(problem.tangent(u_sigma.values));
    if (factor_.info() != Eigen::Success) {
        throw SingularTangent("derivative problem tangent is not positive definite");
    }
}

Eigen::VectorXd DerivativeSolver::weights(Parametrization param) const
{
    const Eigen::VectorXd& sigma = problem_->sigma();
    switch (param) {
    case Parametrization::conductivity:
        return Eigen::VectorXd::Ones(sigma.size());
    case Parametrization::log_conductivity:
        return sigma;
    case Parametrization::resistivity:
    case Parametrization::natural: {
        const double r = *power_exponent(param, problem_->params().p());
        return (sigma.array().pow(1.0 - r) / r).matrix();
    }
    }
    return Eigen::VectorXd::Ones(sigma.size());
}

NodalField DerivativeSolver::solve_rhs(Eigen::VectorXd rhs) const
{
    rhs(problem_->space().gauge()) = 0.0;
    NodalField out;
    out.values = factor_.solve(rhs);
    out.values(problem_->space().gauge()) = 0.0;
    out.mesh_id = mesh_id_;
    return out;
}

NodalField DerivativeSolver::solve_triangles(const Eigen::Ref<const Eigen::VectorXd>& eta, Parametrization param) const
{
    const auto& space = problem_->space();
    const auto& mesh = space.mesh();
    if (static_cast<std::size_t>(eta.size()) != mesh.triangle_count()) {
        throw MeshMismatch("perturbation must have one value per triangle");
    }
    const Eigen::VectorXd w = weights(param);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dofs()));
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
        const auto ti = static_cast<Eigen::Index>(t);
        const double scale = eta(ti) * w(ti);
        if (scale == 0.0) {
            continue;
        }
        const auto& tri = mesh.triangles()[t];
        const auto& g = space.shape_gradients(t);
        for (int a = 0; a < 3; ++a) {
            rhs(tri[a]) -= scale * flux_[t].dot(g[a]);
        }
    }
    return solve_rhs(std::move(rhs));
}

NodalField DerivativeSolver::solve(const Eigen::Ref<const Eigen::VectorXd>& eta, Parametrization param) const
{
    return solve_triangles(problem_->partition().to_triangles(eta), param);
}

NodalField DerivativeSolver::solve_cell(int cell, Parametrization param) const
{
    const auto& partition = problem_->partition();
    if (cell < 0 || static_cast<std::size_t>(cell) >= partition.cell_count()) {
        throw InvalidArgument("cell index out of range");
    }
    const auto& space = problem_->space();
    const auto& mesh = space.mesh();
    const Eigen::VectorXd w = weights(param);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space.dofs()));
    for (int t : partition.members()[cell]) {
        const auto& tri = mesh.triangles()[t];
        const auto& g = space.shape_gradients(t);
        for (int a = 0; a < 3; ++a) {
            rhs(tri[a]) -= w(t) * flux_[t].dot(g[a]);
        }
    }
    return solve_rhs(std::move(rhs));
}

NodalField solve_derivative(const ForwardProblem& problem, const NodalField& u_sigma,
                            const Eigen::Ref<const Eigen::VectorXd>& eta, Parametrization param)
{
    return DerivativeSolver(problem, u_sigma).solve(eta, param);
}

namespace {

JacobianMatrix empty_jacobian(const MeasurementModel& model, const ConductivityField& sigma0,
                              const EnergyParams& params, Parametrization param)
{
    JacobianMatrix j;
    j.entries.resize(static_cast<Eigen::Index>(model.size()),
                     static_cast<Eigen::Index>(model.partition().cell_count()));
    j.p = params.p();
    j.tau = params.tau();
    j.parametrization = param;
    j.mesh_hash = model.space().mesh().hash_hex();
    j.base_sigma = sigma0.to_sigma();
    return j;
}

} // namespace

JacobianMatrix assemble_jacobian(const MeasurementModel& model, const ConductivityField& sigma0,
                                 const EnergyParams& params, Parametrization param)
{
    if (sigma0.size() != model.partition().cell_count()) {
        throw MeshMismatch("base conductivity does not match the partition");
    }
    JacobianMatrix j = empty_jacobian(model, sigma0, params, param);
    const ForwardProblem problem(model.space(), model.partition(), sigma0, params, model.options().gradient_floor);
    const auto per_current = static_cast<Eigen::Index>(2 * model.j_max());
    const auto cells = model.partition().cell_count();
    for (std::size_t c = 0; c < model.currents().size(); ++c) {
        const ForwardSolution sol = solve_forward(problem, model.currents()[c], model.options());
        const DerivativeSolver derivative(problem, sol.u);
        parallel_for(cells, [&](std::size_t cell) {
            const NodalField du = derivative.solve_cell(static_cast<int>(cell), param);
            j.entries.block(static_cast<Eigen::Index>(c) * per_current, static_cast<Eigen::Index>(cell), per_current, 1) =
                model.project(du);
        });
    }
    return j;
}

JacobianSet assemble_jacobians(const MeasurementModel& model, const ConductivityField& sigma0,
                               const EnergyParams& params)
{
    if (sigma0.size() != model.partition().cell_count()) {
        throw MeshMismatch("base conductivity does not match the partition");
    }
    JacobianSet set;
    set.base.j_max = model.j_max();
    set.base.values.resize(static_cast<Eigen::Index>(model.size()));
    JacobianMatrix std_j = empty_jacobian(model, sigma0, params, Parametrization::conductivity);

    const ForwardProblem problem(model.space(), model.partition(), sigma0, params, model.options().gradient_floor);
    const auto per_current = static_cast<Eigen::Index>(2 * model.j_max());
    const auto cells = model.partition().cell_count();
    for (std::size_t c = 0; c < model.currents().size(); ++c) {
        const ForwardSolution sol = solve_forward(problem, model.currents()[c], model.options());
        set.base.values.segment(static_cast<Eigen::Index>(c) * per_current, per_current) = model.project(sol.u);
        const DerivativeSolver derivative(problem, sol.u);
        parallel_for(cells, [&](std::size_t cell) {
            const NodalField du = derivative.solve_cell(static_cast<int>(cell), Parametrization::conductivity);
            std_j.entries.block(static_cast<Eigen::Index>(c) * per_current, static_cast<Eigen::Index>(cell), per_current,
                                1) = model.project(du);
        });
    }

    // sigma is constant on each cell, so the other parametrizations only rescale
    // the right-hand side of each column by d sigma / d x.
    const Eigen::VectorXd& sigma = std_j.base_sigma;
    for (auto param : kAllParametrizations) {
        JacobianMatrix j = std_j;
        j.parametrization = param;
        Eigen::VectorXd chain;
        if (param == Parametrization::conductivity) {
            chain = Eigen::VectorXd::Ones(sigma.size());
        } else if (param == Parametrization::log_conductivity) {
            chain = sigma;
        } else {
            const double r = *power_exponent(param, params.p());
            chain = (sigma.array().pow(1.0 - r) / r).matrix();
        }
        j.entries = std_j.entries * chain.asDiagonal();
        set.by_param[static_cast<int>(param)] = std::move(j);
    }
    return set;
}

void write_jacobian_csv(std::ostream& os, const JacobianMatrix& j)
{
    const auto old = os.precision(17);
    os << "# plap jacobian v1\n";
    os << "# p=" << j.p << "\n";
    os << "# tau=" << j.tau << "\n";
    os << "# parametrization=" << to_string(j.parametrization) << "\n";
    os << "# mesh=" << j.mesh_hash << "\n";
    os << "# rows=" << j.entries.rows() << " cols=" << j.entries.cols() << "\n";
    os << "slot";
    for (Eigen::Index c = 0; c < j.entries.cols(); ++c) {
        os << ",cell" << c;
    }
    os << "\n";
    const auto per_current = j.entries.rows() > 0 ? static_cast<std::size_t>(std::lround(std::sqrt(j.entries.rows()))) : 1;
    for (Eigen::Index r = 0; r < j.entries.rows(); ++r) {
        const auto ru = static_cast<std::size_t>(r);
        os << "\"cur=" << trig_label(ru / per_current) << ",coef=" << trig_label(ru % per_current) << "\"";
        for (Eigen::Index c = 0; c < j.entries.cols(); ++c) {
            os << ',' << j.entries(r, c);
        }
        os << "\n";
    }
    os.precision(old);
}

JacobianMatrix read_jacobian_csv(std::istream& is)
{
    JacobianMatrix j;
    std::map<std::string, std::string> meta;
    std::string line;
    long rows = -1;
    long cols = -1;
    while (std::getline(is, line) && !line.empty() && line[0] == '#') {
        std::istringstream ls(line.substr(1));
        std::string token;
        while (ls >> token) {
            const auto eq = token.find('=');
            if (eq != std::string::npos) {
                meta[token.substr(0, eq)] = token.substr(eq + 1);
            }
        }
    }
    try {
        j.p = std::stod(meta.at("p"));
        j.tau = std::stod(meta.at("tau"));
        rows = std::stol(meta.at("rows"));
        cols = std::stol(meta.at("cols"));
        const auto param = parse_parametrization(meta.at("parametrization"));
        if (!param) {
            throw ParseError("unknown parametrization '" + meta.at("parametrization") + "'");
        }
        j.parametrization = *param;
        j.mesh_hash = meta.at("mesh");
    } catch (const std::out_of_range&) {
        throw ParseError("jacobian CSV is missing a metadata field");
    } catch (const std::invalid_argument&) {
        throw ParseError("jacobian CSV has a malformed metadata value");
    }
    j.entries.resize(rows, cols);
    for (long r = 0; r < rows; ++r) {
        if (!std::getline(is, line)) {
            throw ParseError("jacobian CSV ends after " + std::to_string(r) + " rows");
        }
        // Skip the quoted slot label.
        const auto close = line.find('"', 1);
        std::istringstream ls(close == std::string::npos ? line : line.substr(close + 1));
        for (long c = 0; c < cols; ++c) {
            char comma = 0;
            double v = 0.0;
            if (!(ls >> comma >> v) || comma != ',') {
                throw ParseError("jacobian CSV row " + std::to_string(r) + " is malformed");
            }
            j.entries(r, c) = v;
        }
    }
    return j;
}

} // namespace plap
