#include <plap/reconstruct.hpp>

#include <plap/errors.hpp>

#include <json.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <ostream>

namespace plap {

ParameterPrior parameter_prior(const CovarianceModel& model, Parametrization param, double p)
{
    if (param == Parametrization::log_conductivity) {
        return {Eigen::VectorXd::Zero(model.sigma.rows()), model.sigma};
    }
    auto moments = lognormal_moments(model, log_scale(param, p));
    return {std::move(moments.mean), std::move(moments.cov)};
}

OneStepMap::OneStepMap(const JacobianMatrix& jacobian, ParameterPrior prior, double lambda, double penalty)
    : j_(jacobian.entries), prior_(std::move(prior)), lambda2_(penalty * lambda * lambda)
{
    if (!(lambda > 0.0) || !(penalty > 0.0)) {
        throw InvalidArgument("one-step MAP needs lambda > 0 and penalty > 0");
    }
    const auto m = j_.cols();
    if (prior_.mean.size() != m || prior_.cov.rows() != m || prior_.cov.cols() != m) {
        throw MeshMismatch("prior size does not match the Jacobian columns");
    }
    x0_ = Eigen::VectorXd::Constant(m, base_value(jacobian.parametrization));

    const Eigen::MatrixXd sjt = prior_.cov * j_.transpose();
    Eigen::MatrixXd a = j_ * sjt;
    a.diagonal().array() += lambda2_;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    condition_ = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(condition_ <= 1e14)) {
        throw IllConditioned("condition estimate " + std::to_string(condition_) + " above 1e14; use a larger lambda");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw IllConditioned("data-space system is not positive definite");
    }
    gain_ = llt.solve(sjt.transpose()).transpose();
}

Eigen::VectorXd OneStepMap::reconstruct(const MeasurementVector& data, const MeasurementVector& base) const
{
    if (data.values.size() != j_.rows() || base.values.size() != j_.rows()) {
        throw MeshMismatch("measurement size does not match the Jacobian rows");
    }
    const Eigen::VectorXd r = data.values - base.values - j_ * (prior_.mean - x0_);
    return prior_.mean + gain_ * r;
}

double OneStepMap::stationarity_residual(const Eigen::VectorXd& x, const MeasurementVector& data,
                                         const MeasurementVector& base) const
{
    const Eigen::VectorXd d = x - prior_.mean;
    const Eigen::VectorXd rhs =
        prior_.cov * (j_.transpose() * (data.values - base.values - j_ * (prior_.mean - x0_)));
    const Eigen::VectorXd lhs = prior_.cov * (j_.transpose() * (j_ * d)) + lambda2_ * d;
    const double scale = rhs.norm();
    return scale > 0.0 ? (lhs - rhs).norm() / scale : (lhs - rhs).norm();
}

Eigen::VectorXd one_step_map(const MeasurementVector& data, const JacobianMatrix& jacobian,
                             const MeasurementVector& base, const Eigen::VectorXd& prior_mean,
                             const Eigen::MatrixXd& prior_cov, double lambda)
{
    return OneStepMap(jacobian, {prior_mean, prior_cov}, lambda).reconstruct(data, base);
}

LogConductivity to_log_conductivity(const Eigen::VectorXd& x, Parametrization param, double p, double floor)
{
    LogConductivity out;
    if (param == Parametrization::log_conductivity) {
        out.kappa = x;
        return out;
    }
    if (!(floor > 0.0)) {
        throw InvalidArgument("clipping floor must be > 0");
    }
    out.kappa.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = x(i);
        if (!(v > 0.0)) {
            v = floor;
            ++out.clipped;
        }
        out.kappa(i) = std::log(v);
    }
    switch (param) {
    case Parametrization::resistivity:
        out.kappa = -out.kappa;
        break;
    case Parametrization::natural:
        out.kappa *= 1.0 - p;
        break;
    default:
        break;
    }
    return out;
}

void write_reconstruction_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& truth,
                              const std::vector<Eigen::VectorXd>& reconstructions)
{
    if (truth.size() != reconstructions.size()) {
        throw InvalidArgument("truth and reconstruction counts differ");
    }
    const auto m = truth.empty() ? 0 : truth.front().size();
    os << "member,kind";
    for (Eigen::Index c = 0; c < m; ++c) {
        os << ",cell" << c;
    }
    os << "\n";
    const auto old = os.precision(17);
    auto row = [&](std::size_t i, const char* kind, const Eigen::VectorXd& v) {
        os << i << ',' << kind;
        for (Eigen::Index c = 0; c < v.size(); ++c) {
            os << ',' << v(c);
        }
        os << "\n";
    };
    for (std::size_t i = 0; i < truth.size(); ++i) {
        row(i, "truth", truth[i]);
        row(i, "reco", reconstructions[i]);
    }
    os.precision(old);
}

std::string reconstruction_manifest(const ReconstructionRecord& record)
{
    const nlohmann::json j = {
        {"schema", "plap-reconstruction-v1"},
        {"sample", record.sample},
        {"parametrization", std::string(to_string(record.parametrization))},
        {"p", record.p},
        {"tau", record.tau},
        {"lambda", record.lambda},
        {"seed", record.seed},
        {"data_mesh", record.data_mesh_hash},
        {"reconstruction_mesh", record.reconstruction_mesh_hash},
    };
    return j.dump(2);
}

} // namespace plap
