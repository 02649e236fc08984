#pragma once

// One-step linearized MAP estimate
//
//     x = argmin |V - U0 - J (x - x0)|^2 + lambda^2 (x - xbar)^T Sigma_x^-1 (x - xbar)
//
// around the homogeneous base point x0, for any of the four parametrizations.

#include <plap/prior.hpp>
#include <plap/sensitivity.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace plap {

/// Prior mean and covariance of the parameter x for kappa ~ N(0, Sigma):
/// (0, Sigma) for the log parametrization, the log-normal moments otherwise.
struct ParameterPrior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
ParameterPrior parameter_prior(const CovarianceModel& model, Parametrization param, double p);

/// Gain of the MAP estimate for fixed (J, Sigma_x, lambda). Solved in data
/// space, x - xbar = Sigma_x J^T (J Sigma_x J^T + lambda^2 I)^-1 r, which is
/// algebraically the regularized normal equation but never inverts Sigma_x
/// (numerically singular for long correlation lengths). Immutable once built
/// and safe to share between threads.
class OneStepMap {
public:
    /// `penalty` multiplies lambda^2.
    OneStepMap(const JacobianMatrix& jacobian, ParameterPrior prior, double lambda, double penalty = 1.0);

    Eigen::VectorXd reconstruct(const MeasurementVector& data, const MeasurementVector& base) const;

    /// Relative residual |b - A d| / |b| of the optimality condition
    /// (Sigma_x J^T J + lambda^2 I) d = Sigma_x J^T (V - U0 - J (xbar - x0)), d = x - xbar.
    double stationarity_residual(const Eigen::VectorXd& x, const MeasurementVector& data,
                                 const MeasurementVector& base) const;

    /// 2-norm condition number of J Sigma_x J^T + lambda^2 I.
    double condition() const noexcept { return condition_; }
    const Eigen::VectorXd& base_point() const noexcept { return x0_; }
    const ParameterPrior& prior() const noexcept { return prior_; }
    double effective_lambda2() const noexcept { return lambda2_; }

private:
    Eigen::MatrixXd j_;
    ParameterPrior prior_;
    Eigen::VectorXd x0_;
    Eigen::MatrixXd gain_; // Sigma_x J^T (J Sigma_x J^T + lambda^2 I)^-1
    double lambda2_;
    double condition_ = 1.0;
};

Eigen::VectorXd one_step_map(const MeasurementVector& data, const JacobianMatrix& jacobian,
                             const MeasurementVector& base, const Eigen::VectorXd& prior_mean,
                             const Eigen::MatrixXd& prior_cov, double lambda);

struct LogConductivity {
    Eigen::VectorXd kappa;
    /// Cells whose sigma, rho or mu came out non-positive and were floored.
    std::size_t clipped = 0;
};
/// kappa from a parameter vector: log x, -log x, (1 - p) log x or x.
LogConductivity to_log_conductivity(const Eigen::VectorXd& x, Parametrization param, double p,
                                    double floor = 1e-6);

struct ReconstructionRecord {
    std::string sample;
    Parametrization parametrization = Parametrization::log_conductivity;
    double p = 2.0;
    double tau = 0.0;
    double lambda = 1e-2;
    std::uint64_t seed = 0;
    std::string data_mesh_hash;
    std::string reconstruction_mesh_hash;
};

/// CSV with columns member, truth/reco per cell: one row per member and kind.
void write_reconstruction_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& truth,
                              const std::vector<Eigen::VectorXd>& reconstructions);
/// JSON manifest describing how a reconstruction was produced.
std::string reconstruction_manifest(const ReconstructionRecord& record);

} // namespace plap
