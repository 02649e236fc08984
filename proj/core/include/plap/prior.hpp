#pragma once

// Gaussian priors on the cell-wise log-conductivity with squared-exponential
// covariance
//
//     Sigma_ij = varsigma^2 exp(-|x_i - x_j|^2 / (2 b^2)),
//
// and the log-normal moments of exp(r kappa).

#include <plap/mesh.hpp>

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace plap {

struct CovarianceModel {
    double varsigma2 = 1.0;
    double b = 1.0;
    Eigen::MatrixXd sigma;

    std::size_t size() const noexcept { return static_cast<std::size_t>(sigma.rows()); }
};

CovarianceModel covariance_matrix(const std::vector<Eigen::Vector2d>& centroids, double varsigma2, double b);
CovarianceModel covariance_matrix(const Partition& partition, double varsigma2, double b);

/// Named prior/noise configurations A-F.
struct SampleConfig {
    char name = 'A';
    double varsigma2 = 0.25;
    double b = 1.0 / 3.0;
    /// Noise level used with this sample in reconstruction studies.
    double lambda = 1e-2;
};
const SampleConfig& sample_config(char name);
const SampleConfig& sample_config(std::string_view name);

/// Lower factor L with L L^T = Sigma + jitter I. The jitter is raised from 0
/// in decades up to 1e-10 varsigma^2 before FactorizationFailure is thrown.
class GaussianSampler {
public:
    explicit GaussianSampler(const CovarianceModel& model);

    double jitter() const noexcept { return jitter_; }
    const Eigen::MatrixXd& factor() const noexcept { return factor_; }

    /// One draw from N(0, Sigma) using its own generator seeded with `seed`.
    Eigen::VectorXd draw(std::uint64_t seed) const;

private:
    Eigen::MatrixXd factor_;
    double jitter_ = 0.0;
};

/// n draws; member i uses derive_seed(seed, i), so prefixes of a sample agree.
std::vector<Eigen::VectorXd> sample_logconductivity(const CovarianceModel& model, std::size_t n,
                                                    std::uint64_t seed);

/// sqrt(pi / M) times the sample mean of |kappa|_2.
double mean_norm_statistic(const std::vector<Eigen::VectorXd>& sample);

struct LognormalMoments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};
/// Moments of y = exp(r kappa) for kappa ~ N(0, Sigma).
LognormalMoments lognormal_moments(const CovarianceModel& model, double scale);

/// One row per member, columns cell0..cellM-1.
void write_samples_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& sample);

} // namespace plap
