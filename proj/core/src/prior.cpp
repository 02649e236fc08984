#include <plap/prior.hpp>

#include <plap/errors.hpp>
#include <plap/parallel.hpp>

#include <Eigen/Cholesky>

#include <array>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>

namespace plap {

CovarianceModel covariance_matrix(const std::vector<Eigen::Vector2d>& centroids, double varsigma2, double b)
{
    if (!(varsigma2 > 0.0) || !(b > 0.0)) {
        throw InvalidArgument("covariance needs varsigma2 > 0 and b > 0");
    }
    const auto m = static_cast<Eigen::Index>(centroids.size());
    CovarianceModel model;
    model.varsigma2 = varsigma2;
    model.b = b;
    model.sigma.resize(m, m);
    const double inv = 1.0 / (2.0 * b * b);
    for (Eigen::Index i = 0; i < m; ++i) {
        model.sigma(i, i) = varsigma2;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d2 = (centroids[i] - centroids[j]).squaredNorm();
            model.sigma(i, j) = model.sigma(j, i) = varsigma2 * std::exp(-d2 * inv);
        }
    }
    return model;
}

CovarianceModel covariance_matrix(const Partition& partition, double varsigma2, double b)
{
    return covariance_matrix(partition.centroids(), varsigma2, b);
}

namespace {

constexpr std::array<SampleConfig, 6> kSamples{{
    {'A', 0.25, 1.0 / 3.0, 1e-2},
    {'B', 0.25, 2.0 / 3.0, 1e-2},
    {'C', 1.0, 1.0 / 3.0, 1e-2},
    {'D', 1.0, 2.0 / 3.0, 1e-2},
    {'E', 0.01, 1.0 / 3.0, 1e-3},
    {'F', 0.01, 2.0 / 3.0, 1e-3},
}};

} // namespace

const SampleConfig& sample_config(char name)
{
    for (const auto& s : kSamples) {
        if (s.name == name) {
            return s;
        }
    }
    throw InvalidArgument(std::string("unknown sample '") + name + "' (expected A..F)");
}

const SampleConfig& sample_config(std::string_view name)
{
    if (name.size() != 1) {
        throw InvalidArgument("unknown sample '" + std::string(name) + "' (expected A..F)");
    }
    return sample_config(name.front());
}

GaussianSampler::GaussianSampler(const CovarianceModel& model)
{
    const auto m = model.sigma.rows();
    const double max_jitter = 1e-10 * model.varsigma2;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (double jitter = 0.0; jitter <= max_jitter * (1.0 + 1e-12);
         jitter = jitter == 0.0 ? 1e-16 * model.varsigma2 : 10.0 * jitter) {
        llt.compute(model.sigma + jitter * Eigen::MatrixXd::Identity(m, m));
        if (llt.info() == Eigen::Success) {
            factor_ = llt.matrixL();
            jitter_ = jitter;
            return;
        }
    }
    throw FactorizationFailure("covariance is not positive definite after jitter " + std::to_string(max_jitter));
}

Eigen::VectorXd GaussianSampler::draw(std::uint64_t seed) const
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(factor_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        z(i) = normal(rng);
    }
    return factor_.triangularView<Eigen::Lower>() * z;
}

std::vector<Eigen::VectorXd> sample_logconductivity(const CovarianceModel& model, std::size_t n, std::uint64_t seed)
{
    if (n == 0) {
        throw InvalidArgument("sample size must be >= 1");
    }
    const GaussianSampler sampler(model);
    std::vector<Eigen::VectorXd> out(n);
    parallel_for(n, [&](std::size_t i) { out[i] = sampler.draw(derive_seed(seed, i)); });
    return out;
}

double mean_norm_statistic(const std::vector<Eigen::VectorXd>& sample)
{
    if (sample.empty()) {
        throw InvalidArgument("empty sample");
    }
    double sum = 0.0;
    for (const auto& k : sample) {
        sum += k.norm();
    }
    const auto m = static_cast<double>(sample.front().size());
    return std::sqrt(std::numbers::pi / m) * sum / static_cast<double>(sample.size());
}

LognormalMoments lognormal_moments(const CovarianceModel& model, double scale)
{
    const double r2 = scale * scale;
    const Eigen::ArrayXd d = model.sigma.diagonal().array() * r2;
    LognormalMoments out;
    out.mean = (0.5 * d).exp().matrix();
    const auto m = model.sigma.rows();
    out.cov.resize(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index i = 0; i < m; ++i) {
            out.cov(i, j) = std::exp(0.5 * (d(i) + d(j))) * std::expm1(r2 * model.sigma(i, j));
        }
    }
    return out;
}

void write_samples_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& sample)
{
    const auto m = sample.empty() ? 0 : sample.front().size();
    os << "member";
    for (Eigen::Index c = 0; c < m; ++c) {
        os << ",cell" << c;
    }
    os << "\n";
    const auto old = os.precision(17);
    for (std::size_t i = 0; i < sample.size(); ++i) {
        os << i;
        for (Eigen::Index c = 0; c < sample[i].size(); ++c) {
            os << ',' << sample[i](c);
        }
        os << "\n";
    }
    os.precision(old);
}

} // namespace plap
