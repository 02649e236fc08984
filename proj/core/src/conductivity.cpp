#include <plap/conductivity.hpp>

#include <plap/errors.hpp>

#include <cmath>

namespace plap {

std::string_view to_string(Parametrization param)
{
    switch (param) {
    case Parametrization::conductivity:
        return "std";
    case Parametrization::resistivity:
        return "inv";
    case Parametrization::natural:
        return "nat";
    case Parametrization::log_conductivity:
        return "exp";
    }
    return "?";
}

std::optional<Parametrization> parse_parametrization(std::string_view tag)
{
    for (auto param : kAllParametrizations) {
        if (to_string(param) == tag) {
            return param;
        }
    }
    return std::nullopt;
}

std::optional<double> power_exponent(Parametrization param, double p)
{
    switch (param) {
    case Parametrization::conductivity:
        return 1.0;
    case Parametrization::resistivity:
        return -1.0;
    case Parametrization::natural:
        return -1.0 / (p - 1.0); // -q/p
    case Parametrization::log_conductivity:
        return std::nullopt;
    }
    return std::nullopt;
}

double base_value(Parametrization param)
{
    return param == Parametrization::log_conductivity ? 0.0 : 1.0;
}

double log_scale(Parametrization param, double p)
{
    const auto r = power_exponent(param, p);
    return r ? *r : 0.0;
}

Eigen::VectorXd from_log_conductivity(const Eigen::Ref<const Eigen::VectorXd>& kappa, Parametrization param,
                                      double p)
{
    if (param == Parametrization::log_conductivity) {
        return kappa;
    }
    return (log_scale(param, p) * kappa).array().exp().matrix();
}

ConductivityField::ConductivityField(Eigen::VectorXd values, Parametrization param, double p)
    : values_(std::move(values)), param_(param), p_(p)
{
    if (!(p_ > 1.0)) {
        throw InvalidArgument("conductivity field needs p > 1");
    }
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        const double v = values_(i);
        if (!std::isfinite(v)) {
            throw InvalidArgument("conductivity field has a non-finite entry at cell " + std::to_string(i));
        }
        if (param_ != Parametrization::log_conductivity && !(v > 0.0)) {
            throw InvalidArgument("conductivity field has a non-positive entry at cell " + std::to_string(i));
        }
    }
}

ConductivityField ConductivityField::constant(std::size_t cells, double sigma)
{
    return ConductivityField(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(cells), sigma));
}

ConductivityField ConductivityField::from_log(const Eigen::Ref<const Eigen::VectorXd>& kappa)
{
    return ConductivityField(kappa, Parametrization::log_conductivity);
}

Eigen::VectorXd ConductivityField::to_sigma() const
{
    switch (param_) {
    case Parametrization::conductivity:
        return values_;
    case Parametrization::resistivity:
        return values_.cwiseInverse();
    case Parametrization::natural:
        return values_.array().pow(-(p_ - 1.0)).matrix(); // mu^(-p/q)
    case Parametrization::log_conductivity:
        return values_.array().exp().matrix();
    }
    return values_;
}

} // namespace plap
