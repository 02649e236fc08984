#pragma once

// Cell-wise coefficient fields and the four ways of parametrizing them:
//
//   std  sigma               (conductivity)
//   inv  rho   = 1 / sigma   (resistivity)
//   nat  mu    = sigma^(-q/p)
//   exp  kappa = log sigma   (log-conductivity)

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace plap {

enum class Parametrization { conductivity, resistivity, natural, log_conductivity };

inline constexpr Parametrization kAllParametrizations[] = {
    Parametrization::conductivity, Parametrization::resistivity, Parametrization::natural,
    Parametrization::log_conductivity};

/// Short tag: "std", "inv", "nat" or "exp".
std::string_view to_string(Parametrization param);
std::optional<Parametrization> parse_parametrization(std::string_view tag);

/// Power r with x = sigma^r for the power parametrizations (1, -1, -q/p);
/// empty for the log parametrization.
std::optional<double> power_exponent(Parametrization param, double p);

/// Value of the parameter at the homogeneous base point sigma = 1.
double base_value(Parametrization param);

/// Maps a log-conductivity to the parameter (e^kappa, e^-kappa, e^(-q kappa / p), kappa).
Eigen::VectorXd from_log_conductivity(const Eigen::Ref<const Eigen::VectorXd>& kappa,
                                      Parametrization param, double p);

/// Exponent r~ with x = exp(r~ kappa); 0 for the log parametrization (identity).
double log_scale(Parametrization param, double p);

class ConductivityField {
public:
    ConductivityField(Eigen::VectorXd values, Parametrization param = Parametrization::conductivity,
                      double p = 2.0);

    static ConductivityField constant(std::size_t cells, double sigma);
    static ConductivityField from_log(const Eigen::Ref<const Eigen::VectorXd>& kappa);

    const Eigen::VectorXd& values() const noexcept { return values_; }
    Parametrization parametrization() const noexcept { return param_; }
    double p() const noexcept { return p_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }

    /// Conductivity sigma; strictly positive for every parametrization.
    Eigen::VectorXd to_sigma() const;

private:
    Eigen::VectorXd values_;
    Parametrization param_;
    double p_;
};

} // namespace plap
