#pragma once

// Randomized verifier for the pointwise inequalities satisfied by phi, its
// gradient and its Hessian. Inequalities whose constant is only known to
// exist are checked against an empirically calibrated constant.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace plap {

struct InequalityWitness {
    double p = 0.0;
    double tau = 0.0;
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    Eigen::Vector2d y = Eigen::Vector2d::Zero();
    double lhs = 0.0;
    double rhs = 0.0;
};

struct InequalityStats {
    std::string id;          // short tag, e.g. "hessian_lower_bound"
    std::string description;
    std::size_t checked = 0;
    std::size_t violations = 0;
    /// Smallest relative slack (rhs - lhs) / max(|lhs|, |rhs|); negative means violated.
    double worst_margin = 1.0;
    bool calibrated = false;
    /// Largest calibrated constant over the p bins (after the safety factor).
    double constant = 0.0;
    InequalityWitness worst;
};

struct InequalityReport {
    std::size_t samples = 0;
    std::vector<InequalityStats> items;

    bool passed() const;
    std::size_t total_violations() const;
    const InequalityStats& at(const std::string& id) const;
};

struct InequalityOptions {
    std::size_t samples = 100000;
    std::uint64_t seed = 20240601;
    double p_min = 1.5;
    double p_max = 3.0;
    double tau_min = 0.0;
    double tau_max = 1.0;
    /// Draws used to calibrate the unspecified constants (separate stream).
    std::size_t calibration_samples = 100000;
    double calibration_factor = 1.05;
    int p_bins = 8;
    /// Relative rounding allowance for inequalities with explicit constants.
    double rounding = 1e-10;
    /// Throw InequalityViolation on the first failure instead of reporting.
    bool throw_on_violation = false;
};

InequalityReport verify_inequalities(const InequalityOptions& options);

} // namespace plap
