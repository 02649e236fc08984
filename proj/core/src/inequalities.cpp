#include <plap/inequalities.hpp>

#include <plap/energy.hpp>
#include <plap/errors.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace plap {

namespace {

enum Item : std::size_t {
    kHessianLower,
    kHessianNorm,
    kThirdDerivative,
    kConvexity,
    kMonotonicity,
    kLipschitz,
    kDualGrowth,
    kGrowthLargeP,
    kDualGrowthSmallP,
    kPrimalGrowthSmallP,
    kItemCount
};

struct Tuple {
    double p;
    double tau;
    Eigen::Vector2d x;
    Eigen::Vector2d y;
};

class TupleSampler {
public:
    TupleSampler(const InequalityOptions& o, std::uint64_t seed) : o_(o), rng_(seed) {}

    Tuple next()
    {
        Tuple t;
        t.p = uniform(o_.p_min, o_.p_max);
        t.tau = (o_.tau_min == 0.0 && unit() < 0.1) ? 0.0 : uniform(o_.tau_min, o_.tau_max);
        t.x = random_vector();
        const double mode = unit();
        if (mode < 0.5) {
            t.y = random_vector();
        } else if (mode < 0.75) {
            const double rel = std::pow(10.0, uniform(-3.0, -1.0));
            t.y = t.x + rel * t.x.norm() * random_direction();
        } else {
            t.y = -uniform(0.0, 2.0) * t.x;
        }
        return t;
    }

private:
    double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
    double uniform(double a, double b) { return a + (b - a) * unit(); }
    Eigen::Vector2d random_direction()
    {
        const double angle = uniform(0.0, 2.0 * std::numbers::pi);
        return {std::cos(angle), std::sin(angle)};
    }
    Eigen::Vector2d random_vector() { return std::pow(10.0, uniform(-3.0, 1.5)) * random_direction(); }

    const InequalityOptions& o_;
    std::mt19937_64 rng_;
};

// Ratios whose supremum is the unspecified constant of the inequality.
struct Ratios {
    double third = 0.0;
    double monotone = 0.0;
    double lipschitz = 0.0;
    bool has_pair = false;
};

Ratios calibrated_ratios(const Tuple& t)
{
    const EnergyParams params(t.p, t.tau);
    const double p = t.p;
    Ratios r;
    const double s_x = t.tau * t.tau + t.x.squaredNorm();
    r.third = max_abs_third_derivative_phi(t.x, params) / std::pow(s_x, 0.5 * (p - 3.0));

    const Eigen::Vector2d diff = t.x - t.y;
    if (diff.squaredNorm() > 0.0) {
        const double s_xy = t.tau * t.tau + t.x.squaredNorm() + t.y.squaredNorm();
        const double weight = std::pow(s_xy, 0.5 * (p - 2.0));
        const Eigen::Vector2d dflux = grad_phi(t.x, params) - grad_phi(t.y, params);
        r.monotone = weight * diff.squaredNorm() / dflux.dot(diff);
        r.lipschitz = dflux.norm() / (weight * diff.norm());
        r.has_pair = true;
    }
    return r;
}

class Calibration {
public:
    Calibration(const InequalityOptions& o) : o_(o), bins_(static_cast<std::size_t>(std::max(1, o.p_bins)))
    {
        for (auto& b : bins_) {
            b.fill(-1.0);
        }
    }

    std::size_t bin_of(double p) const
    {
        if (o_.p_max <= o_.p_min) {
            return 0;
        }
        const double u = (p - o_.p_min) / (o_.p_max - o_.p_min);
        const auto n = bins_.size();
        return std::min(n - 1, static_cast<std::size_t>(std::max(0.0, u) * static_cast<double>(n)));
    }

    void add(const Tuple& t)
    {
        const Ratios r = calibrated_ratios(t);
        auto& b = bins_[bin_of(t.p)];
        b[0] = std::max(b[0], r.third);
        if (r.has_pair) {
            b[1] = std::max(b[1], r.monotone);
            b[2] = std::max(b[2], r.lipschitz);
        }
    }

    void finalize()
    {
        std::array<double, 3> global{-1.0, -1.0, -1.0};
        for (const auto& b : bins_) {
            for (std::size_t k = 0; k < 3; ++k) {
                global[k] = std::max(global[k], b[k]);
            }
        }
        for (auto& b : bins_) {
            for (std::size_t k = 0; k < 3; ++k) {
                if (b[k] < 0.0) {
                    b[k] = global[k];
                }
                b[k] *= o_.calibration_factor;
            }
        }
    }

    double constant(std::size_t which, double p) const { return bins_[bin_of(p)][which]; }

    double max_constant(std::size_t which) const
    {
        double c = 0.0;
        for (const auto& b : bins_) {
            c = std::max(c, b[which]);
        }
        return c;
    }

private:
    const InequalityOptions& o_;
    std::vector<std::array<double, 3>> bins_;
};

class Checker {
public:
    Checker(InequalityReport& report, const InequalityOptions& o) : report_(report), o_(o) {}

    // Records lhs <= rhs, with `scale` the magnitude used for the relative slack.
    void check(Item item, const Tuple& t, double lhs, double rhs, double scale = -1.0)
    {
        auto& s = report_.items[item];
        ++s.checked;
        if (scale < 0.0) {
            scale = std::max(std::abs(lhs), std::abs(rhs));
        }
        const double margin = scale > 0.0 ? (rhs - lhs) / scale : 0.0;
        const bool violated = !(margin >= -o_.rounding);
        if (margin < s.worst_margin || violated) {
            if (margin < s.worst_margin || s.violations == 0) {
                s.worst_margin = std::min(s.worst_margin, margin);
                s.worst = {t.p, t.tau, t.x, t.y, lhs, rhs};
            }
        }
        if (violated) {
            ++s.violations;
            if (o_.throw_on_violation) {
                std::ostringstream os;
                os.precision(17);
                os << s.id << " violated at p=" << t.p << " tau=" << t.tau << " x=(" << t.x(0) << ", "
                   << t.x(1) << ") y=(" << t.y(0) << ", " << t.y(1) << "): lhs=" << lhs << " rhs=" << rhs;
                throw InequalityViolation(os.str());
            }
        }
    }

private:
    InequalityReport& report_;
    const InequalityOptions& o_;
};

void check_tuple(Checker& c, const Calibration& cal, const Tuple& t)
{
    const EnergyParams params(t.p, t.tau);
    const double p = t.p;
    const double q = params.q();
    const double tau = t.tau;
    const double s = tau * tau + t.x.squaredNorm();
    const double xn = t.x.norm();

    const Eigen::Matrix2d h = hessian_phi(t.x, params);
    const Eigen::Vector2d flux_x = grad_phi(t.x, params);
    const Eigen::Vector2d flux_y = grad_phi(t.y, params);
    const double phi_x = phi(t.x, params);
    const double phi_y = phi(t.y, params);

    // Hessian lower bound in direction y.
    {
        const double quad = t.y.dot(h * t.y);
        const double bound = std::pow(s, 0.5 * (p - 4.0)) * (tau * tau + std::min(p - 1.0, 1.0) * xn * xn) *
                             t.y.squaredNorm();
        c.check(kHessianLower, t, bound, quad);
    }
    // Spectral norm bound.
    {
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h, Eigen::EigenvaluesOnly);
        const double norm = eig.eigenvalues().cwiseAbs().maxCoeff();
        c.check(kHessianNorm, t, norm, std::max(1.0, p - 1.0) * std::pow(s, 0.5 * (p - 2.0)));
    }
    // Third derivative bound, calibrated C(p).
    {
        const double lhs = max_abs_third_derivative_phi(t.x, params);
        const double rhs = cal.constant(0, p) * std::pow(s, 0.5 * (p - 3.0));
        c.check(kThirdDerivative, t, lhs, rhs);
    }
    // Tangent plane below the graph.
    {
        const double tangent = phi_x + flux_x.dot(t.y - t.x);
        const double scale = std::max({std::abs(phi_x), std::abs(phi_y), std::abs(flux_x.dot(t.y - t.x))});
        c.check(kConvexity, t, tangent, phi_y, scale);
    }
    // Monotonicity and Lipschitz-type bounds of D phi, calibrated constants.
    {
        const Eigen::Vector2d diff = t.x - t.y;
        const double s_xy = tau * tau + t.x.squaredNorm() + t.y.squaredNorm();
        const double weight = std::pow(s_xy, 0.5 * (p - 2.0));
        const Eigen::Vector2d dflux = flux_x - flux_y;
        c.check(kMonotonicity, t, weight * diff.squaredNorm(), cal.constant(1, p) * dflux.dot(diff));
        c.check(kLipschitz, t, dflux.norm(), cal.constant(2, p) * weight * diff.norm());
    }
    // |D phi|^q <= p phi <= 2^(p/2) max{tau^2, |x|^2}^(p/2) <= 2^(p/2) (tau^p + |x|^p).
    {
        const double dual = std::pow(flux_x.norm(), q);
        const double primal = p * phi_x;
        const double mid = std::pow(2.0, 0.5 * p) * std::pow(std::max(tau * tau, xn * xn), 0.5 * p);
        const double top = std::pow(2.0, 0.5 * p) * (std::pow(tau, p) + std::pow(xn, p));
        c.check(kDualGrowth, t, dual, primal);
        c.check(kDualGrowth, t, primal, mid);
        c.check(kDualGrowth, t, mid, top);
    }
    if (p >= 2.0) {
        const double lhs = flux_x.norm();
        const double rhs = std::pow(2.0, 0.5 * (p - 2.0)) * (std::pow(tau, p - 2.0) * xn + std::pow(xn, p - 1.0));
        c.check(kGrowthLargeP, t, lhs, rhs);
    }
    if (p <= 2.0) {
        c.check(kDualGrowthSmallP, t, std::pow(flux_x.norm(), q), flux_x.dot(t.x));
        const double rhs = std::pow(2.0, 0.5 * (2.0 - p)) *
                           (flux_x.dot(t.x) + std::pow(tau, 2.0 - p) * std::pow(s, 0.5 * (p - 2.0)) * std::pow(xn, p));
        c.check(kPrimalGrowthSmallP, t, std::pow(xn, p), rhs);
    }
}

InequalityReport make_empty_report()
{
    InequalityReport r;
    r.items.resize(kItemCount);
    const std::array<std::pair<const char*, const char*>, kItemCount> names{{
        {"hessian_lower_bound", "y'H(x)y >= s^((p-4)/2) (tau^2 + min{p-1,1}|x|^2) |y|^2"},
        {"hessian_norm_bound", "|H(x)|_2 <= max{1,p-1} s^((p-2)/2)"},
        {"third_derivative_bound", "max |d^3 phi| <= C(p) s^((p-3)/2)  [calibrated C]"},
        {"convexity", "phi(y) >= phi(x) + D phi(x).(y-x)"},
        {"strong_monotonicity", "(tau^2+|x|^2+|y|^2)^((p-2)/2)|x-y|^2 <= C (D phi(x)-D phi(y)).(x-y)  [calibrated C]"},
        {"gradient_lipschitz", "|D phi(x)-D phi(y)| <= C (tau^2+|x|^2+|y|^2)^((p-2)/2)|x-y|  [calibrated C]"},
        {"dual_growth", "|D phi|^q <= p phi <= 2^(p/2) max{tau^2,|x|^2}^(p/2) <= 2^(p/2)(tau^p+|x|^p)"},
        {"gradient_growth_large_p", "p >= 2: |D phi| <= 2^((p-2)/2)(tau^(p-2)|x| + |x|^(p-1))"},
        {"dual_growth_small_p", "p <= 2: |D phi|^q <= D phi(x).x"},
        {"primal_growth_small_p", "p <= 2: |x|^p <= 2^((2-p)/2)(D phi.x + tau^(2-p) s^((p-2)/2)|x|^p)"},
    }};
    for (std::size_t i = 0; i < kItemCount; ++i) {
        r.items[i].id = names[i].first;
        r.items[i].description = names[i].second;
    }
    for (auto i : {kThirdDerivative, kMonotonicity, kLipschitz}) {
        r.items[i].calibrated = true;
    }
    return r;
}

} // namespace

bool InequalityReport::passed() const { return total_violations() == 0; }

std::size_t InequalityReport::total_violations() const
{
    std::size_t n = 0;
    for (const auto& i : items) {
        n += i.violations;
    }
    return n;
}

const InequalityStats& InequalityReport::at(const std::string& id) const
{
    for (const auto& i : items) {
        if (i.id == id) {
            return i;
        }
    }
    throw InvalidArgument("unknown inequality id '" + id + "'");
}

InequalityReport verify_inequalities(const InequalityOptions& options)
{
    if (options.samples < 1) {
        throw InvalidArgument("verify_inequalities needs at least one sample");
    }
    if (!(options.p_min > 1.0) || options.p_max < options.p_min || options.tau_min < 0.0 ||
        options.tau_max < options.tau_min) {
        throw InvalidArgument("verify_inequalities: ranges must satisfy 1 < p_min <= p_max, 0 <= tau_min <= tau_max");
    }

    Calibration cal(options);
    {
        TupleSampler sampler(options, options.seed ^ 0x9e3779b97f4a7c15ULL);
        for (std::size_t i = 0; i < std::max<std::size_t>(options.calibration_samples, 1); ++i) {
            cal.add(sampler.next());
        }
        cal.finalize();
    }

    InequalityReport report = make_empty_report();
    report.samples = options.samples;
    Checker checker(report, options);
    TupleSampler sampler(options, options.seed);
    for (std::size_t i = 0; i < options.samples; ++i) {
        Tuple t = sampler.next();
        if (i == 0) {
            t.y = t.x; // degenerate equality case
        }
        check_tuple(checker, cal, t);
    }
    report.items[kThirdDerivative].constant = cal.max_constant(0);
    report.items[kMonotonicity].constant = cal.max_constant(1);
    report.items[kLipschitz].constant = cal.max_constant(2);
    return report;
}

} // namespace plap
