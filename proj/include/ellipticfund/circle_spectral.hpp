#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ellipticfund/error.hpp"
#include "ellipticfund/operator.hpp"
#include "ellipticfund/radial.hpp"

namespace ellipticfund {

/// Periodic grid function phi(theta_k), theta_k = 2 pi k / n_theta, standing
/// for u = r^-alpha phi(theta) (power) or u = -log r + phi(theta) (log).
struct CircleProfile {
    int n_theta = 0;
    std::vector<double> values;
    double alpha = 0.0;
    Branch branch = Branch::power;

    double theta(int k) const;
    double spacing() const;
    /// Periodic cubic (Catmull-Rom) interpolation.
    double at(double theta) const;
    double mean() const;
    double max_abs() const;
    /// Power: min(sign(alpha) phi) = 1. Log: zero mean.
    void normalize();
    /// u(x, y) reconstructed from the profile.
    double u(double x, double y) const;
};

/// D^2 u at the unit-circle point of angle theta, in Cartesian coordinates,
/// for u = r^-alpha phi(theta) (power) or u = -log r + phi(theta) (log).
SymMatrix hessian_homogeneous_2d(double phi, double dphi, double ddphi, double alpha, double theta, Branch branch);

struct CircleConfig {
    int n_theta = 256;
    double dt_safety = 0.5;
    /// Relative eigen-residual target; also bounds the variance of the
    /// trailing mu window (tol^2).
    double tol = 1e-7;
    long max_iter = 20'000'000;
    int check_every = 500;
    /// Random smooth positive start instead of the constant profile.
    std::optional<std::uint64_t> init_seed;
    /// Warm start; resampled when its size differs from n_theta.
    std::optional<std::vector<double>> initial;
    /// Bisection stops once the bracket is this narrow.
    double alpha_tol = 1e-6;
    /// |mu_log| at or below this selects the log branch.
    double log_tol = 1e-4;
    /// Slack for the eta monotonicity audit.
    double audit_tol = 1e-6;
};

/// Principal eigenpair of F(D^2 u) = mu u r^-2 on homogeneous u.
struct EigenEstimate {
    double alpha = 0.0;
    double mu = 0.0;
    /// mu / alpha on the power branch, mu on the log branch.
    double eta = 0.0;
    CircleProfile profile;
    long iterations = 0;
    bool converged = false;
    double residual = 0.0;
    double dt = 0.0;
};

class EigenConvergenceError : public Error {
public:
    EigenConvergenceError(const std::string& what, EigenEstimate last)
        : Error(ErrorKind::convergence, what), last_(std::move(last)) {}
    const EigenEstimate& last_state() const noexcept { return last_; }

private:
    EigenEstimate last_;
};

/// F(H[phi]) at every grid node (periodic central differences).
std::vector<double> apply_circle_operator(const OperatorSpec& op, const CircleProfile& profile);

/// Power branch; alpha must exceed -1 + 1e-3 and be nonzero.
EigenEstimate eigenpair_at_alpha(const OperatorSpec& op, double alpha, const CircleConfig& cfg);

/// Log branch (alpha = 0).
EigenEstimate eigenpair_log(const OperatorSpec& op, const CircleConfig& cfg);

struct EtaSample {
    double alpha = 0.0;
    double eta = 0.0;
};

struct Exponent2dDetail {
    ExponentResult result;
    std::vector<EtaSample> audit;
    std::optional<double> mu_log;
    EigenEstimate final_estimate;
};

Exponent2dDetail exponent_2d_detailed(const OperatorSpec& op, const CircleConfig& cfg);
ExponentResult exponent_2d(const OperatorSpec& op, const CircleConfig& cfg);

/// Normalized eigenprofile at the exponent of `result`.
CircleProfile fundamental_profile_2d(const OperatorSpec& op, const ExponentResult& result, const CircleConfig& cfg);

/// CSV with '#' header lines (alpha, branch, operator hash) followed by the
/// column row "theta,phi,residual".
void write_profile_csv(std::ostream& out, const CircleProfile& profile, const std::vector<double>& residual,
                       const std::string& operator_hash);

inline constexpr const char* kProfileCsvHeader = "theta,phi,residual";

}  // namespace ellipticfund
