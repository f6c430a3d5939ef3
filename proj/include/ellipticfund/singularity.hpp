#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ellipticfund/annulus.hpp"
#include "ellipticfund/canonical_json.hpp"

namespace ellipticfund {

/// A function on the punctured plane.
using PlaneFunction = std::function<double(double x, double y)>;

PlaneFunction field_function(const Field& field);

struct RadialRow {
    double r = 0.0;
    double m = 0.0;
    double M = 0.0;
    /// min and max of u / Phi on the circle; empty when Phi vanishes there.
    std::optional<double> rho;
    std::optional<double> rhobar;
    /// M / m when m > 0.
    std::optional<double> harnack_ratio;
};

/// m, M, rho, rhobar on each circle from `n_angles` equally spaced samples.
/// With `strict`, a circle where Phi vanishes throws undefined_ratio;
/// otherwise that row simply has no ratios.
std::vector<RadialRow> radial_stats(const PlaneFunction& u, const PlaneFunction& phi, const std::vector<double>& radii,
                                    int n_angles = 720, bool strict = false);

enum class Singularity {
    // near the origin
    removable,
    plus_phi,
    minus_phi_tilde,
    neg_interior_phi,
    neg_interior_phi_tilde,
    // near infinity
    finite_limit,
    decay_phi,
    decay_phi_tilde,
    grow_phi,
    grow_phi_tilde,
};

const char* to_string(Singularity s);

enum class Confidence { clear, marginal };
const char* to_string(Confidence c);

struct SingularityReport {
    bool at_origin = true;
    Singularity kind = Singularity::removable;
    /// Alternative 1..5 in the order listed in Singularity.
    int alternative = 1;
    std::optional<double> a_est;
    /// u(0) or the limit at infinity when it exists.
    std::optional<double> limit;
    Confidence confidence = Confidence::clear;
    /// Relative residual of the accepted fit, or the largest tail slope for
    /// the bounded alternatives.
    double fit_residual = 0.0;
    std::vector<RadialRow> curves;
};

Json to_json(const SingularityReport& rep);

struct ClassifierConfig {
    /// Ladder r_k = 2^-k (origin) or 2^k (infinity), k = k_min..k_max.
    int k_min = 2;
    int k_max = 10;
    int n_angles = 720;
    /// Number of trailing rings used for fits and trends.
    int tail = 4;
    /// Largest accepted relative residual of u ~ a Psi + b.
    double fit_tol = 0.05;
    /// Largest accepted |d m / d log r| and |d M / d log r| for the bounded
    /// alternatives.
    double slope_tol = 0.02;
    /// |alpha| below this counts as zero.
    double zero_tol = 1e-6;
    /// Rings closer to the origin (or farther out) than this are dropped,
    /// e.g. 4h for grid data.
    double min_radius = 0.0;
    double max_radius = 0.0;
};

struct ClassifierInput {
    PlaneFunction u;
    PlaneFunction phi;
    PlaneFunction phi_tilde;
    double alpha_star = 0.0;
    double alpha_star_tilde = 0.0;
};

/// Decides which of the five alternatives for an isolated singularity at the
/// origin the samples follow. Throws invalid_input when u is unbounded on both
/// sides and classification when no alternative fits.
SingularityReport classify_origin(const ClassifierInput& in, const ClassifierConfig& cfg = {});

/// Same at infinity.
SingularityReport classify_infinity(const ClassifierInput& in, const ClassifierConfig& cfg = {});

}  // namespace ellipticfund
