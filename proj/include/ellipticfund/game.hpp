#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ellipticfund/canonical_json.hpp"
#include "ellipticfund/operator.hpp"

namespace ellipticfund {

/// Two-player controlled diffusion dX = sigma(a, b) dW in R^n. Player I picks
/// a in A, player II picks b in B. sigma(a, b) is n×d row-major, stored at
/// index a * n_b + b.
struct GameSpec {
    int dim = 2;
    int noise_dim = 2;
    int n_a = 1;
    int n_b = 1;
    std::vector<std::vector<double>> sigma;
    EllipticityPair declared;

    const std::vector<double>& sigma_at(int a, int b) const { return sigma[static_cast<std::size_t>(a * n_b + b)]; }
    /// D(a, b) = sigma sigma^T / 2.
    SymMatrix diffusion(int a, int b) const;
};

/// Nonempty controls, consistent shapes and lambda I <= D(a, b) <= Lambda I
/// (tolerance 1e-12). Throws invalid_input.
void validate(const GameSpec& game);

/// Game with the given diffusion matrices (indexed a * n_b + b), sigma taken
/// as the symmetric square root of 2D.
GameSpec make_game_from_diffusions(int n_a, int n_b, const std::vector<SymMatrix>& diffusions, EllipticityPair pair);

/// sigma = sqrt(2) I for both players: X is a standard Brownian motion
/// speeded up so that D = I.
GameSpec brownian_game(int n);

/// Planar game in which one player picks D from lambda I, Lambda I and
/// lambda I + (Lambda - lambda) e e^T over `n_dirs` directions e, the other
/// player having a single control. `controller` is 1 (player I) or 2.
GameSpec pucci_game_2d(EllipticityPair pair, int n_dirs, int controller);

enum class IsaacsConvention { upper, lower };
const char* to_string(IsaacsConvention c);

/// Operator of the displayed Isaacs forms: upper -min_a max_b trace(D M)
/// (a SupInf with families indexed by a) and lower -max_b min_a trace(D M)
/// (an InfSup with families indexed by b).
OperatorSpec build_isaacs_from_controls(const GameSpec& game, IsaacsConvention convention);

/// Operator solved by P(exit through the inner sphere) when player I
/// maximizes it: upper -min_b max_a trace(D M), lower -max_a min_b trace(D M).
OperatorSpec value_operator(const GameSpec& game, IsaacsConvention convention);

enum class Player { one, two };

enum class PolicyKind { argmax_drift, argmin_drift, fixed };
const char* to_string(PolicyKind k);

/// Stationary feedback rule x -> control index.
struct FeedbackPolicy {
    PolicyKind kind = PolicyKind::fixed;
    int fixed_index = 0;
    std::function<int(std::span<const double>)> rule;

    int operator()(std::span<const double> x) const { return rule(x); }
};

using HessianFn = std::function<SymMatrix(std::span<const double>)>;

/// Player I: argmax_a min_b trace(D(a,b) H(x)), pushing Phi(X) up and the
/// path toward the inner sphere. Player II: argmin_b max_a. Ties go to the
/// lowest index.
FeedbackPolicy optimal_feedback_policy(const GameSpec& game, HessianFn hessian, Player player);

FeedbackPolicy fixed_policy(int index);

struct SimConfig {
    double r = 0.25;
    double R = 1.0;
    std::vector<double> x0;
    double dt_base = 1e-3;
    /// Multiplies the near-sphere bound d^2 / (4 Lambda n); values below 1
    /// refine steps where state-dependent controls vary on the scale of d.
    double step_factor = 1.0;
    long n_paths = 10000;
    std::uint64_t master_seed = 0;
    /// Defaults to 1e3 R^2 / lambda when unset.
    std::optional<double> max_time;
};

void validate(const SimConfig& cfg, const GameSpec& game);

enum class ExitSide { inner, outer, timeout };
const char* to_string(ExitSide s);

struct ExitOutcome {
    ExitSide side = ExitSide::timeout;
    double time = 0.0;
};

/// 64-bit seed of the path's private generator.
std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path_index);

/// One Euler-Maruyama path with step min(dt_base, step_factor d^2 / (4 Lambda n)), d the
/// distance to the nearer sphere; exit times are linearly interpolated.
ExitOutcome simulate_exit(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                          const SimConfig& cfg, long path_index);

struct HitStats {
    double p_hat = 0.0;
    double std_error = 0.0;
    long n_inner = 0;
    long n_outer = 0;
    long n_timeout = 0;
    double mean_exit_time = 0.0;
    std::optional<std::string> warning;

    bool operator==(const HitStats&) const = default;
};

/// Paths run on OpenMP workers; per-path outcomes are reduced in index
/// order, so the result does not depend on the thread count.
HitStats estimate_hit_prob(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                           const SimConfig& cfg);

/// Single-threaded reference of estimate_hit_prob.
HitStats estimate_hit_prob_serial(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                                  const SimConfig& cfg);

Json to_json(const HitStats& s, const SimConfig& cfg);

struct LadderPoint {
    double r = 0.0;
    HitStats stats;
};

struct ScalingFit {
    double slope = 0.0;
    double std_error = 0.0;
    std::vector<LadderPoint> points;
    /// d log p / d log r between consecutive rungs.
    std::vector<double> local_slopes;
    /// Weighted misfit of log p ~ log r and of the logarithmic law 1/p ~ log r.
    double chi2_power = 0.0;
    double chi2_log = 0.0;
    /// False when the logarithmic law fits better: p does not decay like a
    /// power of r.
    bool power_law = true;
};

/// Least-squares slope of log p_hat against log r over a strictly decreasing
/// ladder. Throws ladder_too_deep when some rung sees no inner exit.
ScalingFit recover_exponent_scaling(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                                    const std::vector<double>& r_ladder, const SimConfig& base);

void write_ladder_csv(std::ostream& out, const ScalingFit& fit);
inline constexpr const char* kLadderCsvHeader = "r,p_hat,stderr";

enum class Recurrence { transient, strongly_recurrent, neighborhood_recurrent };
const char* to_string(Recurrence r);

Recurrence classify_recurrence(double alpha_star, double tol);

}  // namespace ellipticfund
