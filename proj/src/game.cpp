#include "ellipticfund/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "ellipticfund/error.hpp"
#include "ellipticfund/parallel.hpp"

namespace ellipticfund {

SymMatrix GameSpec::diffusion(int a, int b) const {
    const auto& s = sigma_at(a, b);
    SymMatrix d(dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) {
            double v = 0.0;
            for (int k = 0; k < noise_dim; ++k) v += s[i * noise_dim + k] * s[j * noise_dim + k];
            d(i, j) = 0.5 * v;
        }
    return d;
}

void validate(const GameSpec& game) {
    game.declared.validate();
    if (game.dim < kMinDim || game.dim > kMaxDim) fail(ErrorKind::invalid_input, "game.dim must be in [2, 8]");
    if (game.noise_dim < 1 || game.noise_dim > game.dim)
        fail(ErrorKind::invalid_input, "game.noise_dim must be in [1, dim]");
    if (game.n_a < 1 || game.n_b < 1) fail(ErrorKind::invalid_input, "game controls must be nonempty");
    if (game.sigma.size() != static_cast<std::size_t>(game.n_a * game.n_b))
        fail(ErrorKind::invalid_input, "game.sigma needs one matrix per control pair");
    for (int a = 0; a < game.n_a; ++a)
        for (int b = 0; b < game.n_b; ++b) {
            const std::string where = "game.sigma[" + std::to_string(a) + "][" + std::to_string(b) + "]";
            if (game.sigma_at(a, b).size() != static_cast<std::size_t>(game.dim * game.noise_dim))
                fail(ErrorKind::invalid_input, where + " has the wrong shape");
            for (double v : game.sigma_at(a, b))
                if (!std::isfinite(v)) fail(ErrorKind::invalid_input, where + " is not finite");
            const auto ev = eigenvalues_sym(game.diffusion(a, b));
            const double tol = 1e-12 * (1.0 + game.declared.Lambda);
            if (ev.front() < game.declared.lambda - tol || ev.back() > game.declared.Lambda + tol)
                fail(ErrorKind::invalid_input, where + ": D = sigma sigma^T / 2 has eigenvalues outside [lambda, Lambda]");
        }
}

GameSpec make_game_from_diffusions(int n_a, int n_b, const std::vector<SymMatrix>& diffusions, EllipticityPair pair) {
    if (diffusions.empty() || diffusions.size() != static_cast<std::size_t>(n_a * n_b))
        fail(ErrorKind::invalid_input, "need n_a * n_b diffusion matrices");
    GameSpec g;
    g.dim = diffusions.front().dim();
    g.noise_dim = g.dim;
    g.n_a = n_a;
    g.n_b = n_b;
    g.declared = pair;
    for (const auto& d : diffusions) {
        if (d.dim() != g.dim) fail(ErrorKind::invalid_input, "diffusion matrices differ in dimension");
        const SymEigen e = eigen_decompose(d);
        const int n = g.dim;
        std::vector<double> s(static_cast<std::size_t>(n * n), 0.0);
        for (int k = 0; k < n; ++k) {
            const double root = std::sqrt(2.0 * std::max(e.values[k], 0.0));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) s[i * n + j] += root * e.vectors[k * n + i] * e.vectors[k * n + j];
        }
        g.sigma.push_back(std::move(s));
    }
    validate(g);
    return g;
}

GameSpec brownian_game(int n) {
    return make_game_from_diffusions(1, 1, {SymMatrix::identity(n)}, EllipticityPair{1.0, 1.0});
}

GameSpec pucci_game_2d(EllipticityPair pair, int n_dirs, int controller) {
    pair.validate();
    if (n_dirs < 1) fail(ErrorKind::invalid_input, "n_dirs must be positive");
    if (controller != 1 && controller != 2) fail(ErrorKind::invalid_input, "controller must be 1 or 2");
    std::vector<SymMatrix> ds{SymMatrix::identity(2) * pair.lambda, SymMatrix::identity(2) * pair.Lambda};
    for (int m = 0; m < n_dirs; ++m) {
        const double t = std::numbers::pi * m / n_dirs;
        const double e[2] = {std::cos(t), std::sin(t)};
        ds.push_back(SymMatrix::identity(2) * pair.lambda + SymMatrix::outer(e) * (pair.Lambda - pair.lambda));
    }
    const int k = static_cast<int>(ds.size());
    return controller == 1 ? make_game_from_diffusions(k, 1, ds, pair) : make_game_from_diffusions(1, k, ds, pair);
}

const char* to_string(IsaacsConvention c) { return c == IsaacsConvention::upper ? "upper" : "lower"; }

namespace {

/// Families indexed by the outer player, members by the inner one; the
/// entries are the diffusions themselves since F = -trace(D M).
std::vector<MatrixFamily> families(const GameSpec& game, bool outer_is_a) {
    std::vector<MatrixFamily> fams;
    const int no = outer_is_a ? game.n_a : game.n_b;
    const int ni = outer_is_a ? game.n_b : game.n_a;
    for (int o = 0; o < no; ++o) {
        MatrixFamily f;
        for (int i = 0; i < ni; ++i) f.push_back(outer_is_a ? game.diffusion(o, i) : game.diffusion(i, o));
        fams.push_back(std::move(f));
    }
    return fams;
}

}  // namespace

OperatorSpec build_isaacs_from_controls(const GameSpec& game, IsaacsConvention convention) {
    validate(game);
    // -min_a max_b tr = sup_a inf_b (-tr); -max_b min_a tr = inf_b sup_a (-tr)
    if (convention == IsaacsConvention::upper) return make_sup_inf(families(game, true), game.declared);
    return make_inf_sup(families(game, false), game.declared);
}

OperatorSpec value_operator(const GameSpec& game, IsaacsConvention convention) {
    validate(game);
    // -min_b max_a tr = sup_b inf_a (-tr); -max_a min_b tr = inf_a sup_b (-tr)
    if (convention == IsaacsConvention::upper) return make_sup_inf(families(game, false), game.declared);
    return make_inf_sup(families(game, true), game.declared);
}

const char* to_string(PolicyKind k) {
    switch (k) {
        case PolicyKind::argmax_drift: return "argmax_drift";
        case PolicyKind::argmin_drift: return "argmin_drift";
        case PolicyKind::fixed: return "fixed";
    }
    return "?";
}

FeedbackPolicy optimal_feedback_policy(const GameSpec& game, HessianFn hessian, Player player) {
    validate(game);
    if (!hessian) fail(ErrorKind::invalid_input, "policy needs a Hessian");
    std::vector<SymMatrix> ds;
    for (int a = 0; a < game.n_a; ++a)
        for (int b = 0; b < game.n_b; ++b) ds.push_back(game.diffusion(a, b));
    const int na = game.n_a;
    const int nb = game.n_b;
    FeedbackPolicy p;
    if (player == Player::one) {
        p.kind = PolicyKind::argmax_drift;
        p.rule = [ds, na, nb, hessian](std::span<const double> x) {
            const SymMatrix h = hessian(x);
            int best = 0;
            double best_v = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < na; ++a) {
                double worst = std::numeric_limits<double>::infinity();
                for (int b = 0; b < nb; ++b) worst = std::min(worst, ds[a * nb + b].trace_product(h));
                if (worst > best_v) {
                    best_v = worst;
                    best = a;
                }
            }
            return best;
        };
    } else {
        p.kind = PolicyKind::argmin_drift;
        p.rule = [ds, na, nb, hessian](std::span<const double> x) {
            const SymMatrix h = hessian(x);
            int best = 0;
            double best_v = std::numeric_limits<double>::infinity();
            for (int b = 0; b < nb; ++b) {
                double worst = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < na; ++a) worst = std::max(worst, ds[a * nb + b].trace_product(h));
                if (worst < best_v) {
                    best_v = worst;
                    best = b;
                }
            }
            return best;
        };
    }
    return p;
}

FeedbackPolicy fixed_policy(int index) {
    if (index < 0) fail(ErrorKind::invalid_input, "control index must be nonnegative");
    FeedbackPolicy p;
    p.kind = PolicyKind::fixed;
    p.fixed_index = index;
    p.rule = [index](std::span<const double>) { return index; };
    return p;
}

namespace {

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

double max_time_of(const SimConfig& cfg, const GameSpec& game) {
    return cfg.max_time ? *cfg.max_time : 1e3 * cfg.R * cfg.R / game.declared.lambda;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void validate(const SimConfig& cfg, const GameSpec& game) {
    if (!(cfg.r > 0.0) || !(cfg.R > cfg.r) || !std::isfinite(cfg.R))
        fail(ErrorKind::invalid_input, "sim config needs 0 < r < R");
    if (cfg.x0.size() != static_cast<std::size_t>(game.dim))
        fail(ErrorKind::invalid_input, "x0 must have the game dimension");
    const double rho = norm(cfg.x0);
    if (rho < cfg.r - 1e-12 || rho > cfg.R + 1e-12)
        fail(ErrorKind::invalid_input, "x0 must satisfy r <= |x0| <= R");
    if (!(cfg.dt_base > 0.0) || cfg.dt_base > (cfg.R - cfg.r) * (cfg.R - cfg.r) / 100.0)
        fail(ErrorKind::invalid_input, "dt_base must lie in (0, (R - r)^2 / 100]");
    if (!(cfg.step_factor > 0.0) || cfg.step_factor > 1.0)
        fail(ErrorKind::invalid_input, "step_factor must lie in (0, 1]");
    if (cfg.n_paths < 100) fail(ErrorKind::invalid_input, "n_paths must be at least 100");
    if (cfg.max_time && !(*cfg.max_time > 0.0)) fail(ErrorKind::invalid_input, "max_time must be positive");
}

const char* to_string(ExitSide s) {
    switch (s) {
        case ExitSide::inner: return "inner";
        case ExitSide::outer: return "outer";
        case ExitSide::timeout: return "timeout";
    }
    return "?";
}

std::uint64_t path_seed(std::uint64_t master_seed, std::uint64_t path_index) {
    return splitmix64(splitmix64(master_seed) ^ path_index);
}

ExitOutcome simulate_exit(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                          const SimConfig& cfg, long path_index) {
    if (path_index < 0 || path_index >= cfg.n_paths) fail(ErrorKind::invalid_input, "path index out of range");
    const int n = game.dim;
    const int d = game.noise_dim;
    std::mt19937_64 rng(path_seed(cfg.master_seed, static_cast<std::uint64_t>(path_index)));
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> x = cfg.x0;
    std::vector<double> z(static_cast<std::size_t>(d));
    const double t_max = max_time_of(cfg, game);
    const double dt_floor = 1e-6 * cfg.dt_base;
    const double spread = 4.0 * game.declared.Lambda * n / cfg.step_factor;
    double t = 0.0;
    double rho = norm(x);
    if (rho <= cfg.r) return {ExitSide::inner, 0.0};
    if (rho >= cfg.R) return {ExitSide::outer, 0.0};
    while (t < t_max) {
        const double dist = std::min(rho - cfg.r, cfg.R - rho);
        const double dt = std::max(std::min(cfg.dt_base, dist * dist / spread), dt_floor);
        const int a = pol_one(x);
        const int b = pol_two(x);
        const auto& s = game.sigma_at(a, b);
        const double sq = std::sqrt(dt);
        for (auto& v : z) v = normal(rng);
        for (int i = 0; i < n; ++i) {
            double inc = 0.0;
            for (int k = 0; k < d; ++k) inc += s[i * d + k] * z[k];
            x[i] += sq * inc;
        }
        const double next = norm(x);
        if (next <= cfg.r) return {ExitSide::inner, t + dt * (rho - cfg.r) / (rho - next)};
        if (next >= cfg.R) return {ExitSide::outer, t + dt * (cfg.R - rho) / (next - rho)};
        rho = next;
        t += dt;
    }
    return {ExitSide::timeout, t};
}

namespace {

HitStats aggregate(const std::vector<ExitOutcome>& out) {
    HitStats s;
    // compensated sum in index order keeps the mean independent of scheduling
    double sum = 0.0, comp = 0.0;
    for (const auto& o : out) {
        if (o.side == ExitSide::timeout) {
            ++s.n_timeout;
            continue;
        }
        if (o.side == ExitSide::inner)
            ++s.n_inner;
        else
            ++s.n_outer;
        const double y = o.time - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    const long exited = s.n_inner + s.n_outer;
    if (exited > 0) {
        s.p_hat = static_cast<double>(s.n_inner) / static_cast<double>(exited);
        s.std_error = std::sqrt(s.p_hat * (1.0 - s.p_hat) / static_cast<double>(exited));
        s.mean_exit_time = sum / static_cast<double>(exited);
    }
    if (10 * s.n_timeout > static_cast<long>(out.size()))
        s.warning = "more than 10% of paths timed out (" + std::to_string(s.n_timeout) + " of " +
                    std::to_string(out.size()) + ")";
    return s;
}

}  // namespace

HitStats estimate_hit_prob_serial(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                                  const SimConfig& cfg) {
    validate(game);
    validate(cfg, game);
    std::vector<ExitOutcome> out(static_cast<std::size_t>(cfg.n_paths));
    for (long i = 0; i < cfg.n_paths; ++i) out[i] = simulate_exit(game, pol_one, pol_two, cfg, i);
    return aggregate(out);
}

HitStats estimate_hit_prob(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                           const SimConfig& cfg) {
    validate(game);
    validate(cfg, game);
    std::vector<ExitOutcome> out(static_cast<std::size_t>(cfg.n_paths));
#pragma omp parallel for schedule(dynamic, 64) num_threads(worker_threads())
    for (long i = 0; i < cfg.n_paths; ++i) out[i] = simulate_exit(game, pol_one, pol_two, cfg, i);
    return aggregate(out);
}

Json to_json(const HitStats& s, const SimConfig& cfg) {
    Json j{{"p_hat", s.p_hat},
           {"stderr", s.std_error},
           {"n_inner", s.n_inner},
           {"n_outer", s.n_outer},
           {"n_timeout", s.n_timeout},
           {"mean_exit_time", s.mean_exit_time},
           {"config",
            {{"r", cfg.r},
             {"R", cfg.R},
             {"x0", cfg.x0},
             {"dt_base", cfg.dt_base},
             {"step_factor", cfg.step_factor},
             {"n_paths", cfg.n_paths},
             {"seed", cfg.master_seed},
             {"max_time", cfg.max_time ? Json(*cfg.max_time) : Json(nullptr)}}}};
    if (s.warning) j["warning"] = *s.warning;
    return j;
}

namespace {

double weighted_line_chi2(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& w) {
    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    const double b = sxy / sxx;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - my - b * (x[i] - mx);
        chi2 += w[i] * e * e;
    }
    return chi2;
}

}  // namespace

ScalingFit recover_exponent_scaling(const GameSpec& game, const FeedbackPolicy& pol_one, const FeedbackPolicy& pol_two,
                                    const std::vector<double>& r_ladder, const SimConfig& base) {
    if (r_ladder.size() < 3) fail(ErrorKind::invalid_input, "ladder needs at least 3 radii");
    for (std::size_t i = 1; i < r_ladder.size(); ++i)
        if (!(r_ladder[i] < r_ladder[i - 1])) fail(ErrorKind::invalid_input, "ladder must be strictly decreasing");
    ScalingFit fit;
    std::vector<double> lx, ly;
    for (double r : r_ladder) {
        SimConfig cfg = base;
        cfg.r = r;
        const HitStats s = estimate_hit_prob(game, pol_one, pol_two, cfg);
        if (s.n_inner == 0)
            fail(ErrorKind::ladder_too_deep, "no path reached r = " + format_double(r) + "; use more paths or a shallower ladder");
        fit.points.push_back({r, s});
        lx.push_back(std::log(r));
        ly.push_back(std::log(s.p_hat));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    fit.slope = sxy / sxx;
    const double icpt = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double e = ly[i] - icpt - fit.slope * lx[i];
        sse += e * e;
    }
    fit.std_error = std::sqrt(sse / (n - 2.0) / sxx);
    for (std::size_t i = 1; i < lx.size(); ++i) fit.local_slopes.push_back((ly[i] - ly[i - 1]) / (lx[i] - lx[i - 1]));
    // Competing logarithmic law: 1/p is affine in log r when alpha* = 0.
    std::vector<double> wp, yl, wl;
    for (const auto& pt : fit.points) {
        const double p = pt.stats.p_hat;
        const double se = std::max(pt.stats.std_error, 1e-12);
        wp.push_back(p * p / (se * se));
        yl.push_back(1.0 / p);
        wl.push_back(p * p * p * p / (se * se));
    }
    fit.chi2_power = weighted_line_chi2(lx, ly, wp);
    fit.chi2_log = weighted_line_chi2(lx, yl, wl);
    fit.power_law = fit.chi2_power <= fit.chi2_log;
    return fit;
}

void write_ladder_csv(std::ostream& out, const ScalingFit& fit) {
    out << kLadderCsvHeader << "\n";
    for (const auto& p : fit.points)
        out << format_double(p.r) << ',' << format_double(p.stats.p_hat) << ',' << format_double(p.stats.std_error)
            << "\n";
}

const char* to_string(Recurrence r) {
    switch (r) {
        case Recurrence::transient: return "transient";
        case Recurrence::strongly_recurrent: return "strongly_recurrent";
        case Recurrence::neighborhood_recurrent: return "neighborhood_recurrent";
    }
    return "?";
}

Recurrence classify_recurrence(double alpha_star, double tol) {
    if (!(tol >= 0.0)) fail(ErrorKind::invalid_input, "tolerance must be nonnegative");
    if (std::abs(alpha_star) <= tol) return Recurrence::neighborhood_recurrent;
    return alpha_star > 0.0 ? Recurrence::transient : Recurrence::strongly_recurrent;
}

}  // namespace ellipticfund
