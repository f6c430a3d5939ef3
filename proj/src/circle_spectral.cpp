#include "ellipticfund/circle_spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>
#include <limits>
#include <random>

#include "ellipticfund/canonical_json.hpp"

namespace ellipticfund {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr int kMaxHalvings = 5;
constexpr double kMinAlpha = -1.0 + 1e-3;
constexpr double kBracketPad = 0.05;
// power-branch samples are kept this far from alpha = 0
constexpr double kZeroGuard = 0.02;

double sign_of(double a) { return a < 0.0 ? -1.0 : 1.0; }

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// Shared state of the normalized flow on one grid.
struct CircleGrid {
    int n = 0;
    double h = 0.0;
    std::vector<double> cos_t;
    std::vector<double> sin_t;

    explicit CircleGrid(int n_theta) : n(n_theta), h(kTwoPi / n_theta), cos_t(n_theta), sin_t(n_theta) {
        for (int k = 0; k < n; ++k) {
            cos_t[k] = std::cos(k * h);
            sin_t[k] = std::sin(k * h);
        }
    }
};

SymMatrix rotate_polar(double hrr, double hrt, double htt, double c, double s) {
    SymMatrix m(2);
    m(0, 0) = c * c * hrr - 2.0 * c * s * hrt + s * s * htt;
    m(0, 1) = c * s * hrr + (c * c - s * s) * hrt - c * s * htt;
    m(1, 1) = s * s * hrr + 2.0 * c * s * hrt + c * c * htt;
    return m;
}

void apply_operator(const OperatorSpec& op, const CircleGrid& g, const std::vector<double>& phi, double alpha,
                    Branch branch, std::vector<double>& out) {
    const int n = g.n;
    const double inv2h = 1.0 / (2.0 * g.h);
    const double invh2 = 1.0 / (g.h * g.h);
    for (int k = 0; k < n; ++k) {
        const double p = phi[k];
        const double pm = phi[(k + n - 1) % n];
        const double pp = phi[(k + 1) % n];
        const double d1 = (pp - pm) * inv2h;
        const double d2 = (pp - 2.0 * p + pm) * invh2;
        double hrr, hrt, htt;
        if (branch == Branch::power) {
            hrr = alpha * (alpha + 1.0) * p;
            hrt = -(alpha + 1.0) * d1;
            htt = d2 - alpha * p;
        } else {
            hrr = 1.0;
            hrt = -d1;
            htt = d2 - 1.0;
        }
        out[k] = eval(op, rotate_polar(hrr, hrt, htt, g.cos_t[k], g.sin_t[k]));
    }
}

std::vector<double> initial_profile(const CircleConfig& cfg, Branch branch, double alpha) {
    const int n = cfg.n_theta;
    std::vector<double> phi(static_cast<std::size_t>(n), branch == Branch::power ? 1.0 : 0.0);
    if (cfg.initial) {
        const auto& init = *cfg.initial;
        if (static_cast<int>(init.size()) == n) {
            phi = init;
        } else if (!init.empty()) {
            CircleProfile src{static_cast<int>(init.size()), init, alpha, branch};
            for (int k = 0; k < n; ++k) phi[k] = src.at(kTwoPi * k / n);
        }
    } else if (cfg.init_seed) {
        std::mt19937_64 rng(*cfg.init_seed);
        std::uniform_real_distribution<double> c(-0.15, 0.15);
        double a[3], b[3];
        for (int m = 0; m < 3; ++m) {
            a[m] = c(rng);
            b[m] = c(rng);
        }
        for (int k = 0; k < n; ++k) {
            const double t = kTwoPi * k / n;
            double v = branch == Branch::power ? 1.0 : 0.0;
            for (int m = 0; m < 3; ++m) v += a[m] * std::cos((m + 1) * t) + b[m] * std::sin((m + 1) * t);
            phi[k] = v;
        }
    }
    if (branch == Branch::power) {
        // warm starts are stored as positive shapes; orient them for alpha
        const double s = sign_of(alpha);
        const double lead = std::accumulate(phi.begin(), phi.end(), 0.0);
        if (lead * s < 0.0)
            for (auto& v : phi) v = -v;
    }
    return phi;
}

struct WindowStats {
    double mean = 0.0;
    double var = 0.0;
};

WindowStats trailing_stats(const std::vector<double>& hist) {
    const std::size_t len = std::max<std::size_t>(10, hist.size() / 10);
    const std::size_t start = hist.size() > len ? hist.size() - len : 0;
    WindowStats w;
    const double cnt = static_cast<double>(hist.size() - start);
    for (std::size_t i = start; i < hist.size(); ++i) w.mean += hist[i];
    w.mean /= cnt;
    for (std::size_t i = start; i < hist.size(); ++i) w.var += (hist[i] - w.mean) * (hist[i] - w.mean);
    w.var /= cnt;
    return w;
}

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

EigenEstimate run_flow(const OperatorSpec& op, double alpha, Branch branch, const CircleConfig& cfg) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "circle solver requires a 2-dimensional operator");
    if (!is_power_of_two(cfg.n_theta) || cfg.n_theta < 16)
        fail(ErrorKind::invalid_input, "n_theta must be a power of two >= 16");
    if (branch == Branch::power && (!(alpha > kMinAlpha) || alpha == 0.0))
        fail(ErrorKind::invalid_input, "power branch needs alpha > -1 + 1e-3 and alpha != 0");

    const CircleGrid grid(cfg.n_theta);
    const int n = grid.n;
    const double a = branch == Branch::power ? alpha : 0.0;
    const double sgn = sign_of(a);
    double dt = cfg.dt_safety * grid.h * grid.h / (4.0 * op.declared.Lambda * (1.0 + a * a));

    std::vector<double> phi = initial_profile(cfg, branch, a);
    auto renormalize = [&](std::vector<double>& v) {
        if (branch == Branch::power) {
            double mn = std::numeric_limits<double>::infinity();
            for (double x : v) mn = std::min(mn, sgn * x);
            for (auto& x : v) x /= mn;
            return mn;
        }
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        for (auto& x : v) x -= mean;
        return mean;
    };
    if (branch == Branch::power) {
        for (double x : phi)
            if (!(sgn * x > 0.0)) fail(ErrorKind::invalid_input, "initial profile must satisfy sign(alpha) phi > 0");
    }
    renormalize(phi);

    std::vector<double> g(static_cast<std::size_t>(n));
    std::vector<double> next(static_cast<std::size_t>(n));
    std::vector<double> mu_hist;
    mu_hist.reserve(1 << 16);
    int halvings = 0;

    EigenEstimate est;
    est.alpha = a;
    auto fill_estimate = [&](long it, double mu, double resid, bool conv) {
        est.mu = mu;
        est.eta = branch == Branch::power ? mu / a : mu;
        est.profile = CircleProfile{n, phi, a, branch};
        est.iterations = it;
        est.converged = conv;
        est.residual = resid;
        est.dt = dt;
    };

    for (long it = 0; it < cfg.max_iter; ++it) {
        apply_operator(op, grid, phi, a, branch, g);

        if (it > 0 && it % cfg.check_every == 0) {
            const WindowStats w = trailing_stats(mu_hist);
            double resid = 0.0;
            if (branch == Branch::power) {
                for (int k = 0; k < n; ++k) resid = std::max(resid, std::abs(g[k] - w.mean * phi[k]));
                resid /= max_abs(phi);
            } else {
                for (int k = 0; k < n; ++k) resid = std::max(resid, std::abs(g[k] - w.mean));
            }
            if (resid <= cfg.tol * (1.0 + std::abs(w.mean)) && w.var <= cfg.tol * cfg.tol) {
                fill_estimate(it, w.mean, resid, true);
                return est;
            }
            fill_estimate(it, w.mean, resid, false);
        }

        for (int k = 0; k < n; ++k) next[k] = phi[k] - dt * g[k];
        if (branch == Branch::power) {
            bool positive = true;
            for (double x : next) positive = positive && sgn * x > 0.0;
            if (!positive) {
                if (++halvings > kMaxHalvings)
                    fail(ErrorKind::step_size, "circle flow lost positivity after " + std::to_string(kMaxHalvings) +
                                                   " step halvings");
                dt *= 0.5;
                mu_hist.clear();
                continue;
            }
            const double s = renormalize(next);
            mu_hist.push_back((1.0 - s) / dt);
        } else {
            const double drift = renormalize(next) / -dt;
            mu_hist.push_back(drift);
        }
        phi.swap(next);
    }
    const WindowStats w = mu_hist.empty() ? WindowStats{} : trailing_stats(mu_hist);
    fill_estimate(cfg.max_iter, w.mean, est.residual, false);
    throw EigenConvergenceError("circle flow did not converge within " + std::to_string(cfg.max_iter) +
                                    " iterations (alpha=" + format_double(a) + ")",
                                est);
}

}  // namespace

double CircleProfile::theta(int k) const { return kTwoPi * k / n_theta; }

double CircleProfile::spacing() const { return kTwoPi / n_theta; }

double CircleProfile::at(double t) const {
    const double h = spacing();
    double x = std::fmod(t, kTwoPi);
    if (x < 0.0) x += kTwoPi;
    const double pos = x / h;
    int k = static_cast<int>(std::floor(pos));
    const double f = pos - k;
    const int n = n_theta;
    k %= n;
    const double p0 = values[(k + n - 1) % n];
    const double p1 = values[k];
    const double p2 = values[(k + 1) % n];
    const double p3 = values[(k + 2) % n];
    return p1 + 0.5 * f * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)));
}

double CircleProfile::mean() const {
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double CircleProfile::max_abs() const { return ellipticfund::max_abs(values); }

void CircleProfile::normalize() {
    if (branch == Branch::log) {
        const double m = mean();
        for (auto& v : values) v -= m;
        return;
    }
    const double s = sign_of(alpha);
    double mn = std::numeric_limits<double>::infinity();
    for (double v : values) mn = std::min(mn, s * v);
    for (auto& v : values) v /= mn;
}

double CircleProfile::u(double x, double y) const {
    const double r = std::hypot(x, y);
    const double phi = at(std::atan2(y, x));
    if (branch == Branch::log) return -std::log(r) + phi;
    return std::pow(r, -alpha) * phi;
}

SymMatrix hessian_homogeneous_2d(double phi, double dphi, double ddphi, double alpha, double theta, Branch branch) {
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    if (branch == Branch::log) return rotate_polar(1.0, -dphi, ddphi - 1.0, c, s);
    return rotate_polar(alpha * (alpha + 1.0) * phi, -(alpha + 1.0) * dphi, ddphi - alpha * phi, c, s);
}

std::vector<double> apply_circle_operator(const OperatorSpec& op, const CircleProfile& profile) {
    const CircleGrid grid(profile.n_theta);
    std::vector<double> out(static_cast<std::size_t>(profile.n_theta));
    apply_operator(op, grid, profile.values, profile.alpha, profile.branch, out);
    return out;
}

EigenEstimate eigenpair_at_alpha(const OperatorSpec& op, double alpha, const CircleConfig& cfg) {
    return run_flow(op, alpha, Branch::power, cfg);
}

EigenEstimate eigenpair_log(const OperatorSpec& op, const CircleConfig& cfg) {
    return run_flow(op, 0.0, Branch::log, cfg);
}

namespace {

/// Keeps converged shapes so later alphas start close to their eigenvector.
class WarmStarts {
public:
    void store(const EigenEstimate& e) {
        std::vector<double> shape = e.profile.values;
        const double s = sign_of(e.alpha);
        for (auto& v : shape) v *= s;
        entries_.push_back({e.alpha, std::move(shape)});
    }

    CircleConfig config_for(double alpha, CircleConfig cfg) const {
        if (cfg.init_seed || cfg.initial || entries_.empty()) return cfg;
        const auto best = std::min_element(entries_.begin(), entries_.end(), [&](const auto& x, const auto& y) {
            return std::abs(x.first - alpha) < std::abs(y.first - alpha);
        });
        cfg.initial = best->second;
        return cfg;
    }

private:
    std::vector<std::pair<double, std::vector<double>>> entries_;
};

}  // namespace

Exponent2dDetail exponent_2d_detailed(const OperatorSpec& op, const CircleConfig& cfg) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "exponent_2d requires a 2-dimensional operator");
    const EllipticityPair& p = op.declared;
    double lo = std::max(exponent_lower_bound(p, 2) - kBracketPad, kMinAlpha);
    double hi = exponent_upper_bound(p, 2) + kBracketPad;

    Exponent2dDetail detail;
    WarmStarts warm;
    auto eta_at = [&](double alpha) {
        EigenEstimate e = eigenpair_at_alpha(op, alpha, warm.config_for(alpha, cfg));
        warm.store(e);
        return e;
    };

    // a bracket straddling zero is first split by the log branch
    std::optional<double> eta_zero;
    if (lo < 0.0 && hi > 0.0) {
        CircleConfig log_cfg = cfg;
        log_cfg.initial.reset();
        EigenEstimate e = eigenpair_log(op, log_cfg);
        // the central-difference error in mu is O(h^2); extrapolate it away
        double mu = e.mu;
        if (cfg.n_theta >= 32) {
            CircleConfig coarse = log_cfg;
            coarse.n_theta = cfg.n_theta / 2;
            mu = (4.0 * e.mu - eigenpair_log(op, coarse).mu) / 3.0;
        }
        detail.mu_log = mu;
        if (std::abs(mu) <= cfg.log_tol) {
            detail.result.alpha_star = 0.0;
            detail.result.branch = Branch::log;
            detail.result.method = ExponentMethod::circle_bisection;
            detail.result.residual = std::abs(mu);
            detail.result.bracket_width = 0.0;
            detail.final_estimate = std::move(e);
            return detail;
        }
        eta_zero = mu;
        if (mu > 0.0)
            lo = 0.0;
        else
            hi = 0.0;
    }

    // audit: eta must be nonincreasing across the bracket
    constexpr int kAuditPoints = 9;
    std::vector<EtaSample> samples;
    for (int i = 0; i < kAuditPoints; ++i) {
        double alpha = lo + (hi - lo) * i / (kAuditPoints - 1);
        if (eta_zero && std::abs(alpha) < 1e-15) {
            samples.push_back({0.0, *eta_zero});
            continue;
        }
        if (std::abs(alpha) < kZeroGuard) alpha = alpha < 0.0 || (alpha == 0.0 && hi <= 0.0) ? -kZeroGuard : kZeroGuard;
        samples.push_back({alpha, eta_at(alpha).eta});
    }
    detail.audit = samples;
    for (int i = 1; i < kAuditPoints; ++i) {
        if (samples[i].eta > samples[i - 1].eta + cfg.audit_tol * (1.0 + std::abs(samples[i - 1].eta))) {
            std::string msg = "eta not monotone over the bracket:";
            for (const auto& s : samples) msg += " (" + format_double(s.alpha) + ", " + format_double(s.eta) + ")";
            fail(ErrorKind::bracket, msg);
        }
    }
    int first_nonpos = -1;
    for (int i = 0; i < kAuditPoints; ++i)
        if (samples[i].eta <= 0.0) {
            first_nonpos = i;
            break;
        }
    if (first_nonpos <= 0) {
        std::string msg = "eta does not change sign over the bracket:";
        for (const auto& s : samples) msg += " (" + format_double(s.alpha) + ", " + format_double(s.eta) + ")";
        fail(ErrorKind::bracket, msg);
    }

    double a = samples[first_nonpos - 1].alpha;
    double b = samples[first_nonpos].alpha;
    // the zero guard may have moved a sample; keep the true zero endpoint
    if (eta_zero) {
        if (lo == 0.0 && first_nonpos == 1) a = 0.0;
        if (hi == 0.0 && first_nonpos == kAuditPoints - 1) b = 0.0;
    }
    // Illinois false position inside the bracket, then a final bracket of
    // width alpha_tol around the estimate
    double fa = samples[first_nonpos - 1].eta;
    double fb = samples[first_nonpos].eta;
    if (eta_zero && a == 0.0) fa = *eta_zero;
    if (eta_zero && b == 0.0) fb = *eta_zero;
    std::optional<EigenEstimate> fin;
    double root = 0.5 * (a + b);
    double prev = std::numeric_limits<double>::infinity();
    int side = 0;
    for (int it = 0; it < 100 && b - a > cfg.alpha_tol; ++it) {
        double x = (a * fb - b * fa) / (fb - fa);
        if (!(x > a && x < b) || x == 0.0) x = 0.5 * (a + b);
        EigenEstimate e = eta_at(x);
        root = x;
        const bool done = std::abs(x - prev) <= 0.25 * cfg.alpha_tol;
        prev = x;
        if (e.eta > 0.0) {
            a = x;
            fa = e.eta;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = x;
            fb = e.eta;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
        fin = std::move(e);
        if (done) break;
    }
    if (b - a > cfg.alpha_tol) {
        const double lo_probe = std::max(a, root - 0.5 * cfg.alpha_tol);
        const double hi_probe = std::min(b, root + 0.5 * cfg.alpha_tol);
        if (lo_probe != 0.0 && lo_probe > a && eta_at(lo_probe).eta > 0.0) a = lo_probe;
        if (hi_probe != 0.0 && hi_probe < b && eta_at(hi_probe).eta <= 0.0) b = hi_probe;
    }
    if (!fin) fin = root == 0.0 ? eigenpair_log(op, cfg) : eta_at(root);
    detail.result.alpha_star = root;
    detail.result.branch = Branch::power;
    detail.result.method = ExponentMethod::circle_bisection;
    detail.result.residual = std::abs(fin->mu);
    detail.result.bracket_width = b - a;
    detail.final_estimate = std::move(*fin);
    return detail;
}

ExponentResult exponent_2d(const OperatorSpec& op, const CircleConfig& cfg) { return exponent_2d_detailed(op, cfg).result; }

CircleProfile fundamental_profile_2d(const OperatorSpec& op, const ExponentResult& result, const CircleConfig& cfg) {
    EigenEstimate e = result.branch == Branch::log ? eigenpair_log(op, cfg) : eigenpair_at_alpha(op, result.alpha_star, cfg);
    CircleProfile prof = std::move(e.profile);
    prof.normalize();
    const std::vector<double> g = apply_circle_operator(op, prof);
    const double scale = std::max(1.0, prof.max_abs());
    double resid = 0.0;
    for (double v : g) resid = std::max(resid, std::abs(v));
    if (resid > 1e-3 * scale)
        throw EigenConvergenceError("fundamental profile residual " + format_double(resid) + " exceeds 1e-3 scale", e);
    return prof;
}

void write_profile_csv(std::ostream& out, const CircleProfile& profile, const std::vector<double>& residual,
                       const std::string& operator_hash) {
    out << "# alpha=" << format_double(profile.alpha) << "\n";
    out << "# branch=" << to_string(profile.branch) << "\n";
    out << "# operator_hash=" << operator_hash << "\n";
    out << kProfileCsvHeader << "\n";
    for (int k = 0; k < profile.n_theta; ++k) {
        out << format_double(profile.theta(k)) << ',' << format_double(profile.values[k]) << ','
            << format_double(k < static_cast<int>(residual.size()) ? residual[k] : 0.0) << "\n";
    }
}

}  // namespace ellipticfund
