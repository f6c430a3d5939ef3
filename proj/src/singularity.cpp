#include "ellipticfund/singularity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ellipticfund/error.hpp"

namespace ellipticfund {

PlaneFunction field_function(const Field& field) {
    return [&field](double x, double y) { return field.sample(x, y); };
}

std::vector<RadialRow> radial_stats(const PlaneFunction& u, const PlaneFunction& phi, const std::vector<double>& radii,
                                    int n_angles, bool strict) {
    if (n_angles < 4) fail(ErrorKind::invalid_input, "radial_stats needs at least 4 angles");
    std::vector<RadialRow> rows;
    rows.reserve(radii.size());
    for (double r : radii) {
        if (!(r > 0.0)) fail(ErrorKind::invalid_input, "radii must be positive");
        RadialRow row;
        row.r = r;
        row.m = std::numeric_limits<double>::infinity();
        row.M = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        bool ratio_ok = true;
        for (int k = 0; k < n_angles; ++k) {
            const double t = 2.0 * std::numbers::pi * k / n_angles;
            const double x = r * std::cos(t);
            const double y = r * std::sin(t);
            const double v = u(x, y);
            row.m = std::min(row.m, v);
            row.M = std::max(row.M, v);
            const double p = phi(x, y);
            if (std::abs(p) <= 1e-300 || !std::isfinite(p)) {
                ratio_ok = false;
                continue;
            }
            lo = std::min(lo, v / p);
            hi = std::max(hi, v / p);
        }
        if (ratio_ok) {
            row.rho = lo;
            row.rhobar = hi;
        } else if (strict) {
            fail(ErrorKind::undefined_ratio, "Phi vanishes on the circle r = " + format_double(r));
        }
        if (row.m > 0.0) row.harnack_ratio = row.M / row.m;
        rows.push_back(row);
    }
    return rows;
}

const char* to_string(Singularity s) {
    switch (s) {
        case Singularity::removable: return "removable";
        case Singularity::plus_phi: return "plus_phi";
        case Singularity::minus_phi_tilde: return "minus_phi_tilde";
        case Singularity::neg_interior_phi: return "neg_interior_phi";
        case Singularity::neg_interior_phi_tilde: return "neg_interior_phi_tilde";
        case Singularity::finite_limit: return "finite_limit";
        case Singularity::decay_phi: return "decay_phi";
        case Singularity::decay_phi_tilde: return "decay_phi_tilde";
        case Singularity::grow_phi: return "grow_phi";
        case Singularity::grow_phi_tilde: return "grow_phi_tilde";
    }
    return "?";
}

const char* to_string(Confidence c) { return c == Confidence::clear ? "clear" : "marginal"; }

Json to_json(const SingularityReport& rep) {
    Json curves = Json::array();
    for (const auto& row : rep.curves) {
        curves.push_back({{"r", row.r},
                          {"m", row.m},
                          {"M", row.M},
                          {"rho", row.rho ? Json(*row.rho) : Json(nullptr)},
                          {"rhobar", row.rhobar ? Json(*row.rhobar) : Json(nullptr)}});
    }
    return {{"at", rep.at_origin ? "origin" : "infinity"},
            {"case", to_string(rep.kind)},
            {"alternative", rep.alternative},
            {"a_est", rep.a_est ? Json(*rep.a_est) : Json(nullptr)},
            {"limit", rep.limit ? Json(*rep.limit) : Json(nullptr)},
            {"confidence", to_string(rep.confidence)},
            {"fit_residual", rep.fit_residual},
            {"curves", curves}};
}

namespace {

struct Fit {
    double a = 0.0;
    double b = 0.0;
    double rel_residual = std::numeric_limits<double>::infinity();
    bool valid = false;
};

/// Least squares u ~ a psi + b over the tail rings.
Fit fit_against(const PlaneFunction& u, const PlaneFunction& psi, const std::vector<double>& radii, int n_angles,
                double fit_tol) {
    std::vector<double> us, ps;
    for (double r : radii)
        for (int k = 0; k < n_angles; ++k) {
            const double t = 2.0 * std::numbers::pi * k / n_angles;
            us.push_back(u(r * std::cos(t), r * std::sin(t)));
            ps.push_back(psi(r * std::cos(t), r * std::sin(t)));
        }
    const double n = static_cast<double>(us.size());
    double mu = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i) {
        mu += us[i];
        mp += ps[i];
    }
    mu /= n;
    mp /= n;
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i) {
        cov += (us[i] - mu) * (ps[i] - mp);
        var += (ps[i] - mp) * (ps[i] - mp);
    }
    Fit f;
    if (!(var > 0.0) || !std::isfinite(var)) return f;
    f.a = cov / var;
    f.b = mu - f.a * mp;
    double ss = 0.0;
    for (std::size_t i = 0; i < us.size(); ++i) {
        const double e = us[i] - f.a * ps[i] - f.b;
        ss += e * e;
    }
    const double explained = std::abs(f.a) * std::sqrt(var / n);
    f.rel_residual = explained > 0.0 ? std::sqrt(ss / n) / explained : std::numeric_limits<double>::infinity();
    f.valid = f.a > 0.0 && f.rel_residual <= fit_tol;
    return f;
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/// Increments that neither vanish nor decay, in the direction `sign`.
bool runs_away(const std::vector<double>& v, double sign) {
    std::vector<double> inc;
    for (std::size_t i = 1; i < v.size(); ++i) inc.push_back(sign * (v[i] - v[i - 1]));
    const double scale = 1e-9 * (1.0 + std::abs(v.back()));
    for (double d : inc)
        if (!(d > scale)) return false;
    return inc.back() >= 0.5 * inc.front();
}

SingularityReport classify(const ClassifierInput& in, const ClassifierConfig& cfg, bool origin) {
    if (!in.u || !in.phi || !in.phi_tilde) fail(ErrorKind::invalid_input, "classifier needs u, Phi and Phi~");
    if (cfg.tail < 3 || cfg.k_max - cfg.k_min + 1 < cfg.tail)
        fail(ErrorKind::invalid_input, "ladder shorter than the classifier tail");
    std::vector<double> radii;
    for (int k = cfg.k_min; k <= cfg.k_max; ++k) {
        const double r = origin ? std::ldexp(1.0, -k) : std::ldexp(1.0, k);
        if (origin && r < cfg.min_radius) continue;
        if (!origin && cfg.max_radius > 0.0 && r > cfg.max_radius) continue;
        radii.push_back(r);
    }
    if (static_cast<int>(radii.size()) < cfg.tail)
        fail(ErrorKind::invalid_input, "too few rings left after the radius limits");

    SingularityReport rep;
    rep.at_origin = origin;
    rep.curves = radial_stats(in.u, in.phi, radii, cfg.n_angles, false);

    const std::vector<double> tail_r(radii.end() - cfg.tail, radii.end());
    std::vector<double> tm, tM, logr;
    for (std::size_t i = rep.curves.size() - cfg.tail; i < rep.curves.size(); ++i) {
        tm.push_back(rep.curves[i].m);
        tM.push_back(rep.curves[i].M);
        logr.push_back(std::log(rep.curves[i].r));
    }
    if (runs_away(tM, 1.0) && runs_away(tm, -1.0))
        fail(ErrorKind::invalid_input, "u is unbounded above and below on the ladder; outside the hypotheses");

    const PlaneFunction minus_tilde = [&](double x, double y) { return -in.phi_tilde(x, y); };
    const Fit f1 = fit_against(in.u, in.phi, tail_r, cfg.n_angles, cfg.fit_tol);
    const Fit f2 = fit_against(in.u, minus_tilde, tail_r, cfg.n_angles, cfg.fit_tol);

    const Fit* best = nullptr;
    bool tilde = false;
    if (f1.valid && (!f2.valid || f1.rel_residual <= f2.rel_residual)) {
        best = &f1;
    } else if (f2.valid) {
        best = &f2;
        tilde = true;
    }

    if (best) {
        const double alpha = tilde ? in.alpha_star_tilde : in.alpha_star;
        rep.a_est = best->a;
        rep.fit_residual = best->rel_residual;
        if (origin) {
            const bool nonneg = alpha >= -cfg.zero_tol;
            if (nonneg) {
                rep.kind = tilde ? Singularity::minus_phi_tilde : Singularity::plus_phi;
                rep.alternative = tilde ? 3 : 2;
            } else {
                rep.kind = tilde ? Singularity::neg_interior_phi_tilde : Singularity::neg_interior_phi;
                rep.alternative = tilde ? 5 : 4;
                rep.limit = best->b;
            }
        } else {
            const bool positive = alpha > cfg.zero_tol;
            if (positive) {
                rep.kind = tilde ? Singularity::decay_phi_tilde : Singularity::decay_phi;
                rep.alternative = tilde ? 3 : 2;
                rep.limit = best->b;
            } else {
                rep.kind = tilde ? Singularity::grow_phi_tilde : Singularity::grow_phi;
                rep.alternative = tilde ? 5 : 4;
            }
        }
        rep.confidence = best->rel_residual > 0.5 * cfg.fit_tol ? Confidence::marginal : Confidence::clear;
        return rep;
    }

    // bounded alternatives: m and M settle to a common value
    const double sm = std::abs(ls_slope(logr, tm));
    const double sM = std::abs(ls_slope(logr, tM));
    const double osc_first = tM.front() - tm.front();
    const double osc_last = tM.back() - tm.back();
    const double worst = std::max(sm, sM);
    if (worst < cfg.slope_tol && osc_last <= osc_first + 1e-12 * (1.0 + std::abs(tM.back()))) {
        rep.kind = origin ? Singularity::removable : Singularity::finite_limit;
        rep.alternative = 1;
        rep.limit = 0.5 * (tm.back() + tM.back());
        rep.fit_residual = worst;
        rep.confidence = worst > 0.5 * cfg.slope_tol ? Confidence::marginal : Confidence::clear;
        return rep;
    }
    fail(ErrorKind::classification,
         "no alternative fits: Phi fit residual " + format_double(f1.rel_residual) + " (a=" + format_double(f1.a) +
             "), -Phi~ fit residual " + format_double(f2.rel_residual) + " (a=" + format_double(f2.a) +
             "), tail slopes " + format_double(sm) + ", " + format_double(sM));
}

}  // namespace

SingularityReport classify_origin(const ClassifierInput& in, const ClassifierConfig& cfg) {
    return classify(in, cfg, true);
}

SingularityReport classify_infinity(const ClassifierInput& in, const ClassifierConfig& cfg) {
    return classify(in, cfg, false);
}

}  // namespace ellipticfund
