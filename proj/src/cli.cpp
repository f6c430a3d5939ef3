#include "ellipticfund/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ellipticfund/annulus.hpp"
#include "ellipticfund/circle_spectral.hpp"
#include "ellipticfund/game.hpp"
#include "ellipticfund/operator_json.hpp"
#include "ellipticfund/radial.hpp"
#include "ellipticfund/singularity.hpp"

namespace ellipticfund {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io: return kExitIo;
        case ErrorKind::invalid_input:
        case ErrorKind::decomposition:
        case ErrorKind::undefined_ratio:
        case ErrorKind::ladder_too_deep: return kExitInvalid;
        case ErrorKind::classification: return kExitInconclusive;
        case ErrorKind::convergence:
        case ErrorKind::step_size:
        case ErrorKind::bracket:
        case ErrorKind::internal: return kExitNonConvergence;
    }
    return kExitNonConvergence;
}

namespace {

EllipticityPair builtin_pair(const RunConfig& cfg) {
    EllipticityPair p{cfg.lambda.value_or(1.0), cfg.Lambda.value_or(2.0)};
    p.validate();
    return p;
}

}  // namespace

OperatorSpec load_operator_spec(const RunConfig& cfg, std::vector<std::string>& warnings) {
    if (cfg.spec_file && !cfg.op.empty()) fail(ErrorKind::invalid_input, "pass either --op or --spec-file, not both");
    OperatorSpec op;
    if (cfg.spec_file) {
        op = load_operator_file(*cfg.spec_file);
    } else if (cfg.op == "pucci+") {
        op = make_pucci_plus(builtin_pair(cfg), cfg.dim);
    } else if (cfg.op == "pucci-") {
        op = make_pucci_minus(builtin_pair(cfg), cfg.dim);
    } else if (cfg.op == "laplacian") {
        op = make_laplacian(cfg.dim);
    } else if (cfg.op == "linear") {
        std::vector<double> d = cfg.diag.empty() ? std::vector<double>(static_cast<std::size_t>(cfg.dim), 1.0) : cfg.diag;
        if (static_cast<int>(d.size()) != cfg.dim) fail(ErrorKind::invalid_input, "--diag needs dim entries");
        const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
        const EllipticityPair p{cfg.lambda.value_or(*lo), cfg.Lambda.value_or(*hi)};
        op = make_linear(SymMatrix::diagonal(d), p);
    } else if (cfg.op == "f1") {
        op = make_f1(builtin_pair(cfg), cfg.dim);
    } else if (cfg.op == "f2") {
        op = make_f2(builtin_pair(cfg), cfg.dim);
    } else if (cfg.op.empty()) {
        fail(ErrorKind::invalid_input, "no operator: pass --op or --spec-file");
    } else {
        fail(ErrorKind::invalid_input, "unknown builtin operator '" + cfg.op + "'");
    }
    const StructureReport smoke = verify_h1_h2(op, op.declared, 100, cfg.seed);
    if (!smoke.h1_pass || !smoke.h2_pass)
        warnings.push_back("declared ellipticity failed the H1/H2 smoke check (worst violation " +
                           format_double(smoke.worst_violation) + ")");
    return op;
}

std::optional<double> builtin_closed_form(const RunConfig& cfg) {
    if (cfg.spec_file) return std::nullopt;
    const double n = cfg.dim;
    if (cfg.op == "laplacian" || cfg.op == "linear") return n - 2.0;
    if (cfg.op != "pucci+" && cfg.op != "pucci-" && cfg.op != "f1" && cfg.op != "f2") return std::nullopt;
    const EllipticityPair p = builtin_pair(cfg);
    if (cfg.op == "pucci+") return p.Lambda / p.lambda * (n - 1) - 1.0;
    if (cfg.op == "pucci-") return p.lambda / p.Lambda * (n - 1) - 1.0;
    if (cfg.op == "f1") return p.lambda / p.Lambda * (n - 2);
    return p.Lambda / p.lambda * (n - 2);
}

namespace {

Json to_json(const ExponentResult& r) {
    return {{"alpha_star", r.alpha_star},
            {"branch", to_string(r.branch)},
            {"a_tilde", r.a_tilde ? Json(*r.a_tilde) : Json(nullptr)},
            {"method", to_string(r.method)},
            {"residual", r.residual},
            {"bracket_width", r.bracket_width}};
}

CircleConfig circle_config(const RunConfig& cfg) {
    CircleConfig c;
    c.n_theta = cfg.ntheta;
    if (cfg.tol) c.alpha_tol = *cfg.tol;
    return c;
}

struct ExponentRun {
    ExponentResult result;
    std::optional<Exponent2dDetail> detail;
};

ExponentRun compute_exponent(const OperatorSpec& op, const RunConfig& cfg) {
    if (cfg.method != "auto" && cfg.method != "rotinv" && cfg.method != "circle")
        fail(ErrorKind::invalid_input, "--method must be auto, rotinv or circle");
    bool rotinv = cfg.method == "rotinv";
    if (cfg.method == "auto") rotinv = is_rotationally_symmetric(op, 64, 0x5eed).symmetric;
    if (rotinv) return {exponent_rotinv(op), std::nullopt};
    if (op.dim != 2) fail(ErrorKind::invalid_input, "the circle solver needs dim 2 (operator is not rotationally invariant)");
    Exponent2dDetail d = exponent_2d_detailed(op, circle_config(cfg));
    return {d.result, d};
}

/// Phi on the plane plus its exponent; radial when the exponent came from
/// the rotationally invariant path.
struct Fundamental {
    ExponentResult result;
    PlaneFunction phi;
    std::optional<CircleProfile> profile;
};

Fundamental fundamental_2d(const OperatorSpec& op, const RunConfig& cfg) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "this command needs a 2-dimensional operator");
    const ExponentRun run = compute_exponent(op, cfg);
    Fundamental f;
    f.result = run.result;
    if (run.result.method == ExponentMethod::rotinv_root) {
        const double alpha = run.result.alpha_star;
        f.phi = [alpha](double x, double y) {
            const double p[2] = {x, y};
            return xi_eval(alpha, p);
        };
    } else {
        CircleProfile prof = fundamental_profile_2d(op, run.result, circle_config(cfg));
        f.profile = prof;
        f.phi = [prof](double x, double y) { return prof.u(x, y); };
    }
    return f;
}

void write_text_artifact(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) fail(ErrorKind::io, "failed writing '" + path + "'");
}

Json oracle_json(const RunConfig& cfg, double computed) {
    const auto cf = builtin_closed_form(cfg);
    if (!cf) return nullptr;
    return {{"closed_form", *cf}, {"computed", computed}, {"difference", computed - *cf}};
}

Json cmd_check(const OperatorSpec& op, const RunConfig& cfg) {
    const StructureReport s = verify_h1_h2(op, op.declared, 1000, cfg.seed);
    const SandwichReport w = pucci_sandwich_check(op, 1000, cfg.seed);
    const SymmetryCheck r = is_rotationally_symmetric(op, 64, cfg.seed);
    return {{"h1_pass", s.h1_pass},
            {"h2_pass", s.h2_pass},
            {"worst_violation", s.worst_violation},
            {"worst_h1", s.worst_h1},
            {"worst_h2", s.worst_h2},
            {"samples", s.n_samples},
            {"sandwich_pass", w.pass},
            {"sandwich_worst_violation", w.worst_violation},
            {"rotationally_symmetric", r.symmetric},
            {"symmetry_gap", r.worst_gap}};
}

Json cmd_exponent(const OperatorSpec& op, const RunConfig& cfg) {
    const ExponentRun run = compute_exponent(op, cfg);
    Json p = to_json(run.result);
    p["dim"] = op.dim;
    p["lower_bound"] = exponent_lower_bound(op.declared, op.dim);
    p["upper_bound"] = exponent_upper_bound(op.declared, op.dim);
    p["recurrence"] = to_string(classify_recurrence(run.result.alpha_star, 1e-6));
    p["oracle"] = oracle_json(cfg, run.result.alpha_star);
    if (run.detail) {
        Json audit = Json::array();
        for (const auto& s : run.detail->audit) audit.push_back({{"alpha", s.alpha}, {"eta", s.eta}});
        p["eta_audit"] = audit;
        p["mu_log"] = run.detail->mu_log ? Json(*run.detail->mu_log) : Json(nullptr);
        p["n_theta"] = cfg.ntheta;
    }
    return p;
}

Json cmd_profile(const OperatorSpec& op, const RunConfig& cfg) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "profile needs a 2-dimensional operator");
    const ExponentRun run = compute_exponent(op, cfg);
    CircleProfile prof = fundamental_profile_2d(op, run.result, circle_config(cfg));
    const std::vector<double> resid = apply_circle_operator(op, prof);
    double worst = 0.0;
    for (double v : resid) worst = std::max(worst, std::abs(v));
    if (cfg.out) {
        std::ostringstream csv;
        write_profile_csv(csv, prof, resid, operator_hash(op));
        write_text_artifact(*cfg.out, csv.str());
    }
    double lo = prof.values.front(), hi = prof.values.front();
    for (double v : prof.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    return {{"exponent", to_json(run.result)},
            {"n_theta", prof.n_theta},
            {"phi_min", lo},
            {"phi_max", hi},
            {"max_residual", worst},
            {"csv", cfg.out ? Json(*cfg.out) : Json(nullptr)},
            {"columns", kProfileCsvHeader}};
}

Json cmd_annulus(const OperatorSpec& op, const RunConfig& cfg) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "annulus needs a 2-dimensional operator");
    auto grid = std::make_shared<const AnnulusGrid>(cfg.rinner, cfg.router, cfg.grid_h);
    SolverConfig sc;
    if (cfg.tol) sc.tol = *cfg.tol;
    const double gi = cfg.g_inner, go = cfg.g_outer;
    const DirichletSolution sol = solve_dirichlet_2d(
        op, grid, [gi](double, double) { return gi; }, [go](double, double) { return go; }, sc);
    Json p{{"method", sol.report.method},
           {"iterations", sol.report.iterations},
           {"residual", sol.report.residual},
           {"max_decomposition_residual", sol.report.max_decomposition_residual},
           {"max_stencil_width", sol.report.max_stencil_width},
           {"active_nodes", grid->active_count()},
           {"u_min", sol.field.min_active()},
           {"u_max", sol.field.max_active()},
           {"h", cfg.grid_h},
           {"r_inner", cfg.rinner},
           {"r_outer", cfg.router},
           {"g_inner", gi},
           {"g_outer", go}};
    // radial exact solution: affine in Phi (g_inner >= g_outer) or in -Phi~
    Json exact = nullptr;
    if (is_rotationally_symmetric(op, 64, 0x5eed).symmetric) {
        const OperatorSpec which = gi >= go ? op : dual_operator(op);
        const double alpha = exponent_rotinv(which).alpha_star;
        const double xr = xi_radial(alpha, cfg.rinner), xR = xi_radial(alpha, cfg.router);
        double err = 0.0;
        for (std::size_t k = 0; k < grid->active_count(); ++k) {
            const std::size_t nd = grid->active_node(k);
            const double x = grid->x(static_cast<int>(nd % grid->side()));
            const double y = grid->x(static_cast<int>(nd / grid->side()));
            const double t = (xi_radial(alpha, std::hypot(x, y)) - xR) / (xr - xR);
            err = std::max(err, std::abs(sol.field.at_node(nd) - (go + (gi - go) * t)));
        }
        exact = {{"alpha", alpha}, {"sup_error", err}};
    }
    p["exact_radial"] = exact;
    if (cfg.out) {
        std::ostringstream csv;
        write_field_csv(csv, sol.field);
        write_text_artifact(*cfg.out, csv.str());
    }
    p["csv"] = cfg.out ? Json(*cfg.out) : Json(nullptr);
    return p;
}

Json cmd_classify(const OperatorSpec& op, const RunConfig& cfg) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "classify needs a 2-dimensional operator");
    if (cfg.at != "origin" && cfg.at != "infinity") fail(ErrorKind::invalid_input, "--at must be origin or infinity");
    const Fundamental f = fundamental_2d(op, cfg);
    const Fundamental ft = fundamental_2d(dual_operator(op), cfg);
    const double a = cfg.a, b = cfg.b;
    PlaneFunction u;
    if (cfg.family == "phi") {
        u = [phi = f.phi, a, b](double x, double y) { return a * phi(x, y) + b; };
    } else if (cfg.family == "phi_tilde") {
        u = [phi = ft.phi, a, b](double x, double y) { return -a * phi(x, y) + b; };
    } else if (cfg.family == "saddle") {
        u = [](double x, double y) { return x * x - y * y; };
    } else if (cfg.family == "const") {
        u = [b](double, double) { return b; };
    } else {
        fail(ErrorKind::invalid_input, "--family must be phi, phi_tilde, saddle or const");
    }
    const ClassifierInput in{u, f.phi, ft.phi, f.result.alpha_star, ft.result.alpha_star};
    const SingularityReport rep = cfg.at == "origin" ? classify_origin(in) : classify_infinity(in);
    Json p = to_json(rep);
    p["alpha_star"] = f.result.alpha_star;
    p["alpha_star_dual"] = ft.result.alpha_star;
    p["family"] = cfg.family;
    return p;
}

struct GameSetup {
    GameSpec game;
    FeedbackPolicy one;
    FeedbackPolicy two;
    std::string description;
    /// Radial exponent of the value operator, when exit laws are closed form.
    std::optional<double> alpha;
};

GameSetup game_for(const OperatorSpec& op, const RunConfig& cfg) {
    GameSetup s;
    const bool symmetric = is_rotationally_symmetric(op, 64, 0x5eed).symmetric;
    if (const auto* lin = std::get_if<Linear>(&op.variant)) {
        s.game = make_game_from_diffusions(1, 1, {lin->A}, op.declared);
        s.one = fixed_policy(0);
        s.two = fixed_policy(0);
        s.description = "single diffusion D = A";
    } else if (std::holds_alternative<PucciPlus>(op.variant) && op.dim == 2) {
        const double alpha = exponent_rotinv(op).alpha_star;
        s.game = pucci_game_2d(op.declared, 64, 2);
        s.one = fixed_policy(0);
        s.two = optimal_feedback_policy(
            s.game, [alpha](std::span<const double> x) { return xi_hessian(alpha, x); }, Player::two);
        s.description = "player II escapes against Phi";
    } else if (std::holds_alternative<PucciMinus>(op.variant) && op.dim == 2) {
        const double alpha = exponent_rotinv(op).alpha_star;
        s.game = pucci_game_2d(op.declared, 64, 1);
        s.one = optimal_feedback_policy(
            s.game, [alpha](std::span<const double> x) { return xi_hessian(alpha, x); }, Player::one);
        s.two = fixed_policy(0);
        s.description = "player I pursues against Phi";
    } else {
        fail(ErrorKind::invalid_input, "no game is defined for this operator (use linear/laplacian, or pucci+/pucci- in dim 2)");
    }
    if (symmetric) s.alpha = exponent_rotinv(op).alpha_star;
    (void)cfg;
    return s;
}

SimConfig sim_config(const RunConfig& cfg, int dim, double default_R) {
    SimConfig c;
    c.r = cfg.r;
    c.R = cfg.R.value_or(default_R);
    if (cfg.x0.empty()) {
        c.x0.assign(static_cast<std::size_t>(dim), 0.0);
        c.x0[0] = 0.5;
    } else if (cfg.x0.size() == 1) {
        c.x0.assign(static_cast<std::size_t>(dim), 0.0);
        c.x0[0] = cfg.x0[0];
    } else {
        c.x0 = cfg.x0;
    }
    c.dt_base = cfg.dt;
    c.step_factor = cfg.step_factor;
    c.n_paths = cfg.paths;
    c.master_seed = cfg.seed;
    return c;
}

double exact_exit_probability(double alpha, double r, double R, double rho) {
    return (xi_radial(alpha, rho) - xi_radial(alpha, R)) / (xi_radial(alpha, r) - xi_radial(alpha, R));
}

Json cmd_game(const OperatorSpec& op, const RunConfig& cfg) {
    const GameSetup s = game_for(op, cfg);
    const SimConfig sc = sim_config(cfg, op.dim, 1.0);
    const HitStats st = estimate_hit_prob(s.game, s.one, s.two, sc);
    Json p = to_json(st, sc);
    p["game"] = s.description;
    p["policy_one"] = to_string(s.one.kind);
    p["policy_two"] = to_string(s.two.kind);
    if (s.alpha) {
        double rho = 0.0;
        for (double v : sc.x0) rho += v * v;
        const double exact = exact_exit_probability(*s.alpha, sc.r, sc.R, std::sqrt(rho));
        p["oracle"] = {{"closed_form", exact}, {"computed", st.p_hat}, {"difference", st.p_hat - exact}};
    } else {
        p["oracle"] = nullptr;
    }
    return p;
}

Json cmd_ladder(const OperatorSpec& op, const RunConfig& cfg) {
    const GameSetup s = game_for(op, cfg);
    const SimConfig sc = sim_config(cfg, op.dim, 4.0);
    const ScalingFit fit = recover_exponent_scaling(s.game, s.one, s.two, cfg.ladder, sc);
    Json pts = Json::array();
    for (const auto& pt : fit.points) pts.push_back({{"r", pt.r}, {"p_hat", pt.stats.p_hat}, {"stderr", pt.stats.std_error}});
    Json p{{"slope", fit.slope},
           {"stderr", fit.std_error},
           {"local_slopes", fit.local_slopes},
           {"power_law", fit.power_law},
           {"chi2_power", fit.chi2_power},
           {"chi2_log", fit.chi2_log},
           {"points", pts},
           {"R", sc.R},
           {"x0", sc.x0},
           {"game", s.description}};
    // without a power law the data point to the logarithmic (alpha* = 0) case
    const double alpha_mc = fit.power_law ? fit.slope : 0.0;
    p["recurrence_from_slope"] = to_string(classify_recurrence(alpha_mc, 0.1));
    p["oracle"] = s.alpha ? Json{{"closed_form", *s.alpha}, {"computed", fit.slope}, {"difference", fit.slope - *s.alpha}}
                          : Json(nullptr);
    if (cfg.out) {
        std::ostringstream csv;
        write_ladder_csv(csv, fit);
        write_text_artifact(*cfg.out, csv.str());
    }
    p["csv"] = cfg.out ? Json(*cfg.out) : Json(nullptr);
    return p;
}

}  // namespace

RunResult run_command(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult res;
    try {
        std::vector<std::string> warnings;
        const OperatorSpec op = load_operator_spec(cfg, warnings);
        Json payload;
        if (cfg.command == "check")
            payload = cmd_check(op, cfg);
        else if (cfg.command == "exponent")
            payload = cmd_exponent(op, cfg);
        else if (cfg.command == "profile")
            payload = cmd_profile(op, cfg);
        else if (cfg.command == "annulus")
            payload = cmd_annulus(op, cfg);
        else if (cfg.command == "classify")
            payload = cmd_classify(op, cfg);
        else if (cfg.command == "game")
            payload = cmd_game(op, cfg);
        else if (cfg.command == "ladder")
            payload = cmd_ladder(op, cfg);
        else
            fail(ErrorKind::invalid_input, "unknown command '" + cfg.command + "'");
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.report = {{"command", cfg.command},
                      {"operator_hash", operator_hash(op)},
                      {"payload", payload},
                      {"version", kVersion},
                      {"wall_time", wall},
                      {"warnings", warnings}};
    } catch (const Error& e) {
        res.exit_code = exit_code_for(e.kind());
        res.error = {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}, {"exit_code", res.exit_code}}}};
    }
    return res;
}

void write_report(const Json& report, const std::optional<std::string>& path) {
    const std::string text = canonical_dump(report) + "\n";
    if (!path) {
        std::cout << text;
        std::cout.flush();
        if (!std::cout) fail(ErrorKind::io, "failed writing the report to stdout");
        return;
    }
    write_text_artifact(*path, text);
}

int cli_main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Scaling exponents, fundamental solutions and exit games for homogeneous elliptic operators"};
    app.set_version_flag("--version", kVersion);
    app.add_option("command", cfg.command, "check | exponent | profile | annulus | classify | game | ladder")
        ->required()
        ->check(CLI::IsMember({"check", "exponent", "profile", "annulus", "classify", "game", "ladder"}));
    app.add_option("--op", cfg.op, "builtin operator: pucci+ pucci- laplacian linear f1 f2");
    app.add_option("--spec-file", cfg.spec_file, "operator JSON file");
    app.add_option("--lambda", cfg.lambda, "lower ellipticity constant");
    app.add_option("--Lambda", cfg.Lambda, "upper ellipticity constant");
    app.add_option("--dim", cfg.dim, "dimension")->check(CLI::Range(2, 8));
    app.add_option("--diag", cfg.diag, "diagonal of A for --op linear")->delimiter(',');
    app.add_option("--method", cfg.method, "exponent method")->check(CLI::IsMember({"auto", "rotinv", "circle"}));
    app.add_option("--ntheta", cfg.ntheta, "circle grid size (power of two)");
    app.add_option("--grid-h", cfg.grid_h, "annulus grid spacing");
    app.add_option("--rinner", cfg.rinner, "annulus inner radius");
    app.add_option("--router", cfg.router, "annulus outer radius");
    app.add_option("--g-inner", cfg.g_inner, "constant data on the inner circle");
    app.add_option("--g-outer", cfg.g_outer, "constant data on the outer circle");
    app.add_option("--r", cfg.r, "game inner radius");
    app.add_option("--R", cfg.R, "game outer radius (default 1, ladder 4)");
    app.add_option("--x0", cfg.x0, "start point, or its distance along e1")->delimiter(',');
    app.add_option("--paths", cfg.paths, "Monte Carlo paths");
    app.add_option("--dt", cfg.dt, "base time step");
    app.add_option("--step-factor", cfg.step_factor, "near-sphere step refinement in (0, 1]");
    app.add_option("--ladder", cfg.ladder, "decreasing inner radii")->delimiter(',');
    app.add_option("--seed", cfg.seed, "master seed");
    app.add_option("--tol", cfg.tol, "solver tolerance");
    app.add_option("--family", cfg.family, "classify input: phi | phi_tilde | saddle | const");
    app.add_option("--a", cfg.a, "coefficient a of the synthetic input");
    app.add_option("--b", cfg.b, "offset b of the synthetic input");
    app.add_option("--at", cfg.at, "origin | infinity");
    app.add_option("--out", cfg.out, "CSV artifact path");
    app.add_option("--report", cfg.report, "JSON report path (default stdout)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        const Json err{{"error", {{"kind", "invalid_input"}, {"message", e.what()}, {"exit_code", kExitInvalid}}}};
        std::cerr << canonical_dump(err) << "\n";
        return kExitInvalid;
    }
    RunResult res = run_command(cfg);
    if (res.exit_code == kExitOk) {
        try {
            write_report(res.report, cfg.report);
        } catch (const Error& e) {
            res.exit_code = exit_code_for(e.kind());
            res.error = {{"error", {{"kind", to_string(e.kind())}, {"message", e.what()}, {"exit_code", res.exit_code}}}};
        }
    }
    if (res.exit_code != kExitOk) std::cerr << canonical_dump(res.error) << "\n";
    return res.exit_code;
}

}  // namespace ellipticfund
