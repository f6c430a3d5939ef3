#include "ellipticfund/annulus.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include "ellipticfund/canonical_json.hpp"
#include "ellipticfund/error.hpp"
#include "ellipticfund/parallel.hpp"

namespace ellipticfund {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

AnnulusGrid::AnnulusGrid(double r_inner, double r_outer, double h) : r_inner_(r_inner), r_outer_(r_outer), h_(h) {
    if (!(r_inner > 0.0) || !(r_outer > r_inner) || !std::isfinite(r_outer))
        fail(ErrorKind::invalid_input, "annulus needs 0 < r_inner < r_outer");
    if (!(h > 0.0) || h > (r_outer - r_inner) / 16.0 * (1.0 + 1e-12))
        fail(ErrorKind::invalid_input, "grid spacing must satisfy 0 < h <= (r_outer - r_inner)/16");
    half_ = static_cast<int>(std::ceil(r_outer / h)) + 4;
    side_ = 2 * half_ + 1;
    kinds_.assign(static_cast<std::size_t>(side_) * side_, NodeKind::outside);
    unknown_.assign(kinds_.size(), -1);
    const double edge = 1e-12 * h;
    for (int j = 0; j < side_; ++j) {
        for (int i = 0; i < side_; ++i) {
            const double r = std::hypot(x(i), x(j));
            const std::size_t nd = node(i, j);
            if (r > r_inner + edge && r < r_outer - edge) {
                kinds_[nd] = NodeKind::active;
                unknown_[nd] = static_cast<long>(active_.size());
                active_.push_back(nd);
            } else if (std::abs(r - r_inner) <= 2.0 * h || std::abs(r - r_outer) <= 2.0 * h) {
                kinds_[nd] = NodeKind::band;
            }
        }
    }
}

Field::Field(std::shared_ptr<const AnnulusGrid> grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_ || values_.size() != grid_->node_count())
        fail(ErrorKind::invalid_input, "field size does not match its grid");
}

double Field::sample(double x, double y) const {
    const AnnulusGrid& g = *grid_;
    const double fx = x / g.h() + g.half();
    const double fy = y / g.h() + g.half();
    int i = static_cast<int>(std::floor(fx));
    int j = static_cast<int>(std::floor(fy));
    if (i < 0 || j < 0 || i + 1 >= g.side() || j + 1 >= g.side())
        fail(ErrorKind::invalid_input, "sample point outside the grid");
    const double tx = fx - i;
    const double ty = fy - j;
    const double v00 = values_[g.node(i, j)];
    const double v10 = values_[g.node(i + 1, j)];
    const double v01 = values_[g.node(i, j + 1)];
    const double v11 = values_[g.node(i + 1, j + 1)];
    if (std::isnan(v00) || std::isnan(v10) || std::isnan(v01) || std::isnan(v11))
        fail(ErrorKind::invalid_input, "sample point (" + format_double(x) + ", " + format_double(y) +
                                           ") is not covered by the field");
    return (1 - tx) * (1 - ty) * v00 + tx * (1 - ty) * v10 + (1 - tx) * ty * v01 + tx * ty * v11;
}

double Field::min_active() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid_->active_count(); ++k) m = std::min(m, values_[grid_->active_node(k)]);
    return m;
}

double Field::max_active() const {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < grid_->active_count(); ++k) m = std::max(m, values_[grid_->active_node(k)]);
    return m;
}

void write_field_csv(std::ostream& out, const Field& field) {
    const AnnulusGrid& g = field.grid();
    out << kFieldCsvHeader << "\n";
    for (int j = 0; j < g.side(); ++j)
        for (int i = 0; i < g.side(); ++i) {
            const double v = field.at_node(g.node(i, j));
            if (std::isnan(v)) continue;
            out << format_double(g.x(i)) << ',' << format_double(g.x(j)) << ',' << format_double(v) << "\n";
        }
}

bool DiscreteOperator::single_level() const {
    if (groups.size() == 1) return true;
    return std::all_of(groups.begin(), groups.end(), [](const auto& g) { return g.size() == 1; });
}

namespace {

std::vector<SymMatrix> extreme_family(double base, double extra, int n_angles) {
    std::vector<SymMatrix> out;
    out.push_back(SymMatrix::identity(2) * base);
    if (extra == 0.0) return out;
    out.push_back(SymMatrix::identity(2) * (base + extra));
    for (int m = 0; m < n_angles; ++m) {
        const double t = std::numbers::pi * m / n_angles;
        const double e[2] = {std::cos(t), std::sin(t)};
        out.push_back(SymMatrix::identity(2) * base + SymMatrix::outer(e) * extra);
    }
    return out;
}

std::vector<std::vector<int>> singletons(std::size_t n) {
    std::vector<std::vector<int>> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = {static_cast<int>(k)};
    return g;
}

std::vector<std::vector<int>> one_group(std::size_t n) {
    std::vector<int> g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = static_cast<int>(k);
    return {g};
}

}  // namespace

DiscreteOperator discretize_operator(const OperatorSpec& op, int stencil_width, int n_angles) {
    if (op.dim != 2) fail(ErrorKind::invalid_input, "annulus solver requires a 2-dimensional operator");
    if (n_angles < 4) fail(ErrorKind::invalid_input, "n_angles must be at least 4");
    DiscreteOperator d;
    std::visit(
        [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, PucciPlus> || std::is_same_v<T, PucciMinus>) {
                d.controls = extreme_family(v.pair.lambda, v.pair.Lambda - v.pair.lambda, n_angles);
                d.outer = DiscreteOperator::Outer::sup;
                d.groups = std::is_same_v<T, PucciPlus> ? singletons(d.controls.size()) : one_group(d.controls.size());
            } else if constexpr (std::is_same_v<T, Linear>) {
                d.controls = {v.A};
                d.groups = {{0}};
            } else if constexpr (std::is_same_v<T, SupInf> || std::is_same_v<T, InfSup>) {
                d.outer = std::is_same_v<T, SupInf> ? DiscreteOperator::Outer::sup : DiscreteOperator::Outer::inf;
                for (const auto& fam : v.families) {
                    std::vector<int> g;
                    for (const auto& a : fam) {
                        g.push_back(static_cast<int>(d.controls.size()));
                        d.controls.push_back(a);
                    }
                    d.groups.push_back(std::move(g));
                }
            } else {
                // -c1 mu1 - c2 mu2 is a sup (c1 >= c2) or inf of -trace over
                // c_min I + |c1 - c2| e e^T
                const double c1 = v.coeffs[0];
                const double c2 = v.coeffs[1];
                d.controls = extreme_family(std::min(c1, c2), std::abs(c1 - c2), n_angles);
                if (c1 != c2) d.controls.erase(d.controls.begin() + 1);
                if (c1 != c2) d.controls.erase(d.controls.begin());
                d.outer = DiscreteOperator::Outer::sup;
                d.groups = c1 >= c2 ? singletons(d.controls.size()) : one_group(d.controls.size());
            }
        },
        op.variant);

    for (const auto& a : d.controls) {
        Decomposition dec = direction_decomposition(a, stencil_width);
        std::vector<std::pair<int, double>> st;
        for (const auto& t : dec.terms) {
            auto it = std::find(d.directions.begin(), d.directions.end(), t.dir);
            if (it == d.directions.end()) {
                d.directions.push_back(t.dir);
                it = d.directions.end() - 1;
            }
            st.emplace_back(static_cast<int>(it - d.directions.begin()), t.weight);
        }
        d.max_decomposition_residual = std::max(d.max_decomposition_residual, dec.residual);
        d.stencils.push_back(std::move(st));
        d.decompositions.push_back(std::move(dec));
    }
    return d;
}

AnnulusStencil::AnnulusStencil(const AnnulusGrid& grid, const std::vector<LatticeDir>& dirs, const BoundaryFn& g_inner,
                               const BoundaryFn& g_outer, BoundaryTreatment treatment)
    : n_(grid.active_count()), ndir_(dirs.size()), arms_(n_ * ndir_ * 2) {
    const double h = grid.h();
    const double ri = grid.r_inner();
    const double ro = grid.r_outer();
    for (std::size_t k = 0; k < n_; ++k) {
        const std::size_t nd = grid.active_node(k);
        const int i = static_cast<int>(nd % grid.side());
        const int j = static_cast<int>(nd / grid.side());
        const double px = grid.x(i);
        const double py = grid.x(j);
        const double c = px * px + py * py;
        for (std::size_t d = 0; d < ndir_; ++d) {
            const double len = h * dirs[d].norm();
            for (int side = 0; side < 2; ++side) {
                const double s = side == 0 ? 1.0 : -1.0;
                const double vx = s * dirs[d].p * h / len;
                const double vy = s * dirs[d].q * h / len;
                const double pv = px * vx + py * vy;
                double t_hit = std::numeric_limits<double>::infinity();
                bool inner = false;
                const double disc_i = pv * pv - (c - ri * ri);
                if (disc_i >= 0.0) {
                    const double t = -pv - std::sqrt(disc_i);
                    if (t > 0.0 && t <= len * (1.0 + 1e-12)) {
                        t_hit = t;
                        inner = true;
                    }
                }
                const double t_out = -pv + std::sqrt(pv * pv - (c - ro * ro));
                if (t_out <= len * (1.0 + 1e-12) && t_out < t_hit) {
                    t_hit = t_out;
                    inner = false;
                }
                Arm& arm = arms_[(k * ndir_ + d) * 2 + side];
                const int ni = i + static_cast<int>(s) * dirs[d].p;
                const int nj = j + static_cast<int>(s) * dirs[d].q;
                if (!std::isfinite(t_hit) && grid.unknown(grid.node(ni, nj)) < 0) {
                    // neighbor on a circle up to rounding
                    t_hit = len;
                    inner = std::hypot(grid.x(ni), grid.x(nj)) < 0.5 * (ri + ro);
                }
                if (std::isfinite(t_hit)) {
                    const double r = inner ? ri : ro;
                    const BoundaryFn& g = inner ? g_inner : g_outer;
                    if (treatment == BoundaryTreatment::shortened_arm) {
                        arm.len = std::max(t_hit, 1e-6 * h);
                        const double hx = px + t_hit * vx;
                        const double hy = py + t_hit * vy;
                        const double hr = std::hypot(hx, hy);
                        arm.bval = g(hx * r / hr, hy * r / hr);
                    } else {
                        arm.len = len;
                        double qx = px + len * vx;
                        double qy = py + len * vy;
                        double qr = std::hypot(qx, qy);
                        if (qr < 1e-14 * h) {
                            qx = px;
                            qy = py;
                            qr = std::sqrt(c);
                        }
                        arm.bval = g(qx * r / qr, qy * r / qr);
                    }
                    arm.nbr = -1;
                } else {
                    arm.len = len;
                    arm.nbr = grid.unknown(grid.node(ni, nj));
                    if (arm.nbr < 0) fail(ErrorKind::internal, "stencil neighbor is not an active node");
                }
            }
        }
    }
}

double AnnulusStencil::second_difference(const std::vector<double>& u, std::size_t k, std::size_t dir) const noexcept {
    const Arm& a = arms_[(k * ndir_ + dir) * 2];
    const Arm& b = arms_[(k * ndir_ + dir) * 2 + 1];
    const double up = a.nbr >= 0 ? u[a.nbr] : a.bval;
    const double um = b.nbr >= 0 ? u[b.nbr] : b.bval;
    const double u0 = u[k];
    return 2.0 / (a.len + b.len) * ((up - u0) / a.len + (um - u0) / b.len);
}

namespace {

constexpr int kMaxDirs = 16;

/// Values of every control at unknown k.
void control_values(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<double>& u,
                    std::size_t k, std::vector<double>& vals) {
    double dd[kMaxDirs];
    for (std::size_t d = 0; d < st.dir_count(); ++d) dd[d] = st.second_difference(u, k, d);
    for (std::size_t c = 0; c < op.stencils.size(); ++c) {
        double v = 0.0;
        for (const auto& [d, w] : op.stencils[c]) v -= w * dd[d];
        vals[c] = v;
    }
}

double combine(const DiscreteOperator& op, const std::vector<double>& vals, int* chosen = nullptr) {
    const bool sup = op.outer == DiscreteOperator::Outer::sup;
    double best = sup ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (const auto& g : op.groups) {
        double inner = sup ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
        int arg = g.front();
        for (int c : g) {
            if (sup ? vals[c] < inner : vals[c] > inner) {
                inner = vals[c];
                arg = c;
            }
        }
        if (sup ? inner > best : inner < best) {
            best = inner;
            if (chosen) *chosen = arg;
        }
    }
    return best;
}

double diagonal_bound(const DiscreteOperator& op, const AnnulusStencil& st, std::size_t k) {
    double diag = 0.0;
    for (const auto& stc : op.stencils) {
        double s = 0.0;
        for (const auto& [d, w] : stc) s += w * 2.0 / (st.arm(k, d, 0).len * st.arm(k, d, 1).len);
        diag = std::max(diag, s);
    }
    return diag;
}

}  // namespace

void apply_discrete_operator_serial(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<double>& u,
                                    std::vector<double>& out) {
    out.resize(st.unknowns());
    std::vector<double> vals(op.controls.size());
    for (std::size_t k = 0; k < st.unknowns(); ++k) {
        control_values(op, st, u, k, vals);
        out[k] = combine(op, vals);
    }
}

void apply_discrete_operator_parallel(const DiscreteOperator& op, const AnnulusStencil& st,
                                      const std::vector<double>& u, std::vector<double>& out) {
    out.resize(st.unknowns());
    const long n = static_cast<long>(st.unknowns());
#pragma omp parallel num_threads(worker_threads())
    {
        std::vector<double> vals(op.controls.size());
#pragma omp for schedule(static)
        for (long k = 0; k < n; ++k) {
            control_values(op, st, u, static_cast<std::size_t>(k), vals);
            out[k] = combine(op, vals);
        }
    }
}

std::vector<double> relaxation_steps(const DiscreteOperator& op, const AnnulusStencil& st, double safety) {
    std::vector<double> tau(st.unknowns());
    for (std::size_t k = 0; k < st.unknowns(); ++k) tau[k] = safety / diagonal_bound(op, st, k);
    return tau;
}

double relaxation_sweep_serial(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<double>& tau,
                               const std::vector<double>& u, std::vector<double>& next) {
    next.resize(st.unknowns());
    std::vector<double> vals(op.controls.size());
    double res = 0.0;
    for (std::size_t k = 0; k < st.unknowns(); ++k) {
        control_values(op, st, u, k, vals);
        const double f = combine(op, vals);
        res = std::max(res, std::abs(f));
        next[k] = u[k] - tau[k] * f;
    }
    return res;
}

double relaxation_sweep_parallel(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<double>& tau,
                                 const std::vector<double>& u, std::vector<double>& next) {
    next.resize(st.unknowns());
    const long n = static_cast<long>(st.unknowns());
    double res = 0.0;
#pragma omp parallel num_threads(worker_threads()) reduction(max : res)
    {
        std::vector<double> vals(op.controls.size());
#pragma omp for schedule(static)
        for (long k = 0; k < n; ++k) {
            control_values(op, st, u, static_cast<std::size_t>(k), vals);
            const double f = combine(op, vals);
            res = std::max(res, std::abs(f));
            next[k] = u[k] - tau[k] * f;
        }
    }
    return res;
}

namespace {

/// Solves the linear system of one fixed control per node.
std::vector<double> solve_policy(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<int>& policy) {
    const std::size_t n = st.unknowns();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(n * 9);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(n));
    for (std::size_t k = 0; k < n; ++k) {
        double diag = 0.0;
        for (const auto& [d, w] : op.stencils[policy[k]]) {
            const auto& ap = st.arm(k, d, 0);
            const auto& am = st.arm(k, d, 1);
            const double scale = 2.0 * w / (ap.len + am.len);
            for (const auto* arm : {&ap, &am}) {
                const double c = scale / arm->len;
                diag += c;
                if (arm->nbr >= 0)
                    trip.emplace_back(static_cast<int>(k), static_cast<int>(arm->nbr), -c);
                else
                    rhs[static_cast<long>(k)] += c * arm->bval;
            }
        }
        trip.emplace_back(static_cast<int>(k), static_cast<int>(k), diag);
    }
    Eigen::SparseMatrix<double> K(static_cast<long>(n), static_cast<long>(n));
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(K);
    if (lu.info() != Eigen::Success) fail(ErrorKind::internal, "sparse factorization failed");
    const Eigen::VectorXd sol = lu.solve(rhs);
    return {sol.data(), sol.data() + n};
}

/// Whether the single-level operator maximizes over its controls.
bool maximizes(const DiscreteOperator& op) {
    const bool all_single = std::all_of(op.groups.begin(), op.groups.end(), [](const auto& g) { return g.size() == 1; });
    const bool sup = op.outer == DiscreteOperator::Outer::sup;
    return all_single ? sup : !sup;
}

}  // namespace

DirichletSolution solve_dirichlet_2d(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid,
                                     const BoundaryFn& g_inner, const BoundaryFn& g_outer, const SolverConfig& cfg) {
    if (!grid) fail(ErrorKind::invalid_input, "missing grid");
    validate(op);
    const DiscreteOperator dop = discretize_operator(op, cfg.stencil_width, cfg.n_angles);
    const AnnulusStencil st(*grid, dop.directions, g_inner, g_outer, cfg.boundary);
    const std::size_t n = st.unknowns();
    const double h = grid->h();
    const double target = cfg.tol / h;

    SolveReport rep;
    rep.max_decomposition_residual = dop.max_decomposition_residual;
    for (const auto& d : dop.decompositions) rep.max_stencil_width = std::max(rep.max_stencil_width, d.width);

    std::vector<double> u(n, 0.0);
    std::vector<double> res(n);
    if (dop.single_level() && !cfg.force_relaxation) {
        rep.method = "policy_iteration";
        const bool maxi = maximizes(dop);
        std::vector<int> policy(n, 0);
        std::vector<double> vals(dop.controls.size());
        bool stable = false;
        for (int it = 0; it < cfg.max_policy_iter; ++it) {
            u = solve_policy(dop, st, policy);
            rep.iterations = it + 1;
            stable = true;
            // second differences round at about eps |u| / h^2
            double umax = 0.0;
            for (double v : u) umax = std::max(umax, std::abs(v));
            const double noise = 1e-12 * (1.0 + umax / (h * h));
            for (std::size_t k = 0; k < n; ++k) {
                control_values(dop, st, u, k, vals);
                int best = policy[k];
                const double slack = noise + 1e-12 * std::abs(vals[best]);
                for (std::size_t c = 0; c < vals.size(); ++c) {
                    const bool better = maxi ? vals[c] > vals[best] + slack : vals[c] < vals[best] - slack;
                    if (better) best = static_cast<int>(c);
                }
                if (best != policy[k]) {
                    policy[k] = best;
                    stable = false;
                }
            }
            if (stable) break;
        }
        apply_discrete_operator_parallel(dop, st, u, res);
        rep.residual = 0.0;
        for (double r : res) rep.residual = std::max(rep.residual, std::abs(r));
        if (rep.residual > target)
            fail(ErrorKind::convergence, "policy iteration stopped after " + std::to_string(rep.iterations) +
                                             " steps with residual " + format_double(rep.residual));
    } else {
        rep.method = "relaxation";
        std::vector<double> next(n);
        const std::vector<double> tau = relaxation_steps(dop, st, cfg.pseudo_dt_safety);
        bool done = false;
        for (long it = 0; it < cfg.max_iter; ++it) {
            const double r = relaxation_sweep_parallel(dop, st, tau, u, next);
            rep.iterations = it;
            rep.residual = r;
            if (r <= target) {
                done = true;
                break;
            }
            u.swap(next);
        }
        if (!done)
            fail(ErrorKind::convergence, "relaxation did not reach residual " + format_double(target) + " in " +
                                             std::to_string(cfg.max_iter) + " sweeps (last " +
                                             format_double(rep.residual) + ")");
    }

    std::vector<double> values(grid->node_count(), kNaN);
    for (std::size_t k = 0; k < n; ++k) values[grid->active_node(k)] = u[k];
    for (int j = 0; j < grid->side(); ++j)
        for (int i = 0; i < grid->side(); ++i) {
            const std::size_t nd = grid->node(i, j);
            if (grid->kind(nd) != NodeKind::band) continue;
            double x = grid->x(i), y = grid->x(j);
            double r = std::hypot(x, y);
            if (r == 0.0) {
                x = 1.0;
                y = 0.0;
                r = 1.0;
            }
            const bool inner = std::abs(r - grid->r_inner()) < std::abs(r - grid->r_outer());
            const double rc = inner ? grid->r_inner() : grid->r_outer();
            values[nd] = (inner ? g_inner : g_outer)(x * rc / r, y * rc / r);
        }
    return {Field(std::move(grid), std::move(values)), rep};
}

}  // namespace ellipticfund
