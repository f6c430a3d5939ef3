#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ellipticfund/operator.hpp"
#include "ellipticfund/stencil.hpp"

namespace ellipticfund {

enum class NodeKind : std::uint8_t { outside, active, band };

/// Square lattice x = (i - half) h on [-r_outer, r_outer]^2 (padded by a few
/// cells) restricted to the open annulus r_inner < |x| < r_outer. Band nodes
/// lie outside the annulus within two cells of either circle; they carry
/// boundary data for interpolation only.
class AnnulusGrid {
public:
    AnnulusGrid(double r_inner, double r_outer, double h);

    double r_inner() const noexcept { return r_inner_; }
    double r_outer() const noexcept { return r_outer_; }
    double h() const noexcept { return h_; }
    int side() const noexcept { return side_; }
    int half() const noexcept { return half_; }
    std::size_t node_count() const noexcept { return kinds_.size(); }
    std::size_t active_count() const noexcept { return active_.size(); }

    std::size_t node(int i, int j) const noexcept { return static_cast<std::size_t>(j) * side_ + i; }
    double x(int i) const noexcept { return (i - half_) * h_; }
    NodeKind kind(std::size_t node) const noexcept { return kinds_[node]; }
    /// Lattice node of the k-th unknown.
    std::size_t active_node(std::size_t k) const noexcept { return active_[k]; }
    /// Unknown index of a lattice node, -1 when not active.
    long unknown(std::size_t node) const noexcept { return unknown_[node]; }

private:
    double r_inner_, r_outer_, h_;
    int half_ = 0;
    int side_ = 0;
    std::vector<NodeKind> kinds_;
    std::vector<std::size_t> active_;
    std::vector<long> unknown_;
};

using BoundaryFn = std::function<double(double x, double y)>;

/// Grid function over the lattice: solution on active nodes, boundary data
/// (at the radial projection) on band nodes, NaN elsewhere.
class Field {
public:
    Field(std::shared_ptr<const AnnulusGrid> grid, std::vector<double> values);

    const AnnulusGrid& grid() const noexcept { return *grid_; }
    std::shared_ptr<const AnnulusGrid> grid_ptr() const noexcept { return grid_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double at_node(std::size_t node) const noexcept { return values_[node]; }

    /// Bilinear interpolation; throws invalid_input when a cell corner has
    /// no value.
    double sample(double x, double y) const;

    double min_active() const;
    double max_active() const;

private:
    std::shared_ptr<const AnnulusGrid> grid_;
    std::vector<double> values_;
};

/// CSV "x,y,u" over all nodes carrying a value.
void write_field_csv(std::ostream& out, const Field& field);
inline constexpr const char* kFieldCsvHeader = "x,y,u";

/// Finite-family form of a 2-D operator on the lattice: controls are matrices
/// with their direction decompositions; F_h = outer over groups of inner over
/// members of -sum_k c_k D_k u.
struct DiscreteOperator {
    enum class Outer { sup, inf };
    Outer outer = Outer::sup;
    std::vector<std::vector<int>> groups;
    std::vector<SymMatrix> controls;
    std::vector<Decomposition> decompositions;
    /// Union of the directions used by any control.
    std::vector<LatticeDir> directions;
    /// Per control: (index into directions, weight).
    std::vector<std::vector<std::pair<int, double>>> stencils;
    double max_decomposition_residual = 0.0;

    /// Every group a singleton (pure sup) or a single group (pure inf), so
    /// F_h is convex or concave in u.
    bool single_level() const;
};

/// Pucci and eigenvalue-symmetric operators are replaced by the extreme
/// points lambda I + (Lambda - lambda) e e^T (and c2 I + (c1 - c2) e e^T)
/// on `n_angles` equally spaced directions plus the two multiples of I.
DiscreteOperator discretize_operator(const OperatorSpec& op, int stencil_width, int n_angles);

enum class BoundaryTreatment {
    /// Arms crossing a circle are cut at the crossing, where g is evaluated.
    shortened_arm,
    /// Full arms; data at the radial projection of the outside neighbor.
    radial_projection,
};

struct SolverConfig {
    /// Starting width; widened per control when needed.
    int stencil_width = 1;
    int n_angles = 64;
    BoundaryTreatment boundary = BoundaryTreatment::shortened_arm;
    /// Stop once |F_h(u)|_inf <= tol / h.
    double tol = 1e-8;
    double pseudo_dt_safety = 0.9;
    long max_iter = 2'000'000;
    int max_policy_iter = 100;
    /// Force the relaxation path even for convex or concave operators.
    bool force_relaxation = false;
};

struct SolveReport {
    std::string method;
    long iterations = 0;
    double residual = 0.0;
    double max_decomposition_residual = 0.0;
    int max_stencil_width = 0;
};

/// Precomputed arms: for each active node and direction, both neighbors
/// (unknown index or -1), arm lengths and boundary values.
class AnnulusStencil {
public:
    AnnulusStencil(const AnnulusGrid& grid, const std::vector<LatticeDir>& dirs, const BoundaryFn& g_inner,
                   const BoundaryFn& g_outer, BoundaryTreatment treatment);

    struct Arm {
        long nbr = -1;
        double len = 0.0;
        double bval = 0.0;
    };

    std::size_t unknowns() const noexcept { return n_; }
    std::size_t dir_count() const noexcept { return ndir_; }
    const Arm& arm(std::size_t k, std::size_t dir, int side) const noexcept { return arms_[(k * ndir_ + dir) * 2 + side]; }

    /// Second difference along direction `dir` at unknown k.
    double second_difference(const std::vector<double>& u, std::size_t k, std::size_t dir) const noexcept;

private:
    std::size_t n_ = 0;
    std::size_t ndir_ = 0;
    std::vector<Arm> arms_;
};

/// F_h(u) at every unknown. The OpenMP version splits unknowns across
/// threads; both produce identical results.
void apply_discrete_operator_serial(const DiscreteOperator& op, const AnnulusStencil& st,
                                    const std::vector<double>& u, std::vector<double>& out);
void apply_discrete_operator_parallel(const DiscreteOperator& op, const AnnulusStencil& st,
                                      const std::vector<double>& u, std::vector<double>& out);

/// Local pseudo-time steps tau_x = safety / (largest diagonal coefficient of
/// any control at x); they keep the Jacobi update monotone.
std::vector<double> relaxation_steps(const DiscreteOperator& op, const AnnulusStencil& st, double safety);

/// One Jacobi step u <- u - tau_x F_h(u)(x). Returns |F_h(u)|_inf before the
/// step.
double relaxation_sweep_serial(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<double>& tau,
                               const std::vector<double>& u, std::vector<double>& next);
double relaxation_sweep_parallel(const DiscreteOperator& op, const AnnulusStencil& st, const std::vector<double>& tau,
                                 const std::vector<double>& u, std::vector<double>& next);

struct DirichletSolution {
    Field field;
    SolveReport report;
};

/// Solves F(D^2 u) = 0 in the annulus with u = g_inner on |x| = r_inner and
/// u = g_outer on |x| = r_outer. Convex or concave operators use Howard
/// policy iteration with sparse direct solves; genuine sup-inf operators use
/// the monotone Jacobi relaxation.
DirichletSolution solve_dirichlet_2d(const OperatorSpec& op, std::shared_ptr<const AnnulusGrid> grid,
                                     const BoundaryFn& g_inner, const BoundaryFn& g_outer,
                                     const SolverConfig& cfg = {});

}  // namespace ellipticfund
