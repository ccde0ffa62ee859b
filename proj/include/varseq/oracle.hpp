#pragma once

#include "varseq/jacobi.hpp"

#include <functional>
#include <vector>

namespace varseq {

// Analytic test section: per field an expression in the base coordinates with
// closed-form derivatives of every order.
struct TestSection {
    std::vector<Expr> comps;
};

// Jets of the section at a point, computed symbolically and evaluated.
double eval_on_section(const Expr& e, const TestSection& gamma, const std::vector<double>& x,
                       const BundleSpec& spec);

// Rectangular lattice over a box; periodic wrap-around or an excluded margin.
struct ActionGrid {
    int n = 1;
    std::vector<int> shape;
    std::vector<double> lo, hi;
    bool periodic = true;
    std::vector<std::vector<double>> values;  // [field][node]

    double h(int dir) const;
    size_t index(const std::vector<int>& node) const;
    std::vector<double> point(const std::vector<int>& node) const;
};

ActionGrid sample_grid(const TestSection& gamma, const BundleSpec& spec, std::vector<int> shape,
                       std::vector<double> lo, std::vector<double> hi, bool periodic = true);

// Fourth-order central-difference jet at a grid node.  Throws
// StencilOutOfRange near a non-periodic boundary.
double grid_jet(const ActionGrid& grid, int field, const MultiIndex& a,
                const std::vector<int>& node);

// Evaluate an expression at a node with jets from grid stencils.
double eval_on_grid(const Expr& e, const ActionGrid& grid, const std::vector<int>& node,
                    const BundleSpec& spec);

struct FdOptions {
    double delta = 1e-4;
    bool richardson_delta = true;
    bool richardson_h = true;  // combine with a once-refined grid
};

struct FdReport {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    double scale = 0.0;  // max |E| over compared nodes
    int nodes = 0;
};

// Compares symbolic Euler-Lagrange components (analytic jets) against the
// finite-difference gradient of the Riemann-sum action on the grid.
FdReport fd_gradient_check(const Lagrangian& lag, const TestSection& gamma,
                           const BundleSpec& spec, std::vector<int> shape, std::vector<double> lo,
                           std::vector<double> hi, const FdOptions& opts = {});

// ---------------------------------------------------------------------------
// ODE integration for Jacobi fields (one-dimensional base)

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double max_step = 0.05;
};

struct JacobiOdeResult {
    std::vector<double> ts;                 // accepted step times
    std::vector<double> dets;               // det of the shooting matrix
    std::vector<double> conjugate_points;   // zeros of det on (t0, t1]
};

// Integrates the second-order system J Phi = 0 along a one-dimensional
// background (coefficients are functions of the single base coordinate),
// shooting the fundamental system Phi(t0) = 0, Phi'(t0) = I.  Conjugate
// points are located by sign-change bisection of det Phi to 1e-6.
JacobiOdeResult jacobi_ode_solve(const LinDiffOp& J, double t0, double t1,
                                 const BundleSpec& spec, const OdeOptions& opts = {});

// Single-trajectory integration of a scalar second-order equation
// a(t) w'' + b(t) w' + c(t) w = 0 with given initial data; returns the first
// zero of w on (t0, t1], if any.
std::optional<double> first_zero(const LinDiffOp& J, double w0, double dw0, double t0, double t1,
                                 const BundleSpec& spec, const OdeOptions& opts = {});

}  // namespace varseq
