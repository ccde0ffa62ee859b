#pragma once

#include "varseq/variational.hpp"

#include <map>
#include <tuple>
#include <vector>

namespace varseq {

// Matrix-valued linear differential operator: (J Phi)_i = Sum_{j,beta}
// J^beta_{ij} D_beta Phi^j with Expr coefficients and finite support in beta.
struct LinDiffOp {
    int rows = 0;
    int cols = 0;
    std::map<std::tuple<int, int, MultiIndex>, Expr> coeff;

    int order() const;
    Expr at(int i, int j, const MultiIndex& beta) const;
    void set(int i, int j, const MultiIndex& beta, Expr c);
    std::vector<Expr> apply(const std::vector<Expr>& phi, const BundleSpec& spec) const;
    bool operator==(const LinDiffOp& o) const;
};

// Substitute variable keys inside every coefficient.
LinDiffOp substitute_op(const LinDiffOp& J, const std::map<VarKey, Expr>& bindings);

// Formal linearization of the Euler-Lagrange expressions:
// J^beta_{ij} = dE_i / dy^j_beta.  Acting on a vertical field it realizes the
// Jacobi operator.
LinDiffOp linearize_el(const Lagrangian& lag, const BundleSpec& spec);

// Iterated Lie derivative of a density along vertical fields (the last listed
// field acts first); vertical prolongation is D_alpha of the components.
Expr formal_variation(const Expr& density, const std::vector<VerticalField>& fields,
                      const BundleSpec& spec);
Form formal_variation(const Form& w, const std::vector<VerticalField>& fields,
                      const BundleSpec& spec);

// Formal adjoint with a divergence certificate on two scratch banks:
// Phi^t (J Psi) - Psi^t (J* Phi) = D_mu C^mu.
struct AdjointResult {
    LinDiffOp op;
    BoundaryCurrent certificate;  // C, bilinear in the two banks below
    int phi_base = 0;             // scratch bank of Phi (m parameters)
    int psi_base = 0;             // scratch bank of Psi
};
AdjointResult adjoint_with_certificate(const LinDiffOp& J, const BundleSpec& spec);
LinDiffOp adjoint(const LinDiffOp& J, const BundleSpec& spec);

// Second variation as a bilinear form: B(Phi,Psi) = delta_Psi delta_Phi lambda
// with the variation directions held formal, decomposed as
// B = Sum_i Phi^i (J Psi)_i + D_mu G^mu with an exact certificate.
struct SecondVariation {
    Expr B;
    Expr hpart;
    BoundaryCurrent boundary;
    Expr residual;  // B - hpart - div(boundary); zero on success
};
SecondVariation second_variation(const Lagrangian& lag, const VerticalField& phi,
                                 const VerticalField& psi, const BundleSpec& spec);

// Comparison of the two routes to the second variation:
// (a) Phi _| E(Phi _| E(lambda)) versus (b) delta^2 lambda, with the residual
// certified as an exact divergence R.
struct ComparisonReport {
    Expr route_contraction;  // (a)
    Expr route_variation;    // (b)
    Expr residual;           // (a) - (b)
    BoundaryCurrent R;
    Expr certificate_residual;  // residual - div(R); zero on success
    bool pass = false;
};
ComparisonReport verify_comparison_theorem(const Lagrangian& lag, const VerticalField& phi,
                                           const BundleSpec& spec);

// A background section: per field, an expression in the base coordinates.
struct SymbolicSection {
    std::vector<Expr> comps;
};

// Substitute the background jets into every coefficient.
LinDiffOp restrict_to_background(const LinDiffOp& J, const SymbolicSection& bg,
                                 const BundleSpec& spec);

// Substitute background jets into an arbitrary expression.
Expr on_background(const Expr& e, const SymbolicSection& bg, const BundleSpec& spec);

struct KernelTestOptions {
    double tol = 1e-8;
    double lo = 0.0;
    double hi = 6.283185307179586;
    int samples = 33;
};

struct KernelReport {
    bool background_critical = false;
    bool in_kernel = false;
    bool symbolic_zero = false;
    std::vector<Expr> residual;  // (J Phi)_i on the background
    double max_residual = 0.0;
};

// Evaluates J Phi on the background; exact zero, numerically zero within
// tolerance, or a nonzero residual.  Throws BackgroundNotCritical when the
// background fails E(lambda) = 0 beyond tolerance.
KernelReport kernel_test(const Lagrangian& lag, const VerticalField& phi,
                         const SymbolicSection& bg, const BundleSpec& spec,
                         const KernelTestOptions& opts = {});

}  // namespace varseq
