#pragma once

#include "varseq/jacobi.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varseq {

enum class SymmetryKind { Exact, Divergence, Broken };

struct SymmetryReport {
    SymmetryKind kind = SymmetryKind::Broken;
    Expr lie_density;    // h(L_{j_s X} lambda)
    BoundaryCurrent W;   // reconstructed current for a divergence symmetry
    Expr obstruction;    // the residual density when broken
};

SymmetryReport check_symmetry(const Lagrangian& lag, const std::vector<Expr>& xi,
                              const std::vector<Expr>& Xi, const BundleSpec& spec);
SymmetryReport check_symmetry(const Lagrangian& lag, const ParamVectorField& X,
                              const BundleSpec& spec);
SymmetryReport check_symmetry(const Lagrangian& lag, const ProjVectorField& X,
                              const BundleSpec& spec);

// Noether current eps^mu = -(j_s pounds _| p) + xi _| lambda - W, with the
// strong identity D_mu eps^mu = pounds _| E(lambda) certified exactly.
struct NoetherCurrentResult {
    BoundaryCurrent current;
    Expr contracted;  // Sum_i pounds^i E_i
    Expr residual;    // div(current) - contracted; the zero expression
    SymmetryKind kind = SymmetryKind::Exact;
};
NoetherCurrentResult noether_current(const Lagrangian& lag, const std::vector<Expr>& xi,
                                     const std::vector<Expr>& Xi, const BundleSpec& spec);

// omega = pounds _| E(lambda) as a density, linear in the parameter bank.
Expr omega_lagrangian(const Lagrangian& lag, const ParamVectorField& X, const BundleSpec& spec);

// Noether's second theorem: omega = Sum_A beta_A eps^A + D_mu M^mu.
struct BianchiReport {
    Expr omega;
    std::vector<Expr> beta;    // per declared parameter
    std::vector<bool> zero;    // verdict per parameter
    BoundaryCurrent M;
    Expr residual;             // exact re-expansion check; the zero expression
    bool all_zero = true;
    bool degenerate = false;   // no parameters in omega: nothing to decompose
};
BianchiReport bianchi_decompose(const Lagrangian& lag, const ParamVectorField& X,
                                const BundleSpec& spec);

// Hamiltonian current H^mu = -(j_s pounds _| p_{D_V omega}) over the product
// bank (fields and parameters); requires all beta_A = 0.
struct HamiltonianResult {
    BoundaryCurrent current;
    Expr div_residual;  // normalized D_mu H^mu; the zero expression on conservation
};
HamiltonianResult hamiltonian_current(const Lagrangian& lag, const ParamVectorField& X,
                                      const BundleSpec& spec);

// L along the horizontal part of X applied to the omega density, certified
// against -D_H of the Hamiltonian current.
struct HorizontalInvarianceReport {
    Expr lie_horizontal;  // Sum_mu D_mu(xi^mu omega)
    Expr residual;        // lie_horizontal + div(H)
    bool pass = false;
};
HorizontalInvarianceReport verify_horizontal_invariance(const Lagrangian& lag,
                                                        const ParamVectorField& X,
                                                        const BundleSpec& spec);

}  // namespace varseq
