#pragma once

#include "varseq/forms.hpp"

#include <map>
#include <string>
#include <vector>

namespace varseq {

// Projectable vector field: xi over the base (n entries, base coordinates
// only), Xi over the fiber (m entries, order-zero jets).
struct ProjVectorField {
    std::vector<Expr> xi;
    std::vector<Expr> Xi;
    void validate(const BundleSpec& spec) const;
};

// Parameter-linear projectable field: the concrete face of a gauge-natural
// lift.  Components are linear in the parameter derivatives eps^A_alpha, with
// base-only coefficients in xi and jet coefficients up to the declared lift
// order in Xi.
struct ParamVectorField {
    std::vector<Expr> xi;
    std::vector<Expr> Xi;
    std::string name;
    int lift_order = 1;  // bounds |alpha| in eps^A_alpha occurrences
    void validate(const BundleSpec& spec) const;
};

// Vertical field used as a variation direction; comps are the fiber
// components (xi = 0).  `bank` lists the parameter ids the field is built
// from (empty for concrete fields).
struct VerticalField {
    std::vector<Expr> comps;
    std::set<int> bank;
};

// Prolongation of a projectable field: Xi^i_alpha for |alpha| <= order,
// computed by Xi_{alpha+sigma} = D_sigma Xi_alpha - y^i_{alpha+mu} D_sigma xi^mu.
struct ProlongedField {
    std::vector<Expr> xi;
    std::vector<Expr> Xi0;
    std::map<std::pair<int, MultiIndex>, Expr> comp;
    int order = 0;

    Expr component(int i, const MultiIndex& a) const;
    // Vertical component Xi^i_alpha - y^i_{alpha+gamma} xi^gamma.
    Expr vertical(int i, const MultiIndex& a, const BundleSpec& spec) const;
    VectorData contraction_data(const BundleSpec& spec) const;
};

ProlongedField prolong(const std::vector<Expr>& xi, const std::vector<Expr>& Xi, int s,
                       const BundleSpec& spec);
ProlongedField prolong(const ProjVectorField& X, int s, const BundleSpec& spec);
ProlongedField prolong(const ParamVectorField& X, int s, const BundleSpec& spec);

// Horizontal/vertical splitting of a prolonged field.
struct SplitField {
    std::vector<Expr> horizontal;                          // xi^gamma
    std::map<std::pair<int, MultiIndex>, Expr> vertical;   // per (i, alpha)
};
SplitField split(const ProlongedField& X, const BundleSpec& spec);

// Generalized Lie derivative of sections: components of the fibered morphism,
// pounds^i = xi^mu y^i_mu - Xi^i.
std::vector<Expr> lie_derivative_section(const std::vector<Expr>& xi, const std::vector<Expr>& Xi,
                                         const BundleSpec& spec);
std::vector<Expr> lie_derivative_section(const ParamVectorField& X, const BundleSpec& spec);
std::vector<Expr> lie_derivative_section(const ProjVectorField& X, const BundleSpec& spec);

// Lie derivative of a form along a prolonged field, via the Cartan formula
// in the (theta, dx) algebra.
Form lie_derivative_form(const ProlongedField& X, const Form& w, const BundleSpec& spec);

// Horizontalized Lie derivative of a Lagrangian density:
// h(L_{j_s X}(L ds)) = (j_s X(L) + L D_mu xi^mu) ds.
Expr lie_derivative_density(const std::vector<Expr>& xi, const std::vector<Expr>& Xi,
                            const Expr& L, const BundleSpec& spec);

// ---------------------------------------------------------------------------
// Built-in lift rule generators

// Abelian gauge lift on a covector-valued field: delta A_mu = d_mu eps.
// A_fields[mu] is the field index of A_mu; gauge_param the parameter id.
ParamVectorField abelian_gauge_lift(const BundleSpec& spec, const std::vector<int>& A_fields,
                                    int gauge_param);

// Natural lift of base flows to a covector field:
// xi^sigma = eps^sigma, Xi_{A_mu} = -A_lambda d_mu eps^lambda.
// flow_params[sigma] is the (base-flagged) parameter id carrying xi^sigma.
ParamVectorField natural_covector_lift(const BundleSpec& spec, const std::vector<int>& A_fields,
                                       const std::vector<int>& flow_params);

// Natural lift of base flows to a symmetric metric g_{mu nu}; g_field[mu][nu]
// holds the field index of the (mu,nu) component (symmetric storage).
ParamVectorField natural_metric_lift(const BundleSpec& spec,
                                     const std::vector<std::vector<int>>& g_field,
                                     const std::vector<int>& flow_params);

// Componentwise sum of two lifts over the same bundle.
ParamVectorField combine_lifts(const ParamVectorField& a, const ParamVectorField& b);

// ---------------------------------------------------------------------------
// Lift property verification (linearity, projection compatibility, bracket
// closure against the canonical bracket on parameters).

struct LiftCheckReport {
    bool linear = false;
    bool projectable = false;
    bool closure = false;
    std::vector<Expr> residual_xi;  // bracket-closure residuals
    std::vector<Expr> residual_Xi;
    std::string detail;
    bool pass() const { return linear && projectable && closure; }
};

LiftCheckReport check_lift_properties(const ParamVectorField& rule, const BundleSpec& spec);

}  // namespace varseq
