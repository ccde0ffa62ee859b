#pragma once

#include "varseq/fields.hpp"

#include <map>
#include <set>
#include <tuple>
#include <vector>

namespace varseq {

// Lagrangian density L of the top form L ds; no parameters, no contact part.
struct Lagrangian {
    Expr L;
    void validate(const BundleSpec& spec) const;
};

// Components E_i of the source form E_i theta^i ^ ds.
struct SourceExpression {
    std::vector<Expr> comp;
};

// Components P^mu of the horizontal (n-1)-form P^mu ds_mu.
struct BoundaryCurrent {
    std::vector<Expr> comp;

    static BoundaryCurrent zero(const BundleSpec& spec) {
        return {std::vector<Expr>(static_cast<size_t>(spec.n), Expr::num(0))};
    }
    BoundaryCurrent& accumulate(const BoundaryCurrent& o) {
        for (size_t i = 0; i < comp.size(); ++i) comp[i] = comp[i] + o.comp[i];
        return *this;
    }
    BoundaryCurrent negated() const {
        BoundaryCurrent r = *this;
        for (auto& c : r.comp) c = -c;
        return r;
    }
};

// Sum_mu D_mu P^mu.
Expr divergence(const BoundaryCurrent& P, const BundleSpec& spec);

// A designated linear variable bank: either parameter functions or the jets
// of a chosen field set.
struct Bank {
    enum class Type { Params, Fields };
    Type type = Type::Params;
    std::set<int> ids;

    static Bank params(std::set<int> ids) { return {Type::Params, std::move(ids)}; }
    static Bank fields(std::set<int> ids) { return {Type::Fields, std::move(ids)}; }
    static Bank param_range(int first, int count);

    bool contains(const VarKey& k) const {
        Kind want = type == Type::Params ? Kind::Param : Kind::Jet;
        return k.kind == want && ids.count(k.idx) > 0;
    }
    VarKey root_key(int id, const BundleSpec& spec) const {
        return type == Type::Params ? VarKey::parameter(id, MultiIndex(spec.n))
                                    : VarKey::jet(id, MultiIndex(spec.n));
    }
};

// density = Sum_id adjoint[id] * (bank variable at order zero) + D_mu boundary^mu,
// certified by exact re-expansion.
struct IBPResult {
    std::map<int, Expr> adjoint;
    BoundaryCurrent boundary;
    Expr input;
    // residual of the certificate; the zero expression on success
    Expr certificate_residual(const Bank& bank, const BundleSpec& spec) const;
};

IBPResult integrate_by_parts(const Expr& density, const Bank& bank, const BundleSpec& spec);

// Decompose a bank-linear expression into per-key coefficients.  The bank-free
// remainder is returned under a default-constructed key entry via `rest`.
std::map<VarKey, Expr> linear_decompose(const Expr& e, const Bank& bank, Expr* rest = nullptr);

// Euler operator with respect to one root variable (a field or a parameter
// treated as a field): Sum_alpha (-1)^|alpha| D_alpha (d rho / d v_alpha).
Expr euler_operator(const Expr& density, Kind kind, int id, const BundleSpec& spec);

// E_i = Sum_alpha (-1)^|alpha| D_alpha (dL/dy^i_alpha).
SourceExpression euler_lagrange(const Lagrangian& lag, const BundleSpec& spec);

// Momentum coefficients p^{mu,alpha}_i of the splitting
// d_V lambda = E - d_H(p^{mu,alpha}_i theta^i_alpha ^ ds_mu).
struct Momenta {
    // mu -> ((i, alpha) -> coefficient)
    std::vector<std::map<std::pair<int, MultiIndex>, Expr>> p;
    Expr at(int mu, int i, const MultiIndex& a) const;
};
Momenta momenta(const Lagrangian& lag, const BundleSpec& spec);

// First variation along a projectable (possibly parameter-dependent) field:
// h(L_{j_s X} lambda) = contracted + D_mu P^mu with contracted = -pounds^i E_i
// and P = -j_s pounds _| p + xi _| lambda.  `residual` re-expands the
// certificate and is the zero expression on success.
struct FirstVariation {
    Expr contracted;
    BoundaryCurrent boundary;
    Expr lie_density;
    Expr residual;
};
FirstVariation first_variation(const Lagrangian& lag, const std::vector<Expr>& xi,
                               const std::vector<Expr>& Xi, const BundleSpec& spec);

// Null-Lagrangian test: the Euler operators with respect to every field and
// every occurring parameter annihilate the density.
bool is_total_divergence(const Expr& density, const BundleSpec& spec);

// Exact reconstruction of W with density = D_mu W^mu for a density that is
// polynomial in jets and parameters and annihilated by all Euler operators.
// Throws NotSupported outside that class.
BoundaryCurrent reconstruct_divergence(const Expr& density, const BundleSpec& spec);

// First parameter id safely usable as a scratch bank in computations that
// involve the given expressions.
int scratch_param_base(const BundleSpec& spec, const std::vector<Expr>& involved);

}  // namespace varseq
