#include "varseq/noether.hpp"

#include <algorithm>

namespace varseq {

namespace {

// split a density into (terms containing parameters, parameter-free terms)
std::pair<Expr, Expr> split_param_part(const Expr& e) {
    std::vector<Expr> with, without;
    std::vector<Expr> terms = e.kind() == Kind::Sum ? e.kids() : std::vector<Expr>{e};
    if (e.is_zero()) terms.clear();
    for (const auto& t : terms) {
        bool has = false;
        for (const auto& k : keys_of(t))
            if (k.kind == Kind::Param) {
                has = true;
                break;
            }
        (has ? with : without).push_back(t);
    }
    return {Expr::add(std::move(with)), Expr::add(std::move(without))};
}

BoundaryCurrent reconstruct_symmetry_current(const Expr& r, const BundleSpec& spec) {
    auto [param_part, plain_part] = split_param_part(r);
    BoundaryCurrent W = BoundaryCurrent::zero(spec);
    bool param_done = false;
    if (!param_part.is_zero()) {
        std::set<int> ids;
        for (const auto& k : keys_of(param_part))
            if (k.kind == Kind::Param) ids.insert(k.idx);
        try {
            IBPResult ibp = integrate_by_parts(param_part, Bank::params(ids), spec);
            bool clean = true;
            for (const auto& [id, c] : ibp.adjoint) {
                (void)id;
                if (!c.is_zero()) clean = false;
            }
            if (clean) {
                W.accumulate(ibp.boundary);
                param_done = true;
            }
        } catch (const NotLinear&) {
            // fall through to the homotopy route
        }
    } else {
        param_done = true;
    }
    if (!param_done) return reconstruct_divergence(r, spec);
    if (!plain_part.is_zero()) W.accumulate(reconstruct_divergence(plain_part, spec));
    return W;
}

}  // namespace

SymmetryReport check_symmetry(const Lagrangian& lag, const std::vector<Expr>& xi,
                              const std::vector<Expr>& Xi, const BundleSpec& spec) {
    lag.validate(spec);
    SymmetryReport rep;
    rep.lie_density = lie_derivative_density(xi, Xi, lag.L, spec);
    rep.W = BoundaryCurrent::zero(spec);
    if (rep.lie_density.is_zero()) {
        rep.kind = SymmetryKind::Exact;
        return rep;
    }
    if (is_total_divergence(rep.lie_density, spec)) {
        rep.kind = SymmetryKind::Divergence;
        rep.W = reconstruct_symmetry_current(rep.lie_density, spec);
        return rep;
    }
    rep.kind = SymmetryKind::Broken;
    rep.obstruction = rep.lie_density;
    return rep;
}

SymmetryReport check_symmetry(const Lagrangian& lag, const ParamVectorField& X,
                              const BundleSpec& spec) {
    X.validate(spec);
    return check_symmetry(lag, X.xi, X.Xi, spec);
}

SymmetryReport check_symmetry(const Lagrangian& lag, const ProjVectorField& X,
                              const BundleSpec& spec) {
    X.validate(spec);
    return check_symmetry(lag, X.xi, X.Xi, spec);
}

NoetherCurrentResult noether_current(const Lagrangian& lag, const std::vector<Expr>& xi,
                                     const std::vector<Expr>& Xi, const BundleSpec& spec) {
    SymmetryReport sym = check_symmetry(lag, xi, Xi, spec);
    if (sym.kind == SymmetryKind::Broken)
        throw NotASymmetry("field is not a symmetry of the Lagrangian");

    FirstVariation fv = first_variation(lag, xi, Xi, spec);
    NoetherCurrentResult out;
    out.kind = sym.kind;
    out.current = fv.boundary;
    if (sym.kind == SymmetryKind::Divergence) out.current.accumulate(sym.W.negated());
    out.contracted = -fv.contracted;
    out.residual = divergence(out.current, spec) - out.contracted;
    return out;
}

Expr omega_lagrangian(const Lagrangian& lag, const ParamVectorField& X, const BundleSpec& spec) {
    lag.validate(spec);
    X.validate(spec);
    SourceExpression E = euler_lagrange(lag, spec);
    std::vector<Expr> pounds = lie_derivative_section(X, spec);
    std::vector<Expr> terms;
    for (int i = 0; i < spec.m; ++i)
        terms.push_back(pounds[static_cast<size_t>(i)] * E.comp[static_cast<size_t>(i)]);
    return Expr::add(std::move(terms));
}

BianchiReport bianchi_decompose(const Lagrangian& lag, const ParamVectorField& X,
                                const BundleSpec& spec) {
    BianchiReport rep;
    rep.omega = omega_lagrangian(lag, X, spec);
    rep.M = BoundaryCurrent::zero(spec);
    std::set<int> present;
    for (const auto& k : keys_of(rep.omega))
        if (k.kind == Kind::Param) present.insert(k.idx);
    if (present.empty()) {
        rep.degenerate = true;
        rep.residual = Expr::num(0);
        return rep;
    }
    int P = static_cast<int>(spec.params.size());
    Bank bank = Bank::param_range(0, P);
    IBPResult ibp = integrate_by_parts(rep.omega, bank, spec);
    rep.beta.assign(static_cast<size_t>(P), Expr::num(0));
    rep.zero.assign(static_cast<size_t>(P), true);
    for (const auto& [id, c] : ibp.adjoint) {
        rep.beta[static_cast<size_t>(id)] = c;
        rep.zero[static_cast<size_t>(id)] = c.is_zero();
        if (!c.is_zero()) rep.all_zero = false;
    }
    rep.M = ibp.boundary;
    rep.residual = ibp.certificate_residual(bank, spec);
    return rep;
}

namespace {

struct ProductMomenta {
    // mu -> ((field i, alpha) -> coefficient)
    std::vector<std::map<std::pair<int, MultiIndex>, Expr>> p_fields;
};

// Momenta of a generalized Lagrangian over the product bank: both field jets
// and parameter derivatives are varied.
ProductMomenta product_momenta(const Expr& omega, const BundleSpec& spec) {
    int base = scratch_param_base(spec, {omega});
    int P = static_cast<int>(spec.params.size());
    Bank bank = Bank::param_range(base, spec.m + P);
    std::vector<Expr> density;
    for (const auto& key : keys_of(omega)) {
        Expr d;
        int slot;
        if (key.kind == Kind::Jet) {
            slot = base + key.idx;
        } else if (key.kind == Kind::Param && key.idx < P) {
            slot = base + spec.m + key.idx;
        } else {
            continue;
        }
        d = partial(omega, key, spec.symbols);
        if (d.is_zero()) continue;
        density.push_back(d * Expr::parameter(slot, key.mi));
    }
    IBPResult ibp = integrate_by_parts(Expr::add(std::move(density)), bank, spec);
    ProductMomenta out;
    out.p_fields.resize(static_cast<size_t>(spec.n));
    for (int mu = 0; mu < spec.n; ++mu) {
        auto coeffs = linear_decompose(ibp.boundary.comp[static_cast<size_t>(mu)], bank);
        for (const auto& [key, c] : coeffs) {
            int id = key.idx - base;
            if (id < spec.m) out.p_fields[static_cast<size_t>(mu)][{id, key.mi}] = c;
            // parameter-slot momenta are contracted with a vanishing variation
        }
    }
    return out;
}

BoundaryCurrent hamiltonian_formula(const Lagrangian& lag, const ParamVectorField& X,
                                    const Expr& omega, const BundleSpec& spec) {
    (void)lag;
    ProductMomenta pm = product_momenta(omega, spec);
    std::vector<Expr> pounds = lie_derivative_section(X, spec);
    BoundaryCurrent H = BoundaryCurrent::zero(spec);
    for (int mu = 0; mu < spec.n; ++mu) {
        std::vector<Expr> acc;
        for (const auto& [key, c] : pm.p_fields[static_cast<size_t>(mu)]) {
            Expr d =
                iterated_total_derivative(pounds[static_cast<size_t>(key.first)], key.second, spec);
            acc.push_back(-(c * d));
        }
        H.comp[static_cast<size_t>(mu)] = Expr::add(std::move(acc));
    }
    return H;
}

}  // namespace

HamiltonianResult hamiltonian_current(const Lagrangian& lag, const ParamVectorField& X,
                                      const BundleSpec& spec) {
    BianchiReport br = bianchi_decompose(lag, X, spec);
    if (!br.all_zero) throw BianchiNonzero("generalized Bianchi expressions do not vanish");
    HamiltonianResult out;
    out.current = hamiltonian_formula(lag, X, br.omega, spec);
    out.div_residual = divergence(out.current, spec);
    return out;
}

HorizontalInvarianceReport verify_horizontal_invariance(const Lagrangian& lag,
                                                        const ParamVectorField& X,
                                                        const BundleSpec& spec) {
    BianchiReport br = bianchi_decompose(lag, X, spec);
    HorizontalInvarianceReport rep;
    std::vector<Expr> terms;
    for (int mu = 0; mu < spec.n; ++mu)
        terms.push_back(total_derivative(X.xi[static_cast<size_t>(mu)] * br.omega, mu, spec));
    rep.lie_horizontal = Expr::add(std::move(terms));
    BoundaryCurrent H = hamiltonian_formula(lag, X, br.omega, spec);
    rep.residual = rep.lie_horizontal + divergence(H, spec);
    rep.pass = rep.residual.is_zero();
    return rep;
}

}  // namespace varseq
