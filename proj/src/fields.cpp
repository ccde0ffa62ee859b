#include "varseq/fields.hpp"

#include <algorithm>

namespace varseq {

namespace {

bool param_linear(const Expr& e) {
    auto deg = poly_degree(e, [](const VarKey& k) { return k.kind == Kind::Param; });
    if (!deg) return false;
    if (*deg == 0) return e.is_zero();
    if (*deg != 1) return false;
    // every term must carry exactly one parameter factor
    std::vector<Expr> terms =
        e.kind() == Kind::Sum ? e.kids() : std::vector<Expr>{e};
    for (const auto& t : terms) {
        auto d = poly_degree(t, [](const VarKey& k) { return k.kind == Kind::Param; });
        if (!d || *d != 1) return false;
    }
    return true;
}

// parameter-free, or of parameter degree exactly one in every term
bool param_homogeneous(const Expr& e) {
    if (e.is_zero()) return true;
    auto deg = poly_degree(e, [](const VarKey& k) { return k.kind == Kind::Param; });
    if (!deg) return false;
    if (*deg == 0) return true;
    return param_linear(e);
}

bool has_key_kind(const Expr& e, Kind kind) {
    for (const auto& k : keys_of(e))
        if (k.kind == kind) return true;
    return false;
}

}  // namespace

void ProjVectorField::validate(const BundleSpec& spec) const {
    if (static_cast<int>(xi.size()) != spec.n || static_cast<int>(Xi.size()) != spec.m)
        throw EngineError("projectable field: component count mismatch");
    for (const auto& c : xi) {
        if (has_key_kind(c, Kind::Jet) || has_key_kind(c, Kind::Param))
            throw EngineError("projectable field: xi must depend on base coordinates only");
    }
    for (const auto& c : Xi) {
        if (has_key_kind(c, Kind::Param))
            throw EngineError("projectable field: Xi must not contain parameters");
        if (jet_order(c) > 0)
            throw EngineError("projectable field: Xi must be order zero in jets");
    }
}

void ParamVectorField::validate(const BundleSpec& spec) const {
    if (static_cast<int>(xi.size()) != spec.n || static_cast<int>(Xi.size()) != spec.m)
        throw EngineError("parameter field: component count mismatch");
    for (const auto& c : xi) {
        if (has_key_kind(c, Kind::Jet))
            throw EngineError("parameter field: xi must not contain jet variables");
        if (!param_homogeneous(c))
            throw EngineError("parameter field: xi components must be parameter-linear");
    }
    for (const auto& c : Xi) {
        if (!param_homogeneous(c))
            throw EngineError("parameter field: Xi components must be parameter-linear");
    }
    for (const auto& c : Xi) {
        for (const auto& k : keys_of(c)) {
            if (k.kind == Kind::Param && k.mi.order() > lift_order)
                throw EngineError("parameter field: eps derivative order exceeds lift order");
        }
    }
}

Expr ProlongedField::component(int i, const MultiIndex& a) const {
    auto it = comp.find({i, a});
    if (it == comp.end()) throw EngineError("prolonged field: component beyond order");
    return it->second;
}

Expr ProlongedField::vertical(int i, const MultiIndex& a, const BundleSpec& spec) const {
    Expr v = component(i, a);
    for (int g = 0; g < spec.n; ++g) {
        if (xi[static_cast<size_t>(g)].is_zero()) continue;
        v = v - Expr::jet(i, a.plus(g)) * xi[static_cast<size_t>(g)];
    }
    return v;
}

VectorData ProlongedField::contraction_data(const BundleSpec& spec) const {
    (void)spec;
    VectorData d;
    d.xi = xi;
    d.comp = comp;
    return d;
}

ProlongedField prolong(const std::vector<Expr>& xi, const std::vector<Expr>& Xi, int s,
                       const BundleSpec& spec) {
    if (s > spec.cap()) throw OrderOverflow("prolongation order exceeds cap");
    ProlongedField P;
    P.xi = xi;
    P.Xi0 = Xi;
    P.order = s;
    // D_sigma xi^mu, reused across the recursion
    std::vector<std::vector<Expr>> dxi(static_cast<size_t>(spec.n),
                                       std::vector<Expr>(static_cast<size_t>(spec.n)));
    for (int sg = 0; sg < spec.n; ++sg)
        for (int mu = 0; mu < spec.n; ++mu)
            dxi[static_cast<size_t>(sg)][static_cast<size_t>(mu)] =
                total_derivative(xi[static_cast<size_t>(mu)], sg, spec);
    for (int i = 0; i < spec.m; ++i)
        P.comp[{i, MultiIndex(spec.n)}] = Xi[static_cast<size_t>(i)];
    for (int k = 1; k <= s; ++k) {
        for (const auto& a : multiindices_of_order(spec.n, k)) {
            int sg = a.smallest_dir();
            MultiIndex b(spec.n);
            a.minus(MultiIndex::unit(spec.n, sg), b);
            for (int i = 0; i < spec.m; ++i) {
                Expr prev = P.comp.at({i, b});
                Expr v = total_derivative(prev, sg, spec);
                for (int mu = 0; mu < spec.n; ++mu) {
                    const Expr& d = dxi[static_cast<size_t>(sg)][static_cast<size_t>(mu)];
                    if (d.is_zero()) continue;
                    v = v - Expr::jet(i, b.plus(mu)) * d;
                }
                P.comp[{i, a}] = v;
            }
        }
    }
    return P;
}

ProlongedField prolong(const ProjVectorField& X, int s, const BundleSpec& spec) {
    return prolong(X.xi, X.Xi, s, spec);
}

ProlongedField prolong(const ParamVectorField& X, int s, const BundleSpec& spec) {
    return prolong(X.xi, X.Xi, s, spec);
}

SplitField split(const ProlongedField& X, const BundleSpec& spec) {
    SplitField r;
    r.horizontal = X.xi;
    for (const auto& [key, unused] : X.comp)
        r.vertical[key] = X.vertical(key.first, key.second, spec);
    return r;
}

std::vector<Expr> lie_derivative_section(const std::vector<Expr>& xi, const std::vector<Expr>& Xi,
                                         const BundleSpec& spec) {
    std::vector<Expr> out;
    out.reserve(static_cast<size_t>(spec.m));
    for (int i = 0; i < spec.m; ++i) {
        Expr v = -Xi[static_cast<size_t>(i)];
        for (int mu = 0; mu < spec.n; ++mu)
            v = v + xi[static_cast<size_t>(mu)] * Expr::jet(i, MultiIndex::unit(spec.n, mu));
        out.push_back(v);
    }
    return out;
}

std::vector<Expr> lie_derivative_section(const ParamVectorField& X, const BundleSpec& spec) {
    return lie_derivative_section(X.xi, X.Xi, spec);
}

std::vector<Expr> lie_derivative_section(const ProjVectorField& X, const BundleSpec& spec) {
    return lie_derivative_section(X.xi, X.Xi, spec);
}

Form lie_derivative_form(const ProlongedField& X, const Form& w, const BundleSpec& spec) {
    int need = 0;
    for (const auto& [gens, c] : w.terms()) {
        need = std::max(need, jet_order(c));
        for (const auto& g : gens)
            if (g.contact) need = std::max(need, g.mi.order());
    }
    ProlongedField Y = X;
    if (X.order < need + 1) Y = prolong(X.xi, X.Xi0, need + 1, spec);
    VectorData d = Y.contraction_data(spec);
    Form dw = d_H(w, spec) + d_V(w, spec);
    Form iw = interior_product(d, w, spec);
    Form diw = d_H(iw, spec) + d_V(iw, spec);
    return interior_product(d, dw, spec) + diw;
}

Expr lie_derivative_density(const std::vector<Expr>& xi, const std::vector<Expr>& Xi,
                            const Expr& L, const BundleSpec& spec) {
    int s = jet_order(L);
    ProlongedField P = prolong(xi, Xi, s, spec);
    std::vector<Expr> terms;
    for (int mu = 0; mu < spec.n; ++mu) {
        const Expr& x = xi[static_cast<size_t>(mu)];
        if (!x.is_zero()) terms.push_back(x * partial(L, VarKey::coordinate(mu), spec.symbols));
    }
    for (const auto& key : keys_of(L)) {
        if (key.kind != Kind::Jet) continue;
        Expr c = P.component(key.idx, key.mi);
        if (c.is_zero()) continue;
        terms.push_back(c * partial(L, key, spec.symbols));
    }
    for (int mu = 0; mu < spec.n; ++mu) {
        Expr d = total_derivative(xi[static_cast<size_t>(mu)], mu, spec);
        if (!d.is_zero()) terms.push_back(L * d);
    }
    return Expr::add(std::move(terms));
}

// ---------------------------------------------------------------------------
// Lift generators

ParamVectorField abelian_gauge_lift(const BundleSpec& spec, const std::vector<int>& A_fields,
                                    int gauge_param) {
    ParamVectorField X;
    X.name = "gauge";
    X.xi.assign(static_cast<size_t>(spec.n), Expr::num(0));
    X.Xi.assign(static_cast<size_t>(spec.m), Expr::num(0));
    for (int mu = 0; mu < spec.n; ++mu) {
        int f = A_fields[static_cast<size_t>(mu)];
        X.Xi[static_cast<size_t>(f)] = Expr::parameter(gauge_param, MultiIndex::unit(spec.n, mu));
    }
    return X;
}

ParamVectorField natural_covector_lift(const BundleSpec& spec, const std::vector<int>& A_fields,
                                       const std::vector<int>& flow_params) {
    ParamVectorField X;
    X.name = "diffeo";
    X.xi.assign(static_cast<size_t>(spec.n), Expr::num(0));
    X.Xi.assign(static_cast<size_t>(spec.m), Expr::num(0));
    for (int s = 0; s < spec.n; ++s)
        X.xi[static_cast<size_t>(s)] =
            Expr::parameter(flow_params[static_cast<size_t>(s)], MultiIndex(spec.n));
    for (int mu = 0; mu < spec.n; ++mu) {
        int f = A_fields[static_cast<size_t>(mu)];
        std::vector<Expr> terms;
        for (int lam = 0; lam < spec.n; ++lam) {
            terms.push_back(-(Expr::jet(A_fields[static_cast<size_t>(lam)], MultiIndex(spec.n)) *
                              Expr::parameter(flow_params[static_cast<size_t>(lam)],
                                              MultiIndex::unit(spec.n, mu))));
        }
        X.Xi[static_cast<size_t>(f)] = Expr::add(std::move(terms));
    }
    return X;
}

ParamVectorField natural_metric_lift(const BundleSpec& spec,
                                     const std::vector<std::vector<int>>& g_field,
                                     const std::vector<int>& flow_params) {
    ParamVectorField X;
    X.name = "diffeo";
    X.xi.assign(static_cast<size_t>(spec.n), Expr::num(0));
    X.Xi.assign(static_cast<size_t>(spec.m), Expr::num(0));
    for (int s = 0; s < spec.n; ++s)
        X.xi[static_cast<size_t>(s)] =
            Expr::parameter(flow_params[static_cast<size_t>(s)], MultiIndex(spec.n));
    for (int mu = 0; mu < spec.n; ++mu) {
        for (int nu = mu; nu < spec.n; ++nu) {
            int f = g_field[static_cast<size_t>(mu)][static_cast<size_t>(nu)];
            std::vector<Expr> terms;
            for (int lam = 0; lam < spec.n; ++lam) {
                Expr g_ln = Expr::jet(g_field[static_cast<size_t>(std::min(lam, nu))]
                                             [static_cast<size_t>(std::max(lam, nu))],
                                      MultiIndex(spec.n));
                Expr g_ml = Expr::jet(g_field[static_cast<size_t>(std::min(mu, lam))]
                                             [static_cast<size_t>(std::max(mu, lam))],
                                      MultiIndex(spec.n));
                terms.push_back(-(g_ln * Expr::parameter(flow_params[static_cast<size_t>(lam)],
                                                         MultiIndex::unit(spec.n, mu))));
                terms.push_back(-(g_ml * Expr::parameter(flow_params[static_cast<size_t>(lam)],
                                                         MultiIndex::unit(spec.n, nu))));
            }
            X.Xi[static_cast<size_t>(f)] = Expr::add(std::move(terms));
        }
    }
    return X;
}

ParamVectorField combine_lifts(const ParamVectorField& a, const ParamVectorField& b) {
    ParamVectorField r = a;
    r.name = a.name + "+" + b.name;
    for (size_t s = 0; s < r.xi.size(); ++s) r.xi[s] = r.xi[s] + b.xi[s];
    for (size_t i = 0; i < r.Xi.size(); ++i) r.Xi[i] = r.Xi[i] + b.Xi[i];
    r.lift_order = std::max(a.lift_order, b.lift_order);
    return r;
}

// ---------------------------------------------------------------------------
// Lift property checks

namespace {

// First-order action of a field on a function of (x, y-order-0, eps-jets):
// X(f) = xi^tau Dbp_tau f + Xi^j d f / d y^j, where Dbp transports base
// coordinates and parameter derivatives but treats jets as constants.
Expr apply_field(const std::vector<Expr>& xi, const std::vector<Expr>& Xi, const Expr& f,
                 const BundleSpec& spec) {
    if (jet_order(f) > 0) {
        for (const auto& k : keys_of(f))
            if (k.kind == Kind::Jet && k.mi.order() > 0)
                throw NotSupported("bracket check requires order-zero lift coefficients");
    }
    std::vector<Expr> terms;
    for (int tau = 0; tau < spec.n; ++tau) {
        if (xi[static_cast<size_t>(tau)].is_zero()) continue;
        Expr d = derive(
            f,
            [&](const VarKey& k) -> Expr {
                switch (k.kind) {
                    case Kind::Coord: return k.idx == tau ? Expr::num(1) : Expr::num(0);
                    case Kind::Param: {
                        MultiIndex a = k.mi.plus(tau);
                        if (a.order() > spec.cap()) throw OrderOverflow("bracket exceeds cap");
                        return Expr::parameter(k.idx, a);
                    }
                    case Kind::Jet: return Expr::num(0);
                    default: return Expr::num(0);
                }
            },
            spec.symbols);
        if (!d.is_zero()) terms.push_back(xi[static_cast<size_t>(tau)] * d);
    }
    for (int j = 0; j < spec.m; ++j) {
        if (Xi[static_cast<size_t>(j)].is_zero()) continue;
        Expr d = partial(f, VarKey::jet(j, MultiIndex(spec.n)), spec.symbols);
        if (!d.is_zero()) terms.push_back(Xi[static_cast<size_t>(j)] * d);
    }
    return Expr::add(std::move(terms));
}

}  // namespace

LiftCheckReport check_lift_properties(const ParamVectorField& rule, const BundleSpec& spec) {
    LiftCheckReport rep;
    int P = static_cast<int>(spec.params.size());

    // 1. linearity over the parameter bank
    rep.linear = true;
    for (const auto& c : rule.xi)
        if (!c.is_zero() && !param_linear(c)) rep.linear = false;
    for (const auto& c : rule.Xi)
        if (!c.is_zero() && !param_linear(c)) rep.linear = false;

    // 2. projection compatibility: xi built from base-flagged parameters with
    // base-only coefficients; identify the flow parameter per direction.
    rep.projectable = true;
    std::vector<int> flow(static_cast<size_t>(spec.n), -1);
    for (int s = 0; s < spec.n; ++s) {
        const Expr& x = rule.xi[static_cast<size_t>(s)];
        if (x.is_zero()) continue;
        if (has_key_kind(x, Kind::Jet)) {
            rep.projectable = false;
            continue;
        }
        if (x.kind() == Kind::Param && x.mi().order() == 0 &&
            spec.params[static_cast<size_t>(x.index())].base_flag) {
            flow[static_cast<size_t>(s)] = x.index();
        } else {
            rep.projectable = false;
        }
    }

    if (!rep.linear || !rep.projectable) {
        rep.detail = "linearity or projection compatibility failed; bracket check skipped";
        return rep;
    }

    // 3. bracket closure on two independent banks
    auto shift = [&](const Expr& e, int off) {
        return rename_params(e, [&](int p) { return p + off; });
    };
    std::vector<Expr> xa, Xa, xb, Xb;
    for (const auto& c : rule.xi) {
        xa.push_back(shift(c, P));
        xb.push_back(shift(c, 2 * P));
    }
    for (const auto& c : rule.Xi) {
        Xa.push_back(shift(c, P));
        Xb.push_back(shift(c, 2 * P));
    }

    // canonical bracket parameter: zeta = xi_a(eps_b) - xi_b(eps_a); for the
    // base-flagged slots this is the usual vector-field bracket.
    std::vector<Expr> zeta(static_cast<size_t>(P), Expr::num(0));
    for (int A = 0; A < P; ++A) {
        Expr z = Expr::num(0);
        for (int tau = 0; tau < spec.n; ++tau) {
            int fp = flow[static_cast<size_t>(tau)];
            if (fp < 0) continue;
            Expr a_tau = Expr::parameter(fp + P, MultiIndex(spec.n));
            Expr b_tau = Expr::parameter(fp + 2 * P, MultiIndex(spec.n));
            z = z + a_tau * Expr::parameter(A + 2 * P, MultiIndex::unit(spec.n, tau)) -
                b_tau * Expr::parameter(A + P, MultiIndex::unit(spec.n, tau));
        }
        zeta[static_cast<size_t>(A)] = z;
    }
    auto expect = [&](const Expr& comp) {
        std::map<VarKey, Expr> b;
        for (const auto& k : keys_of(comp)) {
            if (k.kind != Kind::Param) continue;
            b[k] = iterated_total_derivative(zeta[static_cast<size_t>(k.idx)], k.mi, spec);
        }
        return substitute(comp, b);
    };

    rep.closure = true;
    for (int s = 0; s < spec.n; ++s) {
        Expr z = apply_field(xa, Xa, xb[static_cast<size_t>(s)], spec) -
                 apply_field(xb, Xb, xa[static_cast<size_t>(s)], spec);
        Expr res = z - expect(rule.xi[static_cast<size_t>(s)]);
        rep.residual_xi.push_back(res);
        if (!res.is_zero()) rep.closure = false;
    }
    for (int i = 0; i < spec.m; ++i) {
        Expr z = apply_field(xa, Xa, Xb[static_cast<size_t>(i)], spec) -
                 apply_field(xb, Xb, Xa[static_cast<size_t>(i)], spec);
        Expr res = z - expect(rule.Xi[static_cast<size_t>(i)]);
        rep.residual_Xi.push_back(res);
        if (!res.is_zero()) rep.closure = false;
    }
    rep.detail = rep.closure ? "bracket closure holds" : "bracket closure residual nonzero";
    return rep;
}

}  // namespace varseq
