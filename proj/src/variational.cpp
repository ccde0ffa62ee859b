#include "varseq/variational.hpp"

#include <algorithm>

namespace varseq {

void Lagrangian::validate(const BundleSpec& spec) const {
    for (const auto& k : keys_of(L)) {
        if (k.kind == Kind::Param)
            throw EngineError("Lagrangian must not contain parameter functions");
        if (k.kind == Kind::Jet && k.mi.order() > spec.s_max)
            throw OrderOverflow("Lagrangian exceeds declared jet order s_max");
    }
}

Expr divergence(const BoundaryCurrent& P, const BundleSpec& spec) {
    std::vector<Expr> terms;
    for (int mu = 0; mu < spec.n; ++mu)
        terms.push_back(total_derivative(P.comp[static_cast<size_t>(mu)], mu, spec));
    return Expr::add(std::move(terms));
}

Bank Bank::param_range(int first, int count) {
    std::set<int> ids;
    for (int i = 0; i < count; ++i) ids.insert(first + i);
    return params(std::move(ids));
}

std::map<VarKey, Expr> linear_decompose(const Expr& e, const Bank& bank, Expr* rest) {
    std::map<VarKey, Expr> out;
    std::vector<Expr> remainder;
    std::vector<Expr> terms = e.kind() == Kind::Sum ? e.kids() : std::vector<Expr>{e};
    if (e.is_zero()) terms.clear();
    for (const auto& t : terms) {
        // locate the unique bank factor of this term
        std::vector<Expr> factors = t.kind() == Kind::Prod ? t.kids() : std::vector<Expr>{t};
        int found = -1;
        for (size_t f = 0; f < factors.size(); ++f) {
            if (factors[f].is_var() && bank.contains(factors[f].var_key())) {
                if (found >= 0) throw NotLinear("term is quadratic in the designated bank");
                found = static_cast<int>(f);
            } else {
                auto d = poly_degree(factors[f], [&](const VarKey& k) { return bank.contains(k); });
                if (!d || *d != 0)
                    throw NotLinear("bank variable occurs non-linearly inside a term");
            }
        }
        if (found < 0) {
            remainder.push_back(t);
            continue;
        }
        VarKey key = factors[static_cast<size_t>(found)].var_key();
        std::vector<Expr> rest_factors;
        for (size_t f = 0; f < factors.size(); ++f)
            if (f != static_cast<size_t>(found)) rest_factors.push_back(factors[f]);
        Expr coeff = rest_factors.empty() ? Expr::num(1) : Expr::mul(std::move(rest_factors));
        auto it = out.find(key);
        if (it == out.end())
            out.emplace(key, coeff);
        else
            it->second = it->second + coeff;
    }
    if (rest) *rest = Expr::add(std::move(remainder));
    return out;
}

IBPResult integrate_by_parts(const Expr& density, const Bank& bank, const BundleSpec& spec) {
    // linearity precondition: every term has bank degree exactly one
    if (!density.is_zero()) {
        std::vector<Expr> terms =
            density.kind() == Kind::Sum ? density.kids() : std::vector<Expr>{density};
        for (const auto& t : terms) {
            auto d = poly_degree(t, [&](const VarKey& k) { return bank.contains(k); });
            if (!d || *d != 1)
                throw NotLinear("integrate_by_parts: density is not linear in the bank");
        }
    }

    IBPResult out;
    out.input = density;
    out.boundary = BoundaryCurrent::zero(spec);
    Expr work = density;
    for (;;) {
        poll_cancellation();
        auto coeffs = linear_decompose(work, bank);
        // peeling target: highest order first, within it the canonically first
        // multi-index (lexicographically largest of its grade), then the
        // smallest root id
        bool have = false;
        VarKey target;
        for (const auto& [key, c] : coeffs) {
            (void)c;
            if (key.mi.order() == 0) continue;
            if (!have) {
                target = key;
                have = true;
                continue;
            }
            int to = target.mi.order(), ko = key.mi.order();
            if (ko > to || (ko == to && (cmp(key.mi, target.mi) < 0 ||
                                         (key.mi == target.mi && key.idx < target.idx))))
                target = key;
        }
        if (!have) break;
        Expr C = coeffs.at(target);
        int sg = target.mi.smallest_dir();
        MultiIndex beta(spec.n);
        target.mi.minus(MultiIndex::unit(spec.n, sg), beta);
        VarKey lower = target;
        lower.mi = beta;
        Expr lower_var = Expr::variable(lower);
        // C v_{beta+sg} = D_sg(C v_beta) - D_sg(C) v_beta
        out.boundary.comp[static_cast<size_t>(sg)] =
            out.boundary.comp[static_cast<size_t>(sg)] + C * lower_var;
        work = work - C * Expr::variable(target) - total_derivative(C, sg, spec) * lower_var;
    }
    Expr rest;
    auto final_coeffs = linear_decompose(work, bank, &rest);
    if (!rest.is_zero()) throw EngineError("integrate_by_parts: non-bank remainder");
    for (const auto& [key, c] : final_coeffs) out.adjoint[key.idx] = c;
    return out;
}

Expr IBPResult::certificate_residual(const Bank& bank, const BundleSpec& spec) const {
    Expr claim = divergence(boundary, spec);
    std::vector<Expr> terms{claim};
    for (const auto& [id, c] : adjoint)
        terms.push_back(c * Expr::variable(bank.root_key(id, spec)));
    return input - Expr::add(std::move(terms));
}

Expr euler_operator(const Expr& density, Kind kind, int id, const BundleSpec& spec) {
    std::vector<Expr> terms;
    for (const auto& key : keys_of(density)) {
        if (key.kind != kind || key.idx != id) continue;
        poll_cancellation();
        Expr d = partial(density, key, spec.symbols);
        if (d.is_zero()) continue;
        Expr t = iterated_total_derivative(d, key.mi, spec);
        terms.push_back(key.mi.order() % 2 == 0 ? t : -t);
    }
    return Expr::add(std::move(terms));
}

SourceExpression euler_lagrange(const Lagrangian& lag, const BundleSpec& spec) {
    lag.validate(spec);
    SourceExpression E;
    E.comp.reserve(static_cast<size_t>(spec.m));
    for (int i = 0; i < spec.m; ++i) E.comp.push_back(euler_operator(lag.L, Kind::Jet, i, spec));
    return E;
}

Expr Momenta::at(int mu, int i, const MultiIndex& a) const {
    const auto& slot = p[static_cast<size_t>(mu)];
    auto it = slot.find({i, a});
    return it == slot.end() ? Expr::num(0) : it->second;
}

Momenta momenta(const Lagrangian& lag, const BundleSpec& spec) {
    lag.validate(spec);
    int base = scratch_param_base(spec, {lag.L});
    Bank bank = Bank::param_range(base, spec.m);
    std::vector<Expr> terms;
    for (const auto& key : keys_of(lag.L)) {
        if (key.kind != Kind::Jet) continue;
        Expr d = partial(lag.L, key, spec.symbols);
        if (d.is_zero()) continue;
        terms.push_back(d * Expr::parameter(base + key.idx, key.mi));
    }
    IBPResult ibp = integrate_by_parts(Expr::add(std::move(terms)), bank, spec);
    Momenta out;
    out.p.resize(static_cast<size_t>(spec.n));
    for (int mu = 0; mu < spec.n; ++mu) {
        auto coeffs = linear_decompose(ibp.boundary.comp[static_cast<size_t>(mu)], bank);
        for (const auto& [key, c] : coeffs)
            out.p[static_cast<size_t>(mu)][{key.idx - base, key.mi}] = c;
    }
    return out;
}

FirstVariation first_variation(const Lagrangian& lag, const std::vector<Expr>& xi,
                               const std::vector<Expr>& Xi, const BundleSpec& spec) {
    lag.validate(spec);
    SourceExpression E = euler_lagrange(lag, spec);
    Momenta p = momenta(lag, spec);
    std::vector<Expr> pounds = lie_derivative_section(xi, Xi, spec);

    FirstVariation r;
    std::vector<Expr> contracted;
    for (int i = 0; i < spec.m; ++i)
        contracted.push_back(-(pounds[static_cast<size_t>(i)] * E.comp[static_cast<size_t>(i)]));
    r.contracted = Expr::add(std::move(contracted));

    r.boundary = BoundaryCurrent::zero(spec);
    for (int mu = 0; mu < spec.n; ++mu) {
        std::vector<Expr> acc{xi[static_cast<size_t>(mu)] * lag.L};
        for (const auto& [key, c] : p.p[static_cast<size_t>(mu)]) {
            Expr d =
                iterated_total_derivative(pounds[static_cast<size_t>(key.first)], key.second, spec);
            acc.push_back(-(c * d));
        }
        r.boundary.comp[static_cast<size_t>(mu)] = Expr::add(std::move(acc));
    }

    r.lie_density = lie_derivative_density(xi, Xi, lag.L, spec);
    r.residual = r.lie_density - r.contracted - divergence(r.boundary, spec);
    return r;
}

bool is_total_divergence(const Expr& density, const BundleSpec& spec) {
    for (int i = 0; i < spec.m; ++i)
        if (!euler_operator(density, Kind::Jet, i, spec).is_zero()) return false;
    std::set<int> params;
    for (const auto& k : keys_of(density))
        if (k.kind == Kind::Param) params.insert(k.idx);
    for (int p : params)
        if (!euler_operator(density, Kind::Param, p, spec).is_zero()) return false;
    return true;
}

namespace {

bool contains_aux(const Expr& e, int id) {
    if (e.kind() == Kind::Aux && e.index() == id) return true;
    for (const auto& k : e.kids())
        if (contains_aux(k, id)) return true;
    return false;
}

bool contains_coord(const Expr& e, int sigma) {
    if (e.kind() == Kind::Coord && e.index() == sigma) return true;
    for (const auto& k : e.kids())
        if (contains_coord(k, sigma)) return true;
    return false;
}

// e = Sum_k coeff_k * atom^k; throws NotSupported when the dependence on the
// atom is not a plain polynomial.
std::map<long, Expr> collect_powers(const Expr& e, const std::function<bool(const Expr&)>& match,
                                    const std::function<bool(const Expr&)>& occurs) {
    std::map<long, Expr> out;
    std::vector<Expr> terms = e.kind() == Kind::Sum ? e.kids() : std::vector<Expr>{e};
    if (e.is_zero()) terms.clear();
    for (const auto& t : terms) {
        std::vector<Expr> factors = t.kind() == Kind::Prod ? t.kids() : std::vector<Expr>{t};
        long k = 0;
        std::vector<Expr> rest;
        for (const auto& f : factors) {
            if (match(f)) {
                k += 1;
            } else if (f.kind() == Kind::Pow && match(f.kids()[0]) && is_integer(f.num_value()) &&
                       f.num_value() > 0) {
                k += to_long(f.num_value());
            } else if (occurs(f)) {
                throw NotSupported("non-polynomial dependence in power collection");
            } else {
                rest.push_back(f);
            }
        }
        Expr coeff = rest.empty() ? Expr::num(1) : Expr::mul(std::move(rest));
        auto it = out.find(k);
        if (it == out.end())
            out.emplace(k, coeff);
        else
            it->second = it->second + coeff;
    }
    return out;
}

}  // namespace

BoundaryCurrent reconstruct_divergence(const Expr& density, const BundleSpec& spec) {
    auto all_vars = [](const VarKey& k) { return k.kind == Kind::Jet || k.kind == Kind::Param; };
    auto deg = poly_degree(density, all_vars);
    if (!deg) throw NotSupported("divergence reconstruction needs a jet-polynomial density");

    // base part: density with all jets and parameters set to zero
    std::set<VarKey> keys = keys_of(density);
    std::map<VarKey, Expr> zero_map;
    for (const auto& k : keys)
        if (k.kind != Kind::Coord) zero_map[k] = Expr::num(0);
    Expr base_part = substitute(density, zero_map);

    BoundaryCurrent W = BoundaryCurrent::zero(spec);
    if (!base_part.is_zero()) {
        auto powers = collect_powers(
            base_part, [&](const Expr& f) { return f.kind() == Kind::Coord && f.index() == 0; },
            [&](const Expr& f) { return contains_coord(f, 0); });
        Expr acc = Expr::num(0);
        for (const auto& [k, c] : powers)
            acc = acc + Expr::num(Rational(1, k + 1)) * c *
                            Expr::pow(Expr::coordinate(0), Rational(k + 1));
        W.comp[0] = W.comp[0] + acc;
    }

    Expr varying = density - base_part;
    if (!varying.is_zero()) {
        // vertical homotopy: with a fresh bank w, integrate the pairing
        //   Sum_v w_v d(density)/dv = Sum_root w_root E_root(density) + D_mu B^mu(w)
        // by parts once; substituting w_{root,alpha} -> v_alpha, v -> t v in B
        // and integrating the polynomial in t over [0,1] yields W.
        int base = scratch_param_base(spec, {density});
        std::map<VarKey, int> slot_of_root;
        int next = base;
        for (const auto& k : keys) {
            if (k.kind == Kind::Coord) continue;
            VarKey root = k;
            root.mi = MultiIndex(spec.n);
            if (slot_of_root.emplace(root, next).second) ++next;
        }
        std::vector<Expr> pairing;
        for (const auto& k : keys) {
            if (k.kind == Kind::Coord) continue;
            Expr d = partial(varying, k, spec.symbols);
            if (d.is_zero()) continue;
            VarKey root = k;
            root.mi = MultiIndex(spec.n);
            pairing.push_back(Expr::parameter(slot_of_root.at(root), k.mi) * d);
        }
        Bank wbank = Bank::param_range(base, next - base);
        IBPResult ibp = integrate_by_parts(Expr::add(std::move(pairing)), wbank, spec);
        for (const auto& [id, c] : ibp.adjoint) {
            (void)id;
            if (!c.is_zero())
                throw NotSupported("density is not annihilated by the Euler operators");
        }

        const int aux_id = 0;
        Expr t = Expr::aux(aux_id);
        std::map<VarKey, Expr> scale_and_swap;
        for (const auto& k : keys)
            if (k.kind != Kind::Coord) scale_and_swap[k] = t * Expr::variable(k);
        std::map<int, VarKey> root_of_slot;
        for (const auto& [root, slot] : slot_of_root) root_of_slot[slot] = root;
        for (int mu = 0; mu < spec.n; ++mu) {
            for (const auto& k : keys_of(ibp.boundary.comp[static_cast<size_t>(mu)])) {
                if (k.kind != Kind::Param || k.idx < base || k.idx >= next) continue;
                VarKey orig = root_of_slot.at(k.idx);
                orig.mi = k.mi;
                scale_and_swap[k] = Expr::variable(orig);
            }
        }
        for (int mu = 0; mu < spec.n; ++mu) {
            Expr b = substitute(ibp.boundary.comp[static_cast<size_t>(mu)], scale_and_swap);
            auto powers = collect_powers(
                b, [&](const Expr& f) { return f.kind() == Kind::Aux && f.index() == aux_id; },
                [&](const Expr& f) { return contains_aux(f, aux_id); });
            Expr acc = Expr::num(0);
            for (const auto& [k, c] : powers) acc = acc + Expr::num(Rational(1, k + 1)) * c;
            W.comp[static_cast<size_t>(mu)] = W.comp[static_cast<size_t>(mu)] + acc;
        }
    }

    Expr residual = density - divergence(W, spec);
    if (!residual.is_zero()) throw NotSupported("divergence reconstruction failed to certify");
    return W;
}

int scratch_param_base(const BundleSpec& spec, const std::vector<Expr>& involved) {
    int base = static_cast<int>(spec.params.size());
    for (const auto& e : involved) base = std::max(base, max_param_index(e) + 1);
    return base;
}

}  // namespace varseq
