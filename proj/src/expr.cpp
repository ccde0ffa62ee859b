#include "varseq/expr.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace varseq {

namespace {

NodePtr make_node(Kind k, Rational num, int idx, MultiIndex mi, std::vector<Expr> kids) {
    auto n = std::make_shared<ExprNode>();
    n->kind = k;
    n->num = std::move(num);
    n->idx = idx;
    n->mi = std::move(mi);
    n->kids = std::move(kids);
    return n;
}

int kind_rank(Kind k) { return static_cast<int>(k); }

}  // namespace

Expr Expr::raw(Kind k, Rational num, int idx, MultiIndex mi, std::vector<Expr> kids) {
    return Expr(make_node(k, std::move(num), idx, std::move(mi), std::move(kids)));
}

Expr::Expr() : node_(make_node(Kind::Num, Rational(0), 0, {}, {})) {}

Expr Expr::num(Rational q) { return raw(Kind::Num, std::move(q), 0, {}, {}); }
Expr Expr::num(long n, long d) { return num(Rational(n, d)); }
Expr Expr::pi() { return raw(Kind::Pi, Rational(0), 0, {}, {}); }
Expr Expr::aux(int id) { return raw(Kind::Aux, Rational(0), id, {}, {}); }
Expr Expr::arg(int slot) { return raw(Kind::Arg, Rational(0), slot, {}, {}); }
Expr Expr::coordinate(int sigma) { return raw(Kind::Coord, Rational(0), sigma, {}, {}); }
Expr Expr::jet(int field, MultiIndex a) { return raw(Kind::Jet, Rational(0), field, std::move(a), {}); }
Expr Expr::parameter(int p, MultiIndex a) { return raw(Kind::Param, Rational(0), p, std::move(a), {}); }

Expr Expr::variable(const VarKey& v) {
    switch (v.kind) {
        case Kind::Coord: return coordinate(v.idx);
        case Kind::Jet: return jet(v.idx, v.mi);
        case Kind::Param: return parameter(v.idx, v.mi);
        default: throw EngineError("variable(): not a variable key");
    }
}

int cmp(const Expr& a, const Expr& b) {
    if (&a.node() == &b.node()) return 0;
    const ExprNode& x = a.node();
    const ExprNode& y = b.node();
    if (x.kind != y.kind) return kind_rank(x.kind) < kind_rank(y.kind) ? -1 : 1;
    switch (x.kind) {
        case Kind::Num: return x.num == y.num ? 0 : (x.num < y.num ? -1 : 1);
        case Kind::Pi: return 0;
        case Kind::Aux:
        case Kind::Arg:
        case Kind::Coord:
            return x.idx == y.idx ? 0 : (x.idx < y.idx ? -1 : 1);
        case Kind::Jet:
        case Kind::Param: {
            if (x.idx != y.idx) return x.idx < y.idx ? -1 : 1;
            return cmp(x.mi, y.mi);
        }
        case Kind::Fun:
        case Kind::SymApp: {
            if (x.idx != y.idx) return x.idx < y.idx ? -1 : 1;
            break;  // compare children below
        }
        case Kind::Pow: {
            int c = cmp(x.kids[0], y.kids[0]);
            if (c != 0) return c;
            return x.num == y.num ? 0 : (x.num < y.num ? -1 : 1);
        }
        case Kind::Prod:
        case Kind::Sum:
            break;
    }
    size_t n = std::min(x.kids.size(), y.kids.size());
    for (size_t i = 0; i < n; ++i) {
        int c = cmp(x.kids[i], y.kids[i]);
        if (c != 0) return c;
    }
    if (x.kids.size() != y.kids.size()) return x.kids.size() < y.kids.size() ? -1 : 1;
    return 0;
}

namespace {

// Split a canonical term into (rational coefficient, coefficient-free part).
std::pair<Rational, Expr> term_split(const Expr& t) {
    if (t.is_num()) return {t.num_value(), Expr::num(1)};
    if (t.kind() == Kind::Prod && t.kids()[0].is_num()) {
        Rational c = t.kids()[0].num_value();
        std::vector<Expr> rest(t.kids().begin() + 1, t.kids().end());
        if (rest.size() == 1) return {c, rest[0]};
        return {c, Expr::raw(Kind::Prod, Rational(0), 0, {}, std::move(rest))};
    }
    return {Rational(1), t};
}

std::optional<Rational> rational_multiple_of_pi(const Expr& e) {
    if (e.kind() == Kind::Pi) return Rational(1);
    if (e.kind() == Kind::Prod && e.kids().size() == 2 && e.kids()[0].is_num() &&
        e.kids()[1].kind() == Kind::Pi)
        return e.kids()[0].num_value();
    return std::nullopt;
}

}  // namespace

namespace {

// Within one sum, powers of the same sum-base whose exponents differ by an
// integer must agree, or cross-exponent cancellation is invisible; rewrite
// every such factor to the smallest exponent of its class, expanding the
// integer-power surplus polynomially.
bool rewrite_common_exponents(std::vector<Expr>& terms) {
    using ClassKey = std::pair<Expr, Rational>;  // (base, fractional part)
    auto class_of = [](const Expr& base, const Rational& q) {
        return ClassKey{base, q - Rational(rational_floor(q))};
    };
    struct ClassLess {
        bool operator()(const ClassKey& a, const ClassKey& b) const {
            int c = cmp(a.first, b.first);
            if (c != 0) return c < 0;
            return a.second < b.second;
        }
    };
    std::map<ClassKey, std::pair<Rational, Rational>, ClassLess> range;  // min, max exponent
    for (const auto& t : terms) {
        std::vector<Expr> factors = t.kind() == Kind::Prod ? t.kids() : std::vector<Expr>{t};
        for (const auto& f : factors) {
            if (f.kind() != Kind::Pow || f.kids()[0].kind() != Kind::Sum) continue;
            ClassKey key = class_of(f.kids()[0], f.num_value());
            auto it = range.find(key);
            if (it == range.end())
                range.emplace(key, std::make_pair(f.num_value(), f.num_value()));
            else {
                it->second.first = std::min(it->second.first, f.num_value());
                it->second.second = std::max(it->second.second, f.num_value());
            }
        }
    }
    bool any = false;
    for (const auto& [key, mm] : range) {
        (void)key;
        if (mm.first != mm.second) any = true;
    }
    if (!any) return false;
    std::vector<Expr> out;
    for (const auto& t : terms) {
        std::vector<Expr> factors = t.kind() == Kind::Prod ? t.kids() : std::vector<Expr>{t};
        std::vector<Expr> rebuilt;
        for (const auto& f : factors) {
            if (f.kind() == Kind::Pow && f.kids()[0].kind() == Kind::Sum) {
                ClassKey key = class_of(f.kids()[0], f.num_value());
                const auto& mm = range.at(key);
                if (mm.first != mm.second && f.num_value() > mm.first) {
                    rebuilt.push_back(Expr::pow(f.kids()[0], f.num_value() - mm.first));
                    rebuilt.push_back(Expr::pow(f.kids()[0], mm.first));
                    continue;
                }
            }
            rebuilt.push_back(f);
        }
        out.push_back(Expr::mul(std::move(rebuilt)));
    }
    terms = std::move(out);
    return true;
}

}  // namespace

Expr Expr::add(std::vector<Expr> terms) {
    Rational constant(0);
    std::vector<Expr> flat;
    for (auto& t : terms) {
        if (t.is_num()) {
            constant += t.num_value();
        } else if (t.kind() == Kind::Sum) {
            for (auto& k : t.kids()) {
                if (k.is_num())
                    constant += k.num_value();
                else
                    flat.push_back(k);
            }
        } else {
            flat.push_back(t);
        }
    }
    if (rewrite_common_exponents(flat)) {
        flat.push_back(num(constant));
        return add(std::move(flat));
    }
    // Collect like terms keyed on the coefficient-free part.
    std::map<Expr, Rational> acc;
    for (auto& t : flat) {
        auto [c, key] = term_split(t);
        acc[key] += c;
    }
    std::vector<Expr> out;
    for (auto it = acc.rbegin(); it != acc.rend(); ++it) {  // descending key order
        if (it->second == 0) continue;
        if (it->second == 1)
            out.push_back(it->first);
        else
            out.push_back(mul({num(it->second), it->first}));
    }
    if (constant != 0) out.push_back(num(constant));
    if (out.empty()) return num(0);
    if (out.size() == 1) return out[0];
    return raw(Kind::Sum, Rational(0), 0, {}, std::move(out));
}

Expr Expr::mul(std::vector<Expr> factors) {
    Rational c(1);
    std::vector<Expr> flat;
    for (auto& f : factors) {
        if (f.is_num()) {
            c *= f.num_value();
        } else if (f.kind() == Kind::Prod) {
            for (auto& k : f.kids()) {
                if (k.is_num())
                    c *= k.num_value();
                else
                    flat.push_back(k);
            }
        } else {
            flat.push_back(f);
        }
    }
    if (c == 0) return num(0);
    // Distribute over the first sum factor, if any.
    for (size_t i = 0; i < flat.size(); ++i) {
        if (flat[i].kind() == Kind::Sum) {
            std::vector<Expr> terms;
            terms.reserve(flat[i].kids().size());
            for (const auto& t : flat[i].kids()) {
                std::vector<Expr> g;
                g.reserve(flat.size() + 1);
                g.push_back(num(c));
                for (size_t j = 0; j < flat.size(); ++j) g.push_back(j == i ? t : flat[j]);
                terms.push_back(mul(std::move(g)));
            }
            return add(std::move(terms));
        }
    }
    // Merge powers of equal bases.
    std::vector<std::pair<Expr, Rational>> be;
    for (auto& f : flat) {
        if (f.kind() == Kind::Pow)
            be.emplace_back(f.kids()[0], f.num_value());
        else
            be.emplace_back(f, Rational(1));
    }
    std::sort(be.begin(), be.end(),
              [](const auto& a, const auto& b) { return cmp(a.first, b.first) < 0; });
    std::vector<Expr> out;
    bool redo = false;
    for (size_t i = 0; i < be.size();) {
        Rational e = be[i].second;
        size_t j = i + 1;
        while (j < be.size() && cmp(be[j].first, be[i].first) == 0) {
            e += be[j].second;
            ++j;
        }
        if (e != 0) {
            Expr p = pow(be[i].first, e);
            if (j > i + 1 && (p.is_num() || p.kind() == Kind::Prod || p.kind() == Kind::Sum))
                redo = true;  // folding produced a non-atom; renormalize below
            out.push_back(p);
        }
        i = j;
    }
    if (redo) {
        out.push_back(num(c));
        return mul(std::move(out));
    }
    if (out.empty()) return num(c);
    if (c == 1 && out.size() == 1) return out[0];
    std::vector<Expr> kids;
    if (c != 1) kids.push_back(num(c));
    kids.insert(kids.end(), out.begin(), out.end());
    if (kids.size() == 1) return kids[0];
    return raw(Kind::Prod, Rational(0), 0, {}, std::move(kids));
}

Expr Expr::pow(const Expr& base, const Rational& exponent) {
    if (exponent == 0) return num(1);
    if (exponent == 1) return base;
    if (base.is_num()) {
        if (base.num_value() == 0) {
            if (exponent > 0) return num(0);
            throw EngineError("pow: zero base with negative exponent");
        }
        if (base.is_one()) return num(1);
        if (auto v = exact_rational_pow(base.num_value(), exponent)) return num(*v);
        return raw(Kind::Pow, exponent, 0, {}, {base});
    }
    if (base.kind() == Kind::Pow && is_integer(exponent)) {
        return pow(base.kids()[0], base.num_value() * exponent);
    }
    if (base.kind() == Kind::Prod && is_integer(exponent)) {
        std::vector<Expr> fs;
        fs.reserve(base.kids().size());
        for (const auto& f : base.kids()) fs.push_back(pow(f, exponent));
        return mul(std::move(fs));
    }
    if (base.kind() == Kind::Sum && is_integer(exponent) && exponent > 1) {
        long k = to_long(exponent);
        Expr r = base;
        for (long i = 1; i < k; ++i) r = r * base;
        return r;
    }
    return raw(Kind::Pow, exponent, 0, {}, {base});
}

Expr Expr::fun(Fn f, const Expr& argument) {
    if (argument.is_num()) {
        const Rational& q = argument.num_value();
        if (q == 0) {
            switch (f) {
                case Fn::Sin: return num(0);
                case Fn::Cos: return num(1);
                case Fn::Exp: return num(1);
                case Fn::Ln: break;  // undefined; keep symbolic
            }
        }
        if (q == 1 && f == Fn::Ln) return num(0);
    }
    if (f == Fn::Sin || f == Fn::Cos) {
        if (auto q = rational_multiple_of_pi(argument)) {
            Rational twice = *q * 2;
            if (is_integer(twice)) {
                Int k = to_int(twice);  // argument = k*pi/2
                long r = static_cast<long>(k % 4);
                if (r < 0) r += 4;
                if (f == Fn::Sin) {
                    // sin(k*pi/2) for k = 0..3: 0, 1, 0, -1
                    static const long tab[4] = {0, 1, 0, -1};
                    return num(tab[r]);
                }
                static const long tab[4] = {1, 0, -1, 0};
                return num(tab[r]);
            }
        }
    }
    return raw(Kind::Fun, Rational(0), static_cast<int>(f), {}, {argument});
}

Expr Expr::symapp(int symbol, std::vector<Expr> args) {
    return raw(Kind::SymApp, Rational(0), symbol, {}, std::move(args));
}

Expr Expr::operator-(const Expr& o) const { return add({*this, mul({num(-1), o})}); }
Expr Expr::operator-() const { return mul({num(-1), *this}); }

Expr normalize(const Expr& e) {
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
        case Kind::Arg:
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return e;
        case Kind::Sum: {
            std::vector<Expr> kids;
            kids.reserve(e.kids().size());
            for (const auto& k : e.kids()) kids.push_back(normalize(k));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> kids;
            kids.reserve(e.kids().size());
            for (const auto& k : e.kids()) kids.push_back(normalize(k));
            return Expr::mul(std::move(kids));
        }
        case Kind::Pow:
            return Expr::pow(normalize(e.kids()[0]), e.num_value());
        case Kind::Fun:
            return Expr::fun(e.fn(), normalize(e.kids()[0]));
        case Kind::SymApp: {
            std::vector<Expr> kids;
            kids.reserve(e.kids().size());
            for (const auto& k : e.kids()) kids.push_back(normalize(k));
            return Expr::symapp(e.index(), std::move(kids));
        }
    }
    throw EngineError("normalize: bad node");
}

// ---------------------------------------------------------------------------
// Symbol table

int SymbolTable::declare(DefinedSymbol sym) {
    if (find(sym.name) >= 0) throw EngineError("symbol redeclared: " + sym.name);
    syms_.push_back(std::move(sym));
    return static_cast<int>(syms_.size()) - 1;
}

int SymbolTable::find(const std::string& name) const {
    for (size_t i = 0; i < syms_.size(); ++i)
        if (syms_[i].name == name) return static_cast<int>(i);
    return -1;
}

const DefinedSymbol& SymbolTable::at(int id) const {
    if (id < 0 || id >= size()) throw EngineError("symbol id out of range");
    return syms_[static_cast<size_t>(id)];
}

const SymbolTable& SymbolTable::empty() {
    static const SymbolTable tab;
    return tab;
}

namespace {

void check_rule_closed(const SymbolTable& tab, const DefinedSymbol& owner, const Expr& e) {
    switch (e.kind()) {
        case Kind::SymApp: {
            if (e.index() < 0 || e.index() >= tab.size())
                throw UnknownSymbol("rule of '" + owner.name + "' references undeclared symbol");
            const auto& s = tab.at(e.index());
            if (static_cast<int>(e.kids().size()) != s.arity)
                throw UnknownSymbol("rule of '" + owner.name + "' applies '" + s.name +
                                    "' with wrong arity");
            break;
        }
        case Kind::Arg:
            if (e.index() < 0 || e.index() >= owner.arity)
                throw UnknownSymbol("rule of '" + owner.name + "' uses argument slot " +
                                    std::to_string(e.index() + 1) + " beyond its arity");
            break;
        default:
            break;
    }
    for (const auto& k : e.kids()) check_rule_closed(tab, owner, k);
}

}  // namespace

void SymbolTable::validate_closed() const {
    for (const auto& s : syms_) {
        for (const auto& [slot, rule] : s.slot_rules) {
            if (slot < 0 || slot >= s.arity)
                throw UnknownSymbol("symbol '" + s.name + "' has a rule for slot " +
                                    std::to_string(slot + 1) + " beyond its arity");
            check_rule_closed(*this, s, rule);
        }
    }
}

Expr instantiate_template(const Expr& tmpl, const std::vector<Expr>& args) {
    switch (tmpl.kind()) {
        case Kind::Arg: {
            int k = tmpl.index();
            if (k < 0 || k >= static_cast<int>(args.size()))
                throw EngineError("template argument slot out of range");
            return args[static_cast<size_t>(k)];
        }
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return tmpl;
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const auto& k : tmpl.kids()) kids.push_back(instantiate_template(k, args));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> kids;
            for (const auto& k : tmpl.kids()) kids.push_back(instantiate_template(k, args));
            return Expr::mul(std::move(kids));
        }
        case Kind::Pow:
            return Expr::pow(instantiate_template(tmpl.kids()[0], args), tmpl.num_value());
        case Kind::Fun:
            return Expr::fun(tmpl.fn(), instantiate_template(tmpl.kids()[0], args));
        case Kind::SymApp: {
            std::vector<Expr> kids;
            for (const auto& k : tmpl.kids()) kids.push_back(instantiate_template(k, args));
            return Expr::symapp(tmpl.index(), std::move(kids));
        }
    }
    throw EngineError("instantiate_template: bad node");
}

// ---------------------------------------------------------------------------
// Differentiation, substitution, inspection

Expr partial(const Expr& e, const VarKey& v, const SymbolTable& tab) {
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
            return Expr::num(0);
        case Kind::Arg:
            throw EngineError("partial: Arg placeholder outside a rule template");
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return e.var_key() == v ? Expr::num(1) : Expr::num(0);
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(partial(k, v, tab));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> terms;
            for (size_t i = 0; i < e.kids().size(); ++i) {
                Expr dk = partial(e.kids()[i], v, tab);
                if (dk.is_zero()) continue;
                std::vector<Expr> fs;
                for (size_t j = 0; j < e.kids().size(); ++j)
                    fs.push_back(j == i ? dk : e.kids()[j]);
                terms.push_back(Expr::mul(std::move(fs)));
            }
            return Expr::add(std::move(terms));
        }
        case Kind::Pow: {
            const Expr& b = e.kids()[0];
            Expr db = partial(b, v, tab);
            if (db.is_zero()) return Expr::num(0);
            const Rational& q = e.num_value();
            return Expr::mul({Expr::num(q), Expr::pow(b, q - 1), db});
        }
        case Kind::Fun: {
            const Expr& a = e.kids()[0];
            Expr da = partial(a, v, tab);
            if (da.is_zero()) return Expr::num(0);
            Expr outer;
            switch (e.fn()) {
                case Fn::Sin: outer = Expr::fun(Fn::Cos, a); break;
                case Fn::Cos: outer = -Expr::fun(Fn::Sin, a); break;
                case Fn::Exp: outer = Expr::fun(Fn::Exp, a); break;
                case Fn::Ln: outer = Expr::pow(a, Rational(-1)); break;
            }
            return outer * da;
        }
        case Kind::SymApp: {
            const DefinedSymbol& sym = tab.at(e.index());
            std::vector<Expr> terms;
            for (size_t k = 0; k < e.kids().size(); ++k) {
                Expr dk = partial(e.kids()[k], v, tab);
                if (dk.is_zero()) continue;
                auto it = sym.slot_rules.find(static_cast<int>(k));
                if (it == sym.slot_rules.end())
                    throw UnknownSymbol("symbol '" + sym.name + "' has no derivative rule for slot " +
                                        std::to_string(k + 1));
                terms.push_back(instantiate_template(it->second, e.kids()) * dk);
            }
            return Expr::add(std::move(terms));
        }
    }
    throw EngineError("partial: bad node");
}

Expr substitute(const Expr& e, const std::map<VarKey, Expr>& bindings) {
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
        case Kind::Arg:
            return e;
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param: {
            auto it = bindings.find(e.var_key());
            return it == bindings.end() ? e : it->second;
        }
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(substitute(k, bindings));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(substitute(k, bindings));
            return Expr::mul(std::move(kids));
        }
        case Kind::Pow:
            return Expr::pow(substitute(e.kids()[0], bindings), e.num_value());
        case Kind::Fun:
            return Expr::fun(e.fn(), substitute(e.kids()[0], bindings));
        case Kind::SymApp: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(substitute(k, bindings));
            return Expr::symapp(e.index(), std::move(kids));
        }
    }
    throw EngineError("substitute: bad node");
}

Expr substitute_aux(const Expr& e, const std::map<int, Expr>& bindings) {
    switch (e.kind()) {
        case Kind::Aux: {
            auto it = bindings.find(e.index());
            return it == bindings.end() ? e : it->second;
        }
        case Kind::Num:
        case Kind::Pi:
        case Kind::Arg:
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return e;
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(substitute_aux(k, bindings));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(substitute_aux(k, bindings));
            return Expr::mul(std::move(kids));
        }
        case Kind::Pow:
            return Expr::pow(substitute_aux(e.kids()[0], bindings), e.num_value());
        case Kind::Fun:
            return Expr::fun(e.fn(), substitute_aux(e.kids()[0], bindings));
        case Kind::SymApp: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(substitute_aux(k, bindings));
            return Expr::symapp(e.index(), std::move(kids));
        }
    }
    throw EngineError("substitute_aux: bad node");
}

void collect_keys(const Expr& e, std::set<VarKey>& out) {
    if (e.is_var()) {
        out.insert(e.var_key());
        return;
    }
    for (const auto& k : e.kids()) collect_keys(k, out);
}

std::set<VarKey> keys_of(const Expr& e) {
    std::set<VarKey> out;
    collect_keys(e, out);
    return out;
}

int jet_order(const Expr& e) {
    int best = 0;
    if (e.kind() == Kind::Jet || e.kind() == Kind::Param) best = e.mi().order();
    for (const auto& k : e.kids()) best = std::max(best, jet_order(k));
    return best;
}

int max_param_index(const Expr& e) {
    int best = -1;
    if (e.kind() == Kind::Param) best = e.index();
    for (const auto& k : e.kids()) best = std::max(best, max_param_index(k));
    return best;
}

std::optional<long> poly_degree(const Expr& e,
                                const std::function<bool(const VarKey&)>& in_bank) {
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
        case Kind::Arg:
            return 0;
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return in_bank(e.var_key()) ? 1 : 0;
        case Kind::Sum: {
            long best = 0;
            for (const auto& k : e.kids()) {
                auto d = poly_degree(k, in_bank);
                if (!d) return std::nullopt;
                best = std::max(best, *d);
            }
            return best;
        }
        case Kind::Prod: {
            long sum = 0;
            for (const auto& k : e.kids()) {
                auto d = poly_degree(k, in_bank);
                if (!d) return std::nullopt;
                sum += *d;
            }
            return sum;
        }
        case Kind::Pow: {
            auto d = poly_degree(e.kids()[0], in_bank);
            if (!d) return std::nullopt;
            if (*d == 0) return 0;
            const Rational& q = e.num_value();
            if (!is_integer(q) || q < 0) return std::nullopt;
            return *d * to_long(q);
        }
        case Kind::Fun: {
            auto d = poly_degree(e.kids()[0], in_bank);
            if (!d || *d != 0) return std::nullopt;
            return 0;
        }
        case Kind::SymApp: {
            for (const auto& k : e.kids()) {
                auto d = poly_degree(k, in_bank);
                if (!d || *d != 0) return std::nullopt;
            }
            return 0;
        }
    }
    return std::nullopt;
}

Expr derive(const Expr& e, const std::function<Expr(const VarKey&)>& leaf,
            const SymbolTable& tab) {
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
            return Expr::num(0);
        case Kind::Arg:
            throw EngineError("derive: Arg placeholder outside a rule template");
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return leaf(e.var_key());
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(derive(k, leaf, tab));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> terms;
            for (size_t i = 0; i < e.kids().size(); ++i) {
                Expr dk = derive(e.kids()[i], leaf, tab);
                if (dk.is_zero()) continue;
                std::vector<Expr> fs;
                for (size_t j = 0; j < e.kids().size(); ++j)
                    fs.push_back(j == i ? dk : e.kids()[j]);
                terms.push_back(Expr::mul(std::move(fs)));
            }
            return Expr::add(std::move(terms));
        }
        case Kind::Pow: {
            const Expr& b = e.kids()[0];
            Expr db = derive(b, leaf, tab);
            if (db.is_zero()) return Expr::num(0);
            const Rational& q = e.num_value();
            return Expr::mul({Expr::num(q), Expr::pow(b, q - 1), db});
        }
        case Kind::Fun: {
            const Expr& a = e.kids()[0];
            Expr da = derive(a, leaf, tab);
            if (da.is_zero()) return Expr::num(0);
            Expr outer;
            switch (e.fn()) {
                case Fn::Sin: outer = Expr::fun(Fn::Cos, a); break;
                case Fn::Cos: outer = -Expr::fun(Fn::Sin, a); break;
                case Fn::Exp: outer = Expr::fun(Fn::Exp, a); break;
                case Fn::Ln: outer = Expr::pow(a, Rational(-1)); break;
            }
            return outer * da;
        }
        case Kind::SymApp: {
            const DefinedSymbol& sym = tab.at(e.index());
            std::vector<Expr> terms;
            for (size_t k = 0; k < e.kids().size(); ++k) {
                Expr dk = derive(e.kids()[k], leaf, tab);
                if (dk.is_zero()) continue;
                auto it = sym.slot_rules.find(static_cast<int>(k));
                if (it == sym.slot_rules.end())
                    throw UnknownSymbol("symbol '" + sym.name + "' has no derivative rule for slot " +
                                        std::to_string(k + 1));
                terms.push_back(instantiate_template(it->second, e.kids()) * dk);
            }
            return Expr::add(std::move(terms));
        }
    }
    throw EngineError("derive: bad node");
}

Expr rename_params(const Expr& e, const std::function<int(int)>& f) {
    std::map<VarKey, Expr> b;
    for (const auto& key : keys_of(e)) {
        if (key.kind != Kind::Param) continue;
        int target = f(key.idx);
        if (target != key.idx) b[key] = Expr::parameter(target, key.mi);
    }
    return b.empty() ? e : substitute(e, b);
}

double eval(const Expr& e, const std::function<double(const VarKey&)>& value,
            const std::function<double(int, const std::vector<double>&)>* symeval,
            const std::function<double(int)>* auxval) {
    switch (e.kind()) {
        case Kind::Num: return to_double(e.num_value());
        case Kind::Pi: return 3.14159265358979323846;
        case Kind::Aux:
            if (!auxval) throw EvalError("eval: unbound auxiliary scalar");
            return (*auxval)(e.index());
        case Kind::Arg: throw EvalError("eval: Arg placeholder");
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return value(e.var_key());
        case Kind::Sum: {
            double s = 0;
            for (const auto& k : e.kids()) s += eval(k, value, symeval, auxval);
            return s;
        }
        case Kind::Prod: {
            double p = 1;
            for (const auto& k : e.kids()) p *= eval(k, value, symeval, auxval);
            return p;
        }
        case Kind::Pow: {
            double b = eval(e.kids()[0], value, symeval, auxval);
            const Rational& q = e.num_value();
            if (b == 0 && q < 0) throw EvalError("eval: division by zero");
            if (is_integer(q)) return std::pow(b, static_cast<double>(to_long(q)));
            return std::pow(b, to_double(q));
        }
        case Kind::Fun: {
            double a = eval(e.kids()[0], value, symeval, auxval);
            switch (e.fn()) {
                case Fn::Sin: return std::sin(a);
                case Fn::Cos: return std::cos(a);
                case Fn::Exp: return std::exp(a);
                case Fn::Ln:
                    if (a <= 0) throw EvalError("eval: ln of non-positive value");
                    return std::log(a);
            }
            throw EvalError("eval: bad function");
        }
        case Kind::SymApp: {
            if (!symeval) throw EvalError("eval: defined symbol without numeric binding");
            std::vector<double> args;
            args.reserve(e.kids().size());
            for (const auto& k : e.kids()) args.push_back(eval(k, value, symeval, auxval));
            return (*symeval)(e.index(), args);
        }
    }
    throw EvalError("eval: bad node");
}

const char* fn_name(Fn f) {
    switch (f) {
        case Fn::Sin: return "sin";
        case Fn::Cos: return "cos";
        case Fn::Exp: return "exp";
        case Fn::Ln: return "ln";
    }
    return "?";
}

}  // namespace varseq
