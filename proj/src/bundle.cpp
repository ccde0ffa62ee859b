#include "varseq/bundle.hpp"

#include <algorithm>
#include <set>

namespace varseq {

int BundleSpec::coord_index(const std::string& name) const {
    auto it = std::find(coords.begin(), coords.end(), name);
    return it == coords.end() ? -1 : static_cast<int>(it - coords.begin());
}

int BundleSpec::field_index(const std::string& name) const {
    auto it = std::find(fields.begin(), fields.end(), name);
    return it == fields.end() ? -1 : static_cast<int>(it - fields.begin());
}

int BundleSpec::param_index(const std::string& name) const {
    for (size_t i = 0; i < params.size(); ++i)
        if (params[i].name == name) return static_cast<int>(i);
    return -1;
}

void BundleSpec::validate() const {
    if (n < 1 || m < 1) throw EngineError("bundle: need n >= 1 and m >= 1");
    if (s_max < 1) throw EngineError("bundle: need s_max >= 1");
    if (static_cast<int>(coords.size()) != n) throw EngineError("bundle: coordinate count != n");
    if (static_cast<int>(fields.size()) != m) throw EngineError("bundle: field count != m");
    std::set<std::string> names;
    auto insert = [&](const std::string& s) {
        if (!names.insert(s).second) throw EngineError("bundle: duplicate name '" + s + "'");
    };
    for (const auto& s : coords) insert(s);
    for (const auto& s : fields) insert(s);
    for (const auto& p : params) insert(p.name);
    for (int i = 0; i < symbols.size(); ++i) insert(symbols.at(i).name);
    symbols.validate_closed();
}

BundleSpec make_bundle(std::vector<std::string> coords, std::vector<std::string> fields,
                       int s_max) {
    BundleSpec spec;
    spec.n = static_cast<int>(coords.size());
    spec.m = static_cast<int>(fields.size());
    spec.coords = std::move(coords);
    spec.fields = std::move(fields);
    spec.s_max = s_max;
    return spec;
}

namespace {

void check_cap(const MultiIndex& a, const BundleSpec& spec) {
    if (a.order() > spec.cap())
        throw OrderOverflow("jet order " + std::to_string(a.order()) + " exceeds cap " +
                            std::to_string(spec.cap()));
}

}  // namespace

Expr total_derivative(const Expr& e, int sigma, const BundleSpec& spec) {
    poll_cancellation();
    switch (e.kind()) {
        case Kind::Num:
        case Kind::Pi:
        case Kind::Aux:
            return Expr::num(0);
        case Kind::Arg:
            throw EngineError("total_derivative: Arg placeholder outside a rule template");
        case Kind::Coord:
            return e.index() == sigma ? Expr::num(1) : Expr::num(0);
        case Kind::Jet: {
            MultiIndex a = e.mi().plus(sigma);
            check_cap(a, spec);
            return Expr::jet(e.index(), a);
        }
        case Kind::Param: {
            MultiIndex a = e.mi().plus(sigma);
            check_cap(a, spec);
            return Expr::parameter(e.index(), a);
        }
        case Kind::Sum: {
            std::vector<Expr> kids;
            for (const auto& k : e.kids()) kids.push_back(total_derivative(k, sigma, spec));
            return Expr::add(std::move(kids));
        }
        case Kind::Prod: {
            std::vector<Expr> terms;
            for (size_t i = 0; i < e.kids().size(); ++i) {
                Expr dk = total_derivative(e.kids()[i], sigma, spec);
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
            Expr db = total_derivative(b, sigma, spec);
            if (db.is_zero()) return Expr::num(0);
            const Rational& q = e.num_value();
            return Expr::mul({Expr::num(q), Expr::pow(b, q - 1), db});
        }
        case Kind::Fun: {
            const Expr& a = e.kids()[0];
            Expr da = total_derivative(a, sigma, spec);
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
            const DefinedSymbol& sym = spec.symbols.at(e.index());
            std::vector<Expr> terms;
            for (size_t k = 0; k < e.kids().size(); ++k) {
                Expr dk = total_derivative(e.kids()[k], sigma, spec);
                if (dk.is_zero()) continue;
                auto it = sym.slot_rules.find(static_cast<int>(k));
                if (it == sym.slot_rules.end())
                    throw UnknownSymbol("symbol '" + sym.name +
                                        "' has no derivative rule for slot " +
                                        std::to_string(k + 1));
                terms.push_back(instantiate_template(it->second, e.kids()) * dk);
            }
            return Expr::add(std::move(terms));
        }
    }
    throw EngineError("total_derivative: bad node");
}

Expr iterated_total_derivative(const Expr& e, const MultiIndex& alpha, const BundleSpec& spec) {
    Expr r = e;
    for (int dir = 0; dir < alpha.dim(); ++dir)
        for (int k = 0; k < alpha[dir]; ++k) r = total_derivative(r, dir, spec);
    return r;
}

json BundleSpec::to_json() const {
    json j;
    j["n"] = n;
    j["m"] = m;
    j["coords"] = coords;
    j["fields"] = fields;
    j["s_max"] = s_max;
    if (order_cap_override > 0) j["order_cap"] = order_cap_override;
    json ps = json::array();
    for (const auto& p : params) {
        json e;
        e["name"] = p.name;
        e["base"] = p.base_flag;
        ps.push_back(e);
    }
    j["params"] = ps;
    json sy = json::array();
    for (int i = 0; i < symbols.size(); ++i) {
        const auto& s = symbols.at(i);
        json e;
        e["name"] = s.name;
        e["arity"] = s.arity;
        sy.push_back(e);
    }
    j["symbols"] = sy;
    return j;
}

BundleSpec BundleSpec::from_json(const json& j) {
    BundleSpec spec;
    spec.n = j.at("n").get<int>();
    spec.m = j.at("m").get<int>();
    spec.coords = j.at("coords").get<std::vector<std::string>>();
    spec.fields = j.at("fields").get<std::vector<std::string>>();
    spec.s_max = j.at("s_max").get<int>();
    if (j.contains("order_cap")) spec.order_cap_override = j.at("order_cap").get<int>();
    if (j.contains("params")) {
        for (const auto& e : j.at("params")) {
            ParamDecl p;
            p.name = e.at("name").get<std::string>();
            p.base_flag = e.at("base").get<bool>();
            spec.params.push_back(p);
        }
    }
    if (j.contains("symbols")) {
        for (const auto& e : j.at("symbols")) {
            DefinedSymbol s;
            s.name = e.at("name").get<std::string>();
            s.arity = e.at("arity").get<int>();
            spec.symbols.declare(std::move(s));
        }
    }
    return spec;
}

}  // namespace varseq
