#include "varseq/render.hpp"

#include <sstream>

namespace varseq {

namespace {

bool single_char_coords(const BundleSpec& spec) {
    for (const auto& c : spec.coords)
        if (c.size() != 1) return false;
    return true;
}

std::string jet_suffix(const MultiIndex& a, const BundleSpec& spec) {
    if (a.order() == 0) return "";
    if (single_char_coords(spec)) {
        std::string s;
        for (int d = 0; d < a.dim(); ++d)
            for (int k = 0; k < a[d]; ++k) s += spec.coords[static_cast<size_t>(d)];
        if (s.size() == 1) return "_" + s;
        return "_{" + s + "}";
    }
    std::string s = "[";
    for (int d = 0; d < a.dim(); ++d) {
        if (d) s += ",";
        s += std::to_string(a[d]);
    }
    return s + "]";
}

std::string base_name(Kind kind, int idx, const BundleSpec& spec) {
    switch (kind) {
        case Kind::Coord:
            if (idx < spec.n) return spec.coords[static_cast<size_t>(idx)];
            return "x?" + std::to_string(idx);
        case Kind::Jet:
            if (idx < spec.m) return spec.fields[static_cast<size_t>(idx)];
            return "y?" + std::to_string(idx);
        case Kind::Param:
            if (idx < static_cast<int>(spec.params.size()))
                return spec.params[static_cast<size_t>(idx)].name;
            return "~" + std::to_string(idx);
        default: return "?";
    }
}

// precedence: 0 sum context, 1 product context, 2 power/unary operand
std::string text(const Expr& e, const BundleSpec& spec, int prec);

std::string text_product(const Expr& e, const BundleSpec& spec, bool* negative) {
    // canonical product: optional leading rational, then sorted factors
    std::vector<Expr> factors = e.kind() == Kind::Prod ? e.kids() : std::vector<Expr>{e};
    Rational c(1);
    size_t first = 0;
    if (!factors.empty() && factors[0].is_num()) {
        c = factors[0].num_value();
        first = 1;
    }
    if (negative && c < 0) {
        *negative = true;
        c = -c;
    }
    std::ostringstream os;
    bool emitted = false;
    if (c != 1 || first == factors.size()) {
        os << to_string(c);
        emitted = true;
    }
    for (size_t i = first; i < factors.size(); ++i) {
        if (emitted) os << "*";
        os << text(factors[i], spec, 1);
        emitted = true;
    }
    return os.str();
}

std::string text(const Expr& e, const BundleSpec& spec, int prec) {
    switch (e.kind()) {
        case Kind::Num: {
            const Rational& q = e.num_value();
            std::string s = to_string(q);
            if (q < 0 && prec >= 1) return "(" + s + ")";
            return s;
        }
        case Kind::Pi: return "pi";
        case Kind::Aux: return "$" + std::to_string(e.index());
        case Kind::Arg: return "@" + std::to_string(e.index() + 1);
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param: {
            std::string s = base_name(e.kind(), e.index(), spec);
            if (e.kind() != Kind::Coord) s += jet_suffix(e.mi(), spec);
            return s;
        }
        case Kind::Fun: {
            return std::string(fn_name(e.fn())) + "(" + text(e.kids()[0], spec, 0) + ")";
        }
        case Kind::SymApp: {
            std::ostringstream os;
            os << spec.symbols.at(e.index()).name << "(";
            for (size_t i = 0; i < e.kids().size(); ++i) {
                if (i) os << ", ";
                os << text(e.kids()[i], spec, 0);
            }
            os << ")";
            return os.str();
        }
        case Kind::Pow: {
            const Rational& q = e.num_value();
            std::string b = text(e.kids()[0], spec, 2);
            Kind bk = e.kids()[0].kind();
            if (bk == Kind::Sum || bk == Kind::Prod || bk == Kind::Pow || bk == Kind::Num)
                b = "(" + b + ")";
            std::string ex;
            if (is_integer(q) && q > 0)
                ex = to_string(q);
            else
                ex = "(" + to_string(q) + ")";
            std::string s = b + "^" + ex;
            return s;
        }
        case Kind::Prod: {
            bool neg = false;
            std::string body = text_product(e, spec, &neg);
            std::string s = neg ? "-" + body : body;
            if (prec >= 1 && neg) return "(" + s + ")";
            return s;
        }
        case Kind::Sum: {
            std::ostringstream os;
            bool first = true;
            for (const auto& t : e.kids()) {
                bool neg = false;
                std::string body = (t.kind() == Kind::Prod || t.is_num())
                                       ? text_product(t, spec, &neg)
                                       : text(t, spec, 1);
                if (t.is_num() && t.num_value() < 0) {
                    neg = true;
                    body = to_string(-t.num_value());
                }
                if (first) {
                    os << (neg ? "-" : "") << body;
                    first = false;
                } else {
                    os << (neg ? " - " : " + ") << body;
                }
            }
            std::string s = os.str();
            if (prec >= 1) return "(" + s + ")";
            return s;
        }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// LaTeX

std::string latex(const Expr& e, const BundleSpec& spec, int prec);

std::string latex_rational(const Rational& q) {
    if (is_integer(q)) return to_string(q);
    std::string sign = q < 0 ? "-" : "";
    Rational a = q < 0 ? Rational(-q) : q;
    std::ostringstream os;
    os << sign << "\\tfrac{" << numerator(a) << "}{" << denominator(a) << "}";
    return os.str();
}

std::string latex_name(Kind kind, int idx, const MultiIndex& a, const BundleSpec& spec) {
    std::string name = base_name(kind, idx, spec);
    if (name == "eps") name = "\\varepsilon";
    if (kind == Kind::Coord || a.order() == 0) return name;
    if (single_char_coords(spec)) {
        std::string s;
        for (int d = 0; d < a.dim(); ++d)
            for (int k = 0; k < a[d]; ++k) s += spec.coords[static_cast<size_t>(d)];
        return name + "_{" + s + "}";
    }
    std::string s;
    for (int d = 0; d < a.dim(); ++d) {
        if (d) s += ",";
        s += std::to_string(a[d]);
    }
    return name + "_{(" + s + ")}";
}

std::string latex_product(const Expr& e, const BundleSpec& spec, bool* negative) {
    std::vector<Expr> factors = e.kind() == Kind::Prod ? e.kids() : std::vector<Expr>{e};
    Rational c(1);
    size_t first = 0;
    if (!factors.empty() && factors[0].is_num()) {
        c = factors[0].num_value();
        first = 1;
    }
    if (negative && c < 0) {
        *negative = true;
        c = -c;
    }
    std::ostringstream os;
    bool emitted = false;
    if (c != 1 || first == factors.size()) {
        os << latex_rational(c);
        emitted = true;
    }
    for (size_t i = first; i < factors.size(); ++i) {
        if (emitted) os << " \\, ";
        os << latex(factors[i], spec, 1);
        emitted = true;
    }
    return os.str();
}

std::string latex(const Expr& e, const BundleSpec& spec, int prec) {
    switch (e.kind()) {
        case Kind::Num: {
            std::string s = latex_rational(e.num_value());
            if (e.num_value() < 0 && prec >= 1) return "\\left(" + s + "\\right)";
            return s;
        }
        case Kind::Pi: return "\\pi";
        case Kind::Aux: return "t_{" + std::to_string(e.index()) + "}";
        case Kind::Arg: return "\\#" + std::to_string(e.index() + 1);
        case Kind::Coord:
        case Kind::Jet:
        case Kind::Param:
            return latex_name(e.kind(), e.index(), e.mi(), spec);
        case Kind::Fun:
            return "\\" + std::string(fn_name(e.fn())) + "\\left(" + latex(e.kids()[0], spec, 0) +
                   "\\right)";
        case Kind::SymApp: {
            std::ostringstream os;
            os << spec.symbols.at(e.index()).name << "\\left(";
            for (size_t i = 0; i < e.kids().size(); ++i) {
                if (i) os << ", ";
                os << latex(e.kids()[i], spec, 0);
            }
            os << "\\right)";
            return os.str();
        }
        case Kind::Pow: {
            const Rational& q = e.num_value();
            if (q == Rational(1, 2)) return "\\sqrt{" + latex(e.kids()[0], spec, 0) + "}";
            std::string b = latex(e.kids()[0], spec, 2);
            Kind bk = e.kids()[0].kind();
            if (bk == Kind::Sum || bk == Kind::Prod || bk == Kind::Pow || bk == Kind::Num)
                b = "\\left(" + b + "\\right)";
            return b + "^{" + to_string(q) + "}";
        }
        case Kind::Prod: {
            bool neg = false;
            std::string body = latex_product(e, spec, &neg);
            return neg ? "-" + body : body;
        }
        case Kind::Sum: {
            std::ostringstream os;
            bool first = true;
            for (const auto& t : e.kids()) {
                bool neg = false;
                std::string body = (t.kind() == Kind::Prod || t.is_num())
                                       ? latex_product(t, spec, &neg)
                                       : latex(t, spec, 1);
                if (t.is_num() && t.num_value() < 0) {
                    neg = true;
                    body = latex_rational(-t.num_value());
                }
                if (first) {
                    os << (neg ? "-" : "") << body;
                    first = false;
                } else {
                    os << (neg ? " - " : " + ") << body;
                }
            }
            std::string s = os.str();
            if (prec >= 1) return "\\left(" + s + "\\right)";
            return s;
        }
    }
    return "?";
}

}  // namespace

std::string to_text(const Expr& e, const BundleSpec& spec) { return text(e, spec, 0); }

std::string to_latex(const Expr& e, const BundleSpec& spec) { return latex(e, spec, 0); }

json to_json_tree(const Expr& e, const BundleSpec& spec) {
    json j;
    switch (e.kind()) {
        case Kind::Num:
            j["op"] = "num";
            j["value"] = to_string(e.num_value());
            return j;
        case Kind::Pi:
            j["op"] = "pi";
            return j;
        case Kind::Aux:
            j["op"] = "aux";
            j["id"] = e.index();
            return j;
        case Kind::Arg:
            j["op"] = "slot";
            j["index"] = e.index() + 1;
            return j;
        case Kind::Coord:
            j["op"] = "coord";
            j["name"] = base_name(Kind::Coord, e.index(), spec);
            return j;
        case Kind::Jet: {
            j["op"] = "jet";
            j["field"] = base_name(Kind::Jet, e.index(), spec);
            j["index"] = e.mi().ex;
            return j;
        }
        case Kind::Param: {
            j["op"] = "param";
            j["name"] = base_name(Kind::Param, e.index(), spec);
            j["index"] = e.mi().ex;
            return j;
        }
        case Kind::Fun:
            j["op"] = "fun";
            j["name"] = fn_name(e.fn());
            j["arg"] = to_json_tree(e.kids()[0], spec);
            return j;
        case Kind::SymApp: {
            j["op"] = "sym";
            j["name"] = spec.symbols.at(e.index()).name;
            json args = json::array();
            for (const auto& k : e.kids()) args.push_back(to_json_tree(k, spec));
            j["args"] = args;
            return j;
        }
        case Kind::Pow:
            j["op"] = "pow";
            j["base"] = to_json_tree(e.kids()[0], spec);
            j["exp"] = to_string(e.num_value());
            return j;
        case Kind::Prod: {
            j["op"] = "prod";
            json fs = json::array();
            for (const auto& k : e.kids()) fs.push_back(to_json_tree(k, spec));
            j["factors"] = fs;
            return j;
        }
        case Kind::Sum: {
            j["op"] = "sum";
            json ts = json::array();
            for (const auto& k : e.kids()) ts.push_back(to_json_tree(k, spec));
            j["terms"] = ts;
            return j;
        }
    }
    throw EngineError("to_json_tree: bad node");
}

std::string varkey_name(const VarKey& k, const BundleSpec& spec) {
    std::string s = base_name(k.kind, k.idx, spec);
    if (k.kind != Kind::Coord) s += jet_suffix(k.mi, spec);
    return s;
}

}  // namespace varseq
