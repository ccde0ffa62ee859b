#include "varseq/problem.hpp"

#include "varseq/render.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace varseq {

namespace {

// ---------------------------------------------------------------------------
// Tokenizer

enum class Tok {
    Name,
    Int,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Underscore,
    Percent,
    At,
    Equals,
    End,
};

struct Token {
    Tok kind;
    std::string text;
    long value = 0;
    int line = 0;
    int col = 0;
};

struct Lexer {
    std::vector<Token> toks;

    Lexer(const std::string& s, int line) {
        size_t i = 0;
        int col = 1;
        auto push = [&](Tok k, std::string t, long v = 0) {
            toks.push_back({k, std::move(t), v, line, col});
        };
        while (i < s.size()) {
            char c = s[i];
            col = static_cast<int>(i) + 1;
            if (c == '#') break;
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c))) {
                size_t j = i;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
                push(Tok::Int, s.substr(i, j - i), std::stol(s.substr(i, j - i)));
                i = j;
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c))) {
                size_t j = i;
                while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])))) ++j;
                push(Tok::Name, s.substr(i, j - i));
                i = j;
                continue;
            }
            switch (c) {
                case '+': push(Tok::Plus, "+"); break;
                case '-': push(Tok::Minus, "-"); break;
                case '*': push(Tok::Star, "*"); break;
                case '/': push(Tok::Slash, "/"); break;
                case '^': push(Tok::Caret, "^"); break;
                case '(': push(Tok::LParen, "("); break;
                case ')': push(Tok::RParen, ")"); break;
                case '[': push(Tok::LBracket, "["); break;
                case ']': push(Tok::RBracket, "]"); break;
                case '{': push(Tok::LBrace, "{"); break;
                case '}': push(Tok::RBrace, "}"); break;
                case ',': push(Tok::Comma, ","); break;
                case '_': push(Tok::Underscore, "_"); break;
                case '%': push(Tok::Percent, "%"); break;
                case '@': push(Tok::At, "@"); break;
                case '=': push(Tok::Equals, "="); break;
                default:
                    throw ParseError(std::string("unexpected character '") + c + "'", line,
                                     static_cast<int>(i) + 1);
            }
            ++i;
        }
        toks.push_back({Tok::End, "", 0, line, static_cast<int>(s.size()) + 1});
    }
};

// ---------------------------------------------------------------------------
// Expression parser

struct ExprParser {
    const BundleSpec& spec;
    const std::vector<Token>& toks;
    size_t pos = 0;
    bool allow_args = false;
    std::map<std::string, int> index_vars;  // sum indices, 0-based values

    ExprParser(const BundleSpec& s, const std::vector<Token>& t, bool args)
        : spec(s), toks(t), allow_args(args) {}

    [[noreturn]] void fail(const std::string& what) const {
        const Token& t = toks[std::min(pos, toks.size() - 1)];
        throw ParseError(what + (t.kind == Tok::End ? " at end of line"
                                                    : " near '" + t.text + "'"),
                         t.line, t.col);
    }

    const Token& peek() const { return toks[pos]; }
    bool at(Tok k) const { return toks[pos].kind == k; }
    Token take() { return toks[pos++]; }
    Token expect(Tok k, const std::string& what) {
        if (!at(k)) fail("expected " + what);
        return take();
    }

    Expr parse() {
        Expr e = sum();
        if (!at(Tok::End)) fail("trailing input");
        return e;
    }

    Expr sum() {
        Expr e = term();
        while (at(Tok::Plus) || at(Tok::Minus)) {
            bool minus = take().kind == Tok::Minus;
            Expr r = term();
            e = minus ? e - r : e + r;
        }
        return e;
    }

    Expr term() {
        Expr e = unary();
        while (at(Tok::Star) || at(Tok::Slash)) {
            bool div = take().kind == Tok::Slash;
            Expr r = unary();
            e = div ? e / r : e * r;
        }
        return e;
    }

    Expr unary() {
        if (at(Tok::Minus)) {
            take();
            return -unary();
        }
        if (at(Tok::Plus)) {
            take();
            return unary();
        }
        return power();
    }

    Expr power() {
        Expr b = primary();
        if (!at(Tok::Caret)) return b;
        take();
        Rational q = exponent();
        return Expr::pow(b, q);
    }

    Rational exponent() {
        if (at(Tok::Int)) return Rational(take().value);
        if (at(Tok::LParen)) {
            take();
            bool neg = false;
            if (at(Tok::Minus)) {
                take();
                neg = true;
            }
            long num = expect(Tok::Int, "integer exponent").value;
            long den = 1;
            if (at(Tok::Slash)) {
                take();
                den = expect(Tok::Int, "exponent denominator").value;
            }
            expect(Tok::RParen, "')'");
            Rational q(num, den);
            return neg ? Rational(-q) : q;
        }
        fail("expected rational exponent");
    }

    // identifier with %-interpolation of sum indices (1-based digits appended)
    std::string interpolated_name() {
        std::string name = expect(Tok::Name, "name").text;
        while (at(Tok::Percent)) {
            take();
            std::string idx = expect(Tok::Name, "index variable").text;
            auto it = index_vars.find(idx);
            if (it == index_vars.end()) fail("unknown index variable '" + idx + "'");
            name += std::to_string(it->second + 1);
        }
        return name;
    }

    int direction_of(const std::string& name) {
        auto it = index_vars.find(name);
        if (it != index_vars.end()) return it->second;
        int d = spec.coord_index(name);
        if (d < 0) fail("unknown direction '" + name + "'");
        return d;
    }

    MultiIndex suffix_or_zero() {
        MultiIndex a(spec.n);
        if (at(Tok::Underscore)) {
            take();
            std::string s;
            if (at(Tok::LBrace)) {
                take();
                s = expect(Tok::Name, "jet suffix").text;
                expect(Tok::RBrace, "'}'");
            } else {
                s = expect(Tok::Name, "jet suffix").text;
            }
            for (char c : s) {
                int d = spec.coord_index(std::string(1, c));
                if (d < 0) fail(std::string("'") + c + "' is not a base coordinate");
                a = a.plus(d);
            }
            return a;
        }
        if (at(Tok::LBracket)) {
            take();
            for (int d = 0; d < spec.n; ++d) {
                if (d) expect(Tok::Comma, "','");
                a.ex[static_cast<size_t>(d)] = static_cast<int>(expect(Tok::Int, "index").value);
            }
            expect(Tok::RBracket, "']'");
            return a;
        }
        return a;
    }

    Expr primary() {
        if (at(Tok::Int)) return Expr::num(Rational(take().value));
        if (at(Tok::LParen)) {
            take();
            Expr e = sum();
            expect(Tok::RParen, "')'");
            return e;
        }
        if (at(Tok::At)) {
            take();
            long slot = expect(Tok::Int, "argument slot").value;
            if (!allow_args) fail("argument placeholders are only allowed in symbol rules");
            if (slot < 1) fail("argument slots are 1-based");
            return Expr::arg(static_cast<int>(slot - 1));
        }
        if (!at(Tok::Name)) fail("expected expression");

        // special forms first
        const std::string head = peek().text;
        if (head == "pi" && toks[pos + 1].kind != Tok::LParen) {
            take();
            return Expr::pi();
        }
        if (head == "d" && toks[pos + 1].kind == Tok::LParen) {
            take();
            take();
            Expr e = sum();
            if (!at(Tok::Comma)) fail("d(...) needs at least one direction");
            while (at(Tok::Comma)) {
                take();
                std::string dir = expect(Tok::Name, "direction").text;
                e = total_derivative(e, direction_of(dir), spec);
            }
            expect(Tok::RParen, "')'");
            return e;
        }
        if (head == "sum" && toks[pos + 1].kind == Tok::LParen) {
            take();
            take();
            std::string idx = expect(Tok::Name, "index variable").text;
            if (index_vars.count(idx)) fail("index variable '" + idx + "' shadows another");
            expect(Tok::Comma, "','");
            size_t body = pos;
            std::vector<Expr> parts;
            for (int v = 0; v < spec.n; ++v) {
                pos = body;
                index_vars[idx] = v;
                parts.push_back(sum());
            }
            index_vars.erase(idx);
            expect(Tok::RParen, "')'");
            return Expr::add(std::move(parts));
        }
        if ((head == "sin" || head == "cos" || head == "exp" || head == "ln" ||
             head == "sqrt") &&
            toks[pos + 1].kind == Tok::LParen) {
            take();
            take();
            Expr a = sum();
            expect(Tok::RParen, "')'");
            if (head == "sin") return Expr::fun(Fn::Sin, a);
            if (head == "cos") return Expr::fun(Fn::Cos, a);
            if (head == "exp") return Expr::fun(Fn::Exp, a);
            if (head == "ln") return Expr::fun(Fn::Ln, a);
            return Expr::pow(a, Rational(1, 2));
        }

        std::string name = interpolated_name();

        // defined symbol application
        int sym = spec.symbols.find(name);
        if (sym >= 0) {
            expect(Tok::LParen, "'(' after symbol name");
            std::vector<Expr> args;
            if (!at(Tok::RParen)) {
                args.push_back(sum());
                while (at(Tok::Comma)) {
                    take();
                    args.push_back(sum());
                }
            }
            expect(Tok::RParen, "')'");
            if (static_cast<int>(args.size()) != spec.symbols.at(sym).arity)
                fail("symbol '" + name + "' expects " +
                     std::to_string(spec.symbols.at(sym).arity) + " arguments");
            return Expr::symapp(sym, std::move(args));
        }

        int c = spec.coord_index(name);
        if (c >= 0) return Expr::coordinate(c);
        int f = spec.field_index(name);
        if (f >= 0) return Expr::jet(f, suffix_or_zero());
        int p = spec.param_index(name);
        if (p >= 0) return Expr::parameter(p, suffix_or_zero());
        auto iv = index_vars.find(name);
        if (iv != index_vars.end()) return Expr::num(iv->second + 1);
        fail("unknown name '" + name + "'");
    }
};

Expr parse_expr_tokens(const std::string& line, int lineno, const BundleSpec& spec,
                       bool allow_args) {
    Lexer lex(line, lineno);
    ExprParser p(spec, lex.toks, allow_args);
    return p.parse();
}

// ---------------------------------------------------------------------------
// Problem-file parser

struct Line {
    int number;
    std::string text;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> words(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string w;
    while (is >> w) out.push_back(w);
    return out;
}

}  // namespace

const LiftDecl* ProblemFile::find_lift(const std::string& name) const {
    for (const auto& l : lifts)
        if (l.name == name) return &l;
    return nullptr;
}

const VariationDecl* ProblemFile::find_variation(const std::string& name) const {
    for (const auto& v : variations)
        if (v.name == name) return &v;
    return nullptr;
}

Expr parse_expression_text(const std::string& text, const BundleSpec& spec, bool allow_args) {
    return parse_expr_tokens(text, 1, spec, allow_args);
}

ProblemFile parse_problem(const std::string& text, const std::string& source_name) {
    ProblemFile pf;
    pf.source_name = source_name;

    std::vector<Line> lines;
    {
        std::istringstream is(text);
        std::string raw;
        int n = 0;
        while (std::getline(is, raw)) {
            ++n;
            size_t hash = raw.find('#');
            if (hash != std::string::npos) raw = raw.substr(0, hash);
            std::string t = trim(raw);
            if (!t.empty()) lines.push_back({n, t});
        }
    }

    enum class Section { None, Bundle, Symbols, Parameters, Lagrangian, Lift, Variation, Background };
    Section section = Section::None;
    std::string section_name;

    // first pass collects the bundle so expressions can resolve names; the
    // file is required to declare [bundle], [symbols], [parameters] before
    // expression-bearing sections, which a single pass enforces naturally.
    bool bundle_done = false;
    bool lagrangian_seen = false;
    std::vector<std::pair<int, std::string>> pending_rules;  // parsed after symbol decls

    LiftDecl* cur_lift = nullptr;
    VariationDecl* cur_var = nullptr;

    auto parse_rule_line = [&](int lineno, const std::string& body) {
        // rule NAME INT = expr
        auto eq = body.find('=');
        if (eq == std::string::npos) throw ParseError("rule needs '='", lineno, 1);
        auto lhs = words(body.substr(0, eq));
        if (lhs.size() != 3 || lhs[0] != "rule")
            throw ParseError("expected 'rule NAME SLOT = expr'", lineno, 1);
        int sym = pf.spec.symbols.find(lhs[1]);
        if (sym < 0) throw ParseError("rule for undeclared symbol '" + lhs[1] + "'", lineno, 1);
        int slot = std::stoi(lhs[2]);
        Expr rule = parse_expr_tokens(body.substr(eq + 1), lineno, pf.spec, true);
        // symbols are immutable once declared; rebuild the table entry
        DefinedSymbol s = pf.spec.symbols.at(sym);
        if (slot < 1 || slot > s.arity)
            throw ParseError("rule slot out of range for '" + s.name + "'", lineno, 1);
        s.slot_rules[slot - 1] = rule;
        SymbolTable rebuilt;
        for (int i = 0; i < pf.spec.symbols.size(); ++i)
            rebuilt.declare(i == sym ? s : pf.spec.symbols.at(i));
        pf.spec.symbols = rebuilt;
    };

    for (const auto& [lineno, body] : lines) {
        if (body.front() == '[') {
            if (body.back() != ']') throw ParseError("unterminated section header", lineno, 1);
            auto header = words(body.substr(1, body.size() - 2));
            if (header.empty()) throw ParseError("empty section header", lineno, 1);
            const std::string& h = header[0];
            cur_lift = nullptr;
            cur_var = nullptr;
            if (h == "bundle") {
                section = Section::Bundle;
            } else if (h == "symbols") {
                section = Section::Symbols;
            } else if (h == "parameters") {
                section = Section::Parameters;
            } else if (h == "lagrangian") {
                section = Section::Lagrangian;
            } else if (h == "lift") {
                if (header.size() != 2) throw ParseError("[lift NAME] needs a name", lineno, 1);
                section = Section::Lift;
                section_name = header[1];
                LiftDecl decl;
                decl.name = section_name;
                decl.field.name = section_name;
                decl.field.xi.assign(static_cast<size_t>(pf.spec.n), Expr::num(0));
                decl.field.Xi.assign(static_cast<size_t>(pf.spec.m), Expr::num(0));
                pf.lifts.push_back(decl);
                cur_lift = &pf.lifts.back();
            } else if (h == "variation") {
                if (header.size() != 2)
                    throw ParseError("[variation NAME] needs a name", lineno, 1);
                section = Section::Variation;
                section_name = header[1];
                VariationDecl decl;
                decl.name = section_name;
                decl.field.comps.assign(static_cast<size_t>(pf.spec.m), Expr::num(0));
                pf.variations.push_back(decl);
                cur_var = &pf.variations.back();
            } else if (h == "background") {
                section = Section::Background;
                SymbolicSection bg;
                bg.comps.assign(static_cast<size_t>(pf.spec.m), Expr::num(0));
                pf.background = bg;
            } else {
                throw ParseError("unknown section '" + h + "'", lineno, 1);
            }
            if (section != Section::Bundle && !bundle_done) {
                if (pf.spec.coords.empty() || pf.spec.fields.empty())
                    throw ParseError("[bundle] must come first and declare base and fields",
                                     lineno, 1);
                pf.spec.n = static_cast<int>(pf.spec.coords.size());
                pf.spec.m = static_cast<int>(pf.spec.fields.size());
                bundle_done = true;
            }
            continue;
        }

        switch (section) {
            case Section::None:
                throw ParseError("content before any section header", lineno, 1);
            case Section::Bundle: {
                auto w = words(body);
                if (w.empty()) break;
                if (w[0] == "base") {
                    pf.spec.coords.assign(w.begin() + 1, w.end());
                } else if (w[0] == "fields") {
                    pf.spec.fields.assign(w.begin() + 1, w.end());
                } else if (w[0] == "max_order" && w.size() == 2) {
                    pf.spec.s_max = std::stoi(w[1]);
                } else if (w[0] == "order_cap" && w.size() == 2) {
                    pf.spec.order_cap_override = std::stoi(w[1]);
                } else {
                    throw ParseError("unknown bundle entry '" + w[0] + "'", lineno, 1);
                }
                break;
            }
            case Section::Symbols: {
                auto w = words(body);
                if (w.size() >= 1 && w[0] == "symbol") {
                    if (w.size() != 3)
                        throw ParseError("expected 'symbol NAME ARITY'", lineno, 1);
                    DefinedSymbol s;
                    s.name = w[1];
                    s.arity = std::stoi(w[2]);
                    pf.spec.symbols.declare(std::move(s));
                } else if (w.size() >= 1 && w[0] == "rule") {
                    pending_rules.emplace_back(lineno, body);
                } else {
                    throw ParseError("expected 'symbol' or 'rule'", lineno, 1);
                }
                break;
            }
            case Section::Parameters: {
                auto w = words(body);
                if (w.empty() || w[0] != "param" || w.size() > 3 ||
                    (w.size() == 3 && w[2] != "base"))
                    throw ParseError("expected 'param NAME [base]'", lineno, 1);
                ParamDecl p;
                p.name = w[1];
                p.base_flag = w.size() == 3;
                pf.spec.params.push_back(p);
                break;
            }
            case Section::Lagrangian: {
                auto eq = body.find('=');
                auto lhs = trim(eq == std::string::npos ? body : body.substr(0, eq));
                if (eq == std::string::npos || lhs != "L")
                    throw ParseError("expected 'L = expr'", lineno, 1);
                for (auto& [rl, rb] : pending_rules) parse_rule_line(rl, rb);
                pending_rules.clear();
                pf.lagrangian.L = parse_expr_tokens(body.substr(eq + 1), lineno, pf.spec, false);
                lagrangian_seen = true;
                break;
            }
            case Section::Lift:
            case Section::Variation: {
                auto eq = body.find('=');
                if (eq == std::string::npos) throw ParseError("expected 'component = expr'", lineno, 1);
                std::string lhs = trim(body.substr(0, eq));
                Expr value = parse_expr_tokens(body.substr(eq + 1), lineno, pf.spec, false);
                auto caret = lhs.find('^');
                if (caret == std::string::npos)
                    throw ParseError("expected 'xi^coord' or 'Xi^field'", lineno, 1);
                std::string kind = trim(lhs.substr(0, caret));
                std::string which = trim(lhs.substr(caret + 1));
                if (section == Section::Lift) {
                    if (kind == "xi") {
                        int d = pf.spec.coord_index(which);
                        if (d < 0) throw ParseError("unknown coordinate '" + which + "'", lineno, 1);
                        cur_lift->field.xi[static_cast<size_t>(d)] = value;
                    } else if (kind == "Xi") {
                        int f = pf.spec.field_index(which);
                        if (f < 0) throw ParseError("unknown field '" + which + "'", lineno, 1);
                        cur_lift->field.Xi[static_cast<size_t>(f)] = value;
                    } else {
                        throw ParseError("expected 'xi' or 'Xi' component", lineno, 1);
                    }
                } else {
                    if (kind != "Xi") throw ParseError("variations have only 'Xi' components", lineno, 1);
                    int f = pf.spec.field_index(which);
                    if (f < 0) throw ParseError("unknown field '" + which + "'", lineno, 1);
                    cur_var->field.comps[static_cast<size_t>(f)] = value;
                }
                break;
            }
            case Section::Background: {
                auto eq = body.find('=');
                if (eq == std::string::npos) throw ParseError("expected 'field = expr'", lineno, 1);
                std::string name = trim(body.substr(0, eq));
                int f = pf.spec.field_index(name);
                if (f < 0) throw ParseError("unknown field '" + name + "'", lineno, 1);
                pf.background->comps[static_cast<size_t>(f)] =
                    parse_expr_tokens(body.substr(eq + 1), lineno, pf.spec, false);
                break;
            }
        }
    }

    for (auto& [rl, rb] : pending_rules) parse_rule_line(rl, rb);
    pending_rules.clear();

    if (!lagrangian_seen) throw ParseError("file has no [lagrangian] section", 0, 0);
    pf.spec.validate();
    pf.lagrangian.validate(pf.spec);
    for (auto& l : pf.lifts) {
        l.field.lift_order = 0;
        for (const auto& c : l.field.xi)
            for (const auto& k : keys_of(c))
                if (k.kind == Kind::Param) l.field.lift_order = std::max(l.field.lift_order, k.mi.order());
        for (const auto& c : l.field.Xi)
            for (const auto& k : keys_of(c))
                if (k.kind == Kind::Param) l.field.lift_order = std::max(l.field.lift_order, k.mi.order());
        l.field.validate(pf.spec);
    }
    for (auto& v : pf.variations) {
        for (const auto& c : v.field.comps)
            for (const auto& k : keys_of(c))
                if (k.kind == Kind::Param) v.field.bank.insert(k.idx);
    }
    if (pf.background) {
        for (const auto& c : pf.background->comps) {
            for (const auto& k : keys_of(c))
                if (k.kind != Kind::Coord)
                    throw ParseError("background sections depend on base coordinates only", 0, 0);
        }
    }
    return pf;
}

std::string print_problem(const ProblemFile& pf) {
    std::ostringstream os;
    const BundleSpec& spec = pf.spec;
    os << "[bundle]\n";
    os << "base";
    for (const auto& c : spec.coords) os << " " << c;
    os << "\nfields";
    for (const auto& f : spec.fields) os << " " << f;
    os << "\nmax_order " << spec.s_max << "\n";
    if (spec.order_cap_override > 0) os << "order_cap " << spec.order_cap_override << "\n";

    if (spec.symbols.size() > 0) {
        os << "\n[symbols]\n";
        for (int i = 0; i < spec.symbols.size(); ++i) {
            const auto& s = spec.symbols.at(i);
            os << "symbol " << s.name << " " << s.arity << "\n";
        }
        for (int i = 0; i < spec.symbols.size(); ++i) {
            const auto& s = spec.symbols.at(i);
            for (const auto& [slot, rule] : s.slot_rules)
                os << "rule " << s.name << " " << slot + 1 << " = " << to_text(rule, spec) << "\n";
        }
    }

    if (!spec.params.empty()) {
        os << "\n[parameters]\n";
        for (const auto& p : spec.params)
            os << "param " << p.name << (p.base_flag ? " base" : "") << "\n";
    }

    os << "\n[lagrangian]\n";
    os << "L = " << to_text(pf.lagrangian.L, spec) << "\n";

    for (const auto& l : pf.lifts) {
        os << "\n[lift " << l.name << "]\n";
        for (int d = 0; d < spec.n; ++d)
            if (!l.field.xi[static_cast<size_t>(d)].is_zero())
                os << "xi^" << spec.coords[static_cast<size_t>(d)] << " = "
                   << to_text(l.field.xi[static_cast<size_t>(d)], spec) << "\n";
        for (int f = 0; f < spec.m; ++f)
            if (!l.field.Xi[static_cast<size_t>(f)].is_zero())
                os << "Xi^" << spec.fields[static_cast<size_t>(f)] << " = "
                   << to_text(l.field.Xi[static_cast<size_t>(f)], spec) << "\n";
    }

    for (const auto& v : pf.variations) {
        os << "\n[variation " << v.name << "]\n";
        for (int f = 0; f < spec.m; ++f)
            if (!v.field.comps[static_cast<size_t>(f)].is_zero())
                os << "Xi^" << spec.fields[static_cast<size_t>(f)] << " = "
                   << to_text(v.field.comps[static_cast<size_t>(f)], spec) << "\n";
    }

    if (pf.background) {
        os << "\n[background]\n";
        for (int f = 0; f < spec.m; ++f)
            os << spec.fields[static_cast<size_t>(f)] << " = "
               << to_text(pf.background->comps[static_cast<size_t>(f)], spec) << "\n";
    }
    return os.str();
}

bool problems_equal(const ProblemFile& a, const ProblemFile& b) {
    if (a.spec.n != b.spec.n || a.spec.m != b.spec.m || a.spec.s_max != b.spec.s_max)
        return false;
    if (a.spec.coords != b.spec.coords || a.spec.fields != b.spec.fields) return false;
    if (a.spec.params.size() != b.spec.params.size()) return false;
    for (size_t i = 0; i < a.spec.params.size(); ++i)
        if (a.spec.params[i].name != b.spec.params[i].name ||
            a.spec.params[i].base_flag != b.spec.params[i].base_flag)
            return false;
    if (a.spec.symbols.size() != b.spec.symbols.size()) return false;
    for (int i = 0; i < a.spec.symbols.size(); ++i) {
        const auto& sa = a.spec.symbols.at(i);
        const auto& sb = b.spec.symbols.at(i);
        if (sa.name != sb.name || sa.arity != sb.arity) return false;
        if (sa.slot_rules.size() != sb.slot_rules.size()) return false;
        auto ia = sa.slot_rules.begin();
        auto ib = sb.slot_rules.begin();
        for (; ia != sa.slot_rules.end(); ++ia, ++ib)
            if (ia->first != ib->first || !(ia->second == ib->second)) return false;
    }
    if (!(a.lagrangian.L == b.lagrangian.L)) return false;
    if (a.lifts.size() != b.lifts.size() || a.variations.size() != b.variations.size())
        return false;
    for (size_t i = 0; i < a.lifts.size(); ++i) {
        if (a.lifts[i].name != b.lifts[i].name) return false;
        for (size_t d = 0; d < a.lifts[i].field.xi.size(); ++d)
            if (!(a.lifts[i].field.xi[d] == b.lifts[i].field.xi[d])) return false;
        for (size_t f = 0; f < a.lifts[i].field.Xi.size(); ++f)
            if (!(a.lifts[i].field.Xi[f] == b.lifts[i].field.Xi[f])) return false;
    }
    for (size_t i = 0; i < a.variations.size(); ++i) {
        if (a.variations[i].name != b.variations[i].name) return false;
        for (size_t f = 0; f < a.variations[i].field.comps.size(); ++f)
            if (!(a.variations[i].field.comps[f] == b.variations[i].field.comps[f])) return false;
    }
    if (a.background.has_value() != b.background.has_value()) return false;
    if (a.background) {
        for (size_t f = 0; f < a.background->comps.size(); ++f)
            if (!(a.background->comps[f] == b.background->comps[f])) return false;
    }
    return true;
}

}  // namespace varseq
