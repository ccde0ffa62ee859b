#pragma once

#include "varseq/errors.hpp"
#include "varseq/multi_index.hpp"
#include "varseq/rational.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace varseq {

// Node kinds, in canonical comparison rank.
enum class Kind : uint8_t {
    Num,     // exact rational constant
    Pi,      // the circle constant
    Aux,     // auxiliary scalar (internal: homotopy parameter etc.)
    Coord,   // base coordinate x^sigma
    Jet,     // jet variable y^i_alpha
    Param,   // parameter-function derivative eps^A_alpha
    Arg,     // argument placeholder inside defined-symbol derivative rules
    SymApp,  // defined-symbol application
    Fun,     // elementary function
    Pow,     // rational power
    Prod,    // n-ary product
    Sum,     // n-ary sum
};

enum class Fn : uint8_t { Sin, Cos, Exp, Ln };

// A differentiable leaf: base coordinate, jet variable, or parameter derivative.
struct VarKey {
    Kind kind = Kind::Coord;  // Coord | Jet | Param
    int idx = 0;              // coordinate sigma / field i / parameter A
    MultiIndex mi;            // Jet/Param only

    static VarKey coordinate(int sigma) { return {Kind::Coord, sigma, {}}; }
    static VarKey jet(int field, MultiIndex a) { return {Kind::Jet, field, std::move(a)}; }
    static VarKey parameter(int p, MultiIndex a) { return {Kind::Param, p, std::move(a)}; }

    friend int cmp(const VarKey& a, const VarKey& b) {
        if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
        if (a.idx != b.idx) return a.idx < b.idx ? -1 : 1;
        return cmp(a.mi, b.mi);
    }
    bool operator==(const VarKey& o) const { return cmp(*this, o) == 0; }
    bool operator<(const VarKey& o) const { return cmp(*this, o) < 0; }
};

class Expr;
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;

struct ExprNode {
    Kind kind = Kind::Num;
    Rational num;            // Num value; Pow exponent
    int idx = 0;             // Coord/Jet/Param/Aux/Arg index, SymApp symbol id, Fun code
    MultiIndex mi;           // Jet/Param
    std::vector<Expr> kids;  // Sum/Prod members, Pow base, Fun arg, SymApp args
};

// Immutable symbolic expression held in canonical normal form: sums and
// products flattened and sorted, like terms collected, rational coefficients
// folded.  The zero expression is the unique rational 0.
class Expr {
  public:
    Expr();  // zero

    static Expr num(Rational q);
    static Expr num(long n, long d = 1);
    static Expr pi();
    static Expr aux(int id);
    static Expr arg(int slot);
    static Expr coordinate(int sigma);
    static Expr jet(int field, MultiIndex a);
    static Expr parameter(int p, MultiIndex a);
    static Expr variable(const VarKey& v);

    static Expr add(std::vector<Expr> terms);
    static Expr mul(std::vector<Expr> factors);
    static Expr pow(const Expr& base, const Rational& exponent);
    static Expr fun(Fn f, const Expr& argument);
    static Expr symapp(int symbol, std::vector<Expr> args);

    // Non-normalizing constructor, for exercising normalize() in tests.
    static Expr raw(Kind k, Rational num, int idx, MultiIndex mi, std::vector<Expr> kids);

    Kind kind() const { return node_->kind; }
    const Rational& num_value() const { return node_->num; }
    int index() const { return node_->idx; }
    Fn fn() const { return static_cast<Fn>(node_->idx); }
    const MultiIndex& mi() const { return node_->mi; }
    const std::vector<Expr>& kids() const { return node_->kids; }

    bool is_zero() const { return node_->kind == Kind::Num && node_->num == 0; }
    bool is_one() const { return node_->kind == Kind::Num && node_->num == 1; }
    bool is_num() const { return node_->kind == Kind::Num; }
    bool is_var() const {
        return node_->kind == Kind::Coord || node_->kind == Kind::Jet || node_->kind == Kind::Param;
    }
    VarKey var_key() const { return {node_->kind, node_->idx, node_->mi}; }

    friend int cmp(const Expr& a, const Expr& b);
    bool same(const Expr& o) const { return cmp(*this, o) == 0; }
    bool operator==(const Expr& o) const { return same(o); }
    bool operator!=(const Expr& o) const { return !same(o); }
    bool operator<(const Expr& o) const { return cmp(*this, o) < 0; }

    Expr operator+(const Expr& o) const { return add({*this, o}); }
    Expr operator-(const Expr& o) const;
    Expr operator-() const;
    Expr operator*(const Expr& o) const { return mul({*this, o}); }
    Expr operator/(const Expr& o) const { return mul({*this, pow(o, Rational(-1))}); }

    const ExprNode& node() const { return *node_; }

  private:
    explicit Expr(NodePtr n) : node_(std::move(n)) {}
    NodePtr node_;
};

inline Expr operator*(long c, const Expr& e) { return Expr::num(c) * e; }
inline Expr operator+(long c, const Expr& e) { return Expr::num(c) + e; }
inline Expr operator-(long c, const Expr& e) { return Expr::num(c) - e; }

// Rebuild bottom-up through the canonicalizing constructors.  Idempotent and
// the identity on already-canonical expressions.
Expr normalize(const Expr& e);

// ---------------------------------------------------------------------------
// Defined symbols

// A named function symbol with per-argument-slot derivative rules.  Rules are
// expression templates over Arg placeholders; slot k's rule is the partial
// derivative of the symbol with respect to its k-th argument.  A symbol with
// no rule for a slot cannot be differentiated through that slot.
struct DefinedSymbol {
    std::string name;
    int arity = 0;
    std::map<int, Expr> slot_rules;
};

class SymbolTable {
  public:
    int declare(DefinedSymbol sym);
    int find(const std::string& name) const;  // -1 when absent
    const DefinedSymbol& at(int id) const;
    int size() const { return static_cast<int>(syms_.size()); }

    // Every symbol referenced inside a rule must itself be declared with
    // matching arity; throws UnknownSymbol otherwise.
    void validate_closed() const;

    static const SymbolTable& empty();

  private:
    std::vector<DefinedSymbol> syms_;
};

// Substitute Arg placeholders in a rule template by actual arguments.
Expr instantiate_template(const Expr& tmpl, const std::vector<Expr>& args);

// ---------------------------------------------------------------------------
// Core operations

// Exact partial derivative with respect to a single variable key; all other
// keys are independent.  Defined symbols differentiate through their rules.
Expr partial(const Expr& e, const VarKey& v, const SymbolTable& tab = SymbolTable::empty());

// Simultaneous substitution of variable keys, then renormalization.
Expr substitute(const Expr& e, const std::map<VarKey, Expr>& bindings);

// Substitute auxiliary scalars by expressions.
Expr substitute_aux(const Expr& e, const std::map<int, Expr>& bindings);

void collect_keys(const Expr& e, std::set<VarKey>& out);
std::set<VarKey> keys_of(const Expr& e);

// Max |alpha| over jet variables and parameter derivatives; 0 when none occur.
int jet_order(const Expr& e);

// Largest parameter index occurring in e, or -1.
int max_param_index(const Expr& e);

// Polynomial degree of e in the keys selected by `in_bank`; nullopt when the
// dependence is not polynomial (inside Fun, SymApp or a non-integer power).
std::optional<long> poly_degree(const Expr& e, const std::function<bool(const VarKey&)>& in_bank);

// Generic derivation: extends `leaf` (the image of each variable key) by the
// Leibniz and chain rules; defined symbols differentiate through their rules.
Expr derive(const Expr& e, const std::function<Expr(const VarKey&)>& leaf,
            const SymbolTable& tab = SymbolTable::empty());

// Rename parameter indices everywhere (bank bookkeeping).
Expr rename_params(const Expr& e, const std::function<int(int)>& f);

// Numeric evaluation.  `value` supplies variable keys; defined symbols and
// auxiliary scalars are rejected unless `symeval` / `auxval` are given.
double eval(const Expr& e, const std::function<double(const VarKey&)>& value,
            const std::function<double(int, const std::vector<double>&)>* symeval = nullptr,
            const std::function<double(int)>* auxval = nullptr);

const char* fn_name(Fn f);

}  // namespace varseq
