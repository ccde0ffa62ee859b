#pragma once

#include "varseq/bundle.hpp"

#include <map>
#include <utility>
#include <vector>

namespace varseq {

// Wedge-monomial generator: either a contact form theta^i_alpha or dx^sigma.
// Canonical order lists contact generators before horizontal ones.
struct Generator {
    bool contact = false;
    int i = 0;       // field (contact) or direction (horizontal)
    MultiIndex mi;   // contact only

    static Generator theta(int field, MultiIndex a) { return {true, field, std::move(a)}; }
    static Generator dx(int sigma) { return {false, sigma, {}}; }

    friend int cmp(const Generator& a, const Generator& b) {
        if (a.contact != b.contact) return a.contact ? -1 : 1;
        if (a.i != b.i) return a.i < b.i ? -1 : 1;
        return cmp(a.mi, b.mi);
    }
    bool operator==(const Generator& o) const { return cmp(*this, o) == 0; }
    bool operator<(const Generator& o) const { return cmp(*this, o) < 0; }
};

using GenList = std::vector<Generator>;

// Mixed contact/horizontal differential form: sum of coefficient * wedge
// monomial, kept with strictly sorted generators per term and canonical
// coefficients.  A repeated generator kills its term.
class Form {
  public:
    Form() = default;

    static Form scalar(Expr c);
    // Canonicalizes gens (sorting sign absorbed into the coefficient).
    static Form term(GenList gens, Expr c);

    bool is_zero() const { return terms_.empty(); }
    const std::map<GenList, Expr>& terms() const { return terms_; }

    Form operator+(const Form& o) const;
    Form operator-(const Form& o) const;
    Form operator*(const Expr& c) const;  // coefficient scaling

    // Degrees are per-term; these return the common degree and throw if the
    // form is not homogeneous (zero forms count as any degree).
    int contact_degree() const;
    int horizontal_degree() const;

    void add_term(GenList gens, Expr c);  // canonicalizing accumulation

  private:
    std::map<GenList, Expr> terms_;
};

Form wedge(const Form& a, const Form& b);

// Horizontal differential, a degree-(0,1) graded derivation:
// d_H f = D_sigma f dx^sigma on coefficients, d_H dx = 0,
// d_H theta^i_alpha = dx^lambda ^ theta^i_{alpha+lambda}.
Form d_H(const Form& w, const BundleSpec& spec);

// Vertical differential, degree (1,0): d_V f = (partial^alpha_i f) theta^i_alpha;
// generators are d_V-closed.
Form d_V(const Form& w, const BundleSpec& spec);

// Projection onto the contact-degree-k part (k = 0: horizontalization).
Form horizontalize(const Form& w, int k = 0);

// Full differential of a function: d f = d_H f + d_V f.
Form differential(const Expr& f, const BundleSpec& spec);

// Contraction data for the interior product: raw components X^sigma and
// X^i_alpha; theta^i_alpha contracts with X^i_alpha - y^i_{alpha+gamma} X^gamma.
struct VectorData {
    std::vector<Expr> xi;                         // n entries
    std::map<std::pair<int, MultiIndex>, Expr> comp;  // (i, alpha) -> X^i_alpha

    Expr component(int i, const MultiIndex& a) const {
        auto it = comp.find({i, a});
        return it == comp.end() ? Expr::num(0) : it->second;
    }
    Expr vertical(int i, const MultiIndex& a, const BundleSpec& spec) const;
};

Form interior_product(const VectorData& X, const Form& w, const BundleSpec& spec);

// Top horizontal volume ds = dx^1 ^ ... ^ dx^n and its contractions
// ds_sigma = d/dx^sigma _| ds.
Form volume_form(const BundleSpec& spec);
Form volume_contraction(const BundleSpec& spec, int sigma);

}  // namespace varseq
