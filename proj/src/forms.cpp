#include "varseq/forms.hpp"

#include <algorithm>

namespace varseq {

namespace {

// Sort generators, counting inversions; returns false when a generator repeats.
bool sort_gens(GenList& g, int& sign) {
    sign = 1;
    // insertion sort; generator lists are short
    for (size_t i = 1; i < g.size(); ++i) {
        Generator key = g[i];
        size_t j = i;
        while (j > 0 && cmp(key, g[j - 1]) < 0) {
            g[j] = g[j - 1];
            --j;
            sign = -sign;
        }
        g[j] = key;
    }
    for (size_t i = 1; i < g.size(); ++i)
        if (g[i] == g[i - 1]) return false;
    return true;
}

}  // namespace

Form Form::scalar(Expr c) { return term({}, std::move(c)); }

Form Form::term(GenList gens, Expr c) {
    Form f;
    f.add_term(std::move(gens), std::move(c));
    return f;
}

void Form::add_term(GenList gens, Expr c) {
    if (c.is_zero()) return;
    int sign = 1;
    if (!sort_gens(gens, sign)) return;
    Expr coeff = sign == 1 ? c : -c;
    auto it = terms_.find(gens);
    if (it == terms_.end()) {
        terms_.emplace(std::move(gens), std::move(coeff));
    } else {
        it->second = it->second + coeff;
        if (it->second.is_zero()) terms_.erase(it);
    }
}

Form Form::operator+(const Form& o) const {
    Form r = *this;
    for (const auto& [g, c] : o.terms_) r.add_term(g, c);
    return r;
}

Form Form::operator-(const Form& o) const {
    Form r = *this;
    for (const auto& [g, c] : o.terms_) r.add_term(g, -c);
    return r;
}

Form Form::operator*(const Expr& c) const {
    Form r;
    for (const auto& [g, k] : terms_) r.add_term(g, k * c);
    return r;
}

namespace {

int cdeg(const GenList& g) {
    int d = 0;
    for (const auto& x : g) d += x.contact ? 1 : 0;
    return d;
}

int hdeg(const GenList& g) {
    int d = 0;
    for (const auto& x : g) d += x.contact ? 0 : 1;
    return d;
}

}  // namespace

int Form::contact_degree() const {
    int d = -1;
    for (const auto& [g, c] : terms_) {
        int cd = cdeg(g);
        if (d < 0) d = cd;
        if (cd != d) throw EngineError("form is not contact-homogeneous");
    }
    return d < 0 ? 0 : d;
}

int Form::horizontal_degree() const {
    int d = -1;
    for (const auto& [g, c] : terms_) {
        int hd = hdeg(g);
        if (d < 0) d = hd;
        if (hd != d) throw EngineError("form is not horizontally homogeneous");
    }
    return d < 0 ? 0 : d;
}

Form wedge(const Form& a, const Form& b) {
    Form r;
    for (const auto& [ga, ca] : a.terms()) {
        for (const auto& [gb, cb] : b.terms()) {
            GenList g = ga;
            g.insert(g.end(), gb.begin(), gb.end());
            r.add_term(std::move(g), ca * cb);
        }
    }
    return r;
}

Form d_H(const Form& w, const BundleSpec& spec) {
    Form r;
    for (const auto& [gens, c] : w.terms()) {
        // coefficient part: D_sigma c dx^sigma ^ gens
        for (int s = 0; s < spec.n; ++s) {
            Expr dc = total_derivative(c, s, spec);
            if (dc.is_zero()) continue;
            GenList g;
            g.reserve(gens.size() + 1);
            g.push_back(Generator::dx(s));
            g.insert(g.end(), gens.begin(), gens.end());
            r.add_term(std::move(g), dc);
        }
        // generator part: graded Leibniz, all generators of degree one
        for (size_t j = 0; j < gens.size(); ++j) {
            if (!gens[j].contact) continue;  // d_H dx = 0
            int sign = (j % 2 == 0) ? 1 : -1;
            for (int lam = 0; lam < spec.n; ++lam) {
                MultiIndex a = gens[j].mi.plus(lam);
                if (a.order() > spec.cap())
                    throw OrderOverflow("d_H exceeds jet order cap");
                GenList g;
                g.reserve(gens.size() + 1);
                for (size_t k = 0; k < j; ++k) g.push_back(gens[k]);
                g.push_back(Generator::dx(lam));
                g.push_back(Generator::theta(gens[j].i, a));
                for (size_t k = j + 1; k < gens.size(); ++k) g.push_back(gens[k]);
                r.add_term(std::move(g), sign == 1 ? c : -c);
            }
        }
    }
    return r;
}

Form d_V(const Form& w, const BundleSpec& spec) {
    Form r;
    for (const auto& [gens, c] : w.terms()) {
        for (const auto& key : keys_of(c)) {
            if (key.kind != Kind::Jet) continue;
            Expr dc = partial(c, key, spec.symbols);
            if (dc.is_zero()) continue;
            GenList g;
            g.reserve(gens.size() + 1);
            g.push_back(Generator::theta(key.idx, key.mi));
            g.insert(g.end(), gens.begin(), gens.end());
            r.add_term(std::move(g), dc);
        }
    }
    return r;
}

Form horizontalize(const Form& w, int k) {
    Form r;
    for (const auto& [g, c] : w.terms())
        if (cdeg(g) == k) r.add_term(g, c);
    return r;
}

Form differential(const Expr& f, const BundleSpec& spec) {
    return d_H(Form::scalar(f), spec) + d_V(Form::scalar(f), spec);
}

Expr VectorData::vertical(int i, const MultiIndex& a, const BundleSpec& spec) const {
    Expr v = component(i, a);
    for (int g = 0; g < spec.n; ++g) {
        if (static_cast<size_t>(g) >= xi.size() || xi[g].is_zero()) continue;
        v = v - Expr::jet(i, a.plus(g)) * xi[g];
    }
    return v;
}

Form interior_product(const VectorData& X, const Form& w, const BundleSpec& spec) {
    Form r;
    for (const auto& [gens, c] : w.terms()) {
        for (size_t j = 0; j < gens.size(); ++j) {
            Expr val = gens[j].contact
                           ? X.vertical(gens[j].i, gens[j].mi, spec)
                           : (static_cast<size_t>(gens[j].i) < X.xi.size() ? X.xi[gens[j].i]
                                                                           : Expr::num(0));
            if (val.is_zero()) continue;
            int sign = (j % 2 == 0) ? 1 : -1;
            GenList g;
            g.reserve(gens.size() - 1);
            for (size_t k = 0; k < gens.size(); ++k)
                if (k != j) g.push_back(gens[k]);
            r.add_term(std::move(g), sign == 1 ? c * val : -(c * val));
        }
    }
    return r;
}

Form volume_form(const BundleSpec& spec) {
    GenList g;
    for (int s = 0; s < spec.n; ++s) g.push_back(Generator::dx(s));
    return Form::term(std::move(g), Expr::num(1));
}

Form volume_contraction(const BundleSpec& spec, int sigma) {
    GenList g;
    for (int s = 0; s < spec.n; ++s)
        if (s != sigma) g.push_back(Generator::dx(s));
    int sign = sigma % 2 == 0 ? 1 : -1;
    return Form::term(std::move(g), Expr::num(sign));
}

}  // namespace varseq
