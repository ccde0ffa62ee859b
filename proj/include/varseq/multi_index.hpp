#pragma once

#include "varseq/rational.hpp"

#include <string>
#include <vector>

namespace varseq {

// Symmetric derivative multi-index over the n base directions.
// The canonical ordering is graded: first by |alpha|, then within a grade the
// index whose leading components are larger comes first, so that for n=2 the
// enumeration runs (0,0),(1,0),(0,1),(2,0),(1,1),(0,2),...
struct MultiIndex {
    std::vector<int> ex;

    MultiIndex() = default;
    explicit MultiIndex(int n) : ex(static_cast<size_t>(n), 0) {}
    MultiIndex(std::initializer_list<int> init) : ex(init) {}

    static MultiIndex unit(int n, int dir) {
        MultiIndex a(n);
        a.ex[static_cast<size_t>(dir)] = 1;
        return a;
    }

    int dim() const { return static_cast<int>(ex.size()); }

    int order() const {
        int s = 0;
        for (int v : ex) s += v;
        return s;
    }

    bool is_zero() const { return order() == 0; }

    int operator[](int i) const { return ex[static_cast<size_t>(i)]; }

    // alpha + sigma: increment one direction.
    MultiIndex plus(int dir) const {
        MultiIndex a = *this;
        a.ex[static_cast<size_t>(dir)] += 1;
        return a;
    }

    MultiIndex operator+(const MultiIndex& o) const {
        MultiIndex a = *this;
        for (size_t i = 0; i < ex.size(); ++i) a.ex[i] += o.ex[i];
        return a;
    }

    // Componentwise difference; false when any component would go negative.
    bool minus(const MultiIndex& o, MultiIndex& out) const {
        out = *this;
        for (size_t i = 0; i < ex.size(); ++i) {
            out.ex[i] -= o.ex[i];
            if (out.ex[i] < 0) return false;
        }
        return true;
    }

    bool contains(const MultiIndex& o) const {
        for (size_t i = 0; i < ex.size(); ++i)
            if (ex[i] < o.ex[i]) return false;
        return true;
    }

    // Smallest direction with a nonzero exponent; -1 for the zero index.
    int smallest_dir() const {
        for (size_t i = 0; i < ex.size(); ++i)
            if (ex[i] > 0) return static_cast<int>(i);
        return -1;
    }

    Int factorial_product() const {
        Int f = 1;
        for (int v : ex) f *= factorial(v);
        return f;
    }

    bool operator==(const MultiIndex& o) const { return ex == o.ex; }
    bool operator!=(const MultiIndex& o) const { return ex != o.ex; }
};

// Canonical graded comparison described above: negative when a precedes b.
inline int cmp(const MultiIndex& a, const MultiIndex& b) {
    int oa = a.order(), ob = b.order();
    if (oa != ob) return oa < ob ? -1 : 1;
    for (size_t i = 0; i < a.ex.size() && i < b.ex.size(); ++i) {
        if (a.ex[i] != b.ex[i]) return a.ex[i] > b.ex[i] ? -1 : 1;
    }
    if (a.ex.size() != b.ex.size()) return a.ex.size() < b.ex.size() ? -1 : 1;
    return 0;
}

inline bool operator<(const MultiIndex& a, const MultiIndex& b) { return cmp(a, b) < 0; }

// Product of per-direction binomials C(alpha_i, beta_i).
inline Int multi_binomial(const MultiIndex& a, const MultiIndex& b) {
    Int r = 1;
    for (size_t i = 0; i < a.ex.size(); ++i) r *= binomial(a.ex[i], b.ex[i]);
    return r;
}

// All multi-indices with 0 <= |alpha| <= max_order in canonical order.
std::vector<MultiIndex> enumerate_multiindices(int n, int max_order);

// All multi-indices of exactly the given order, in canonical order.
std::vector<MultiIndex> multiindices_of_order(int n, int order);

}  // namespace varseq
