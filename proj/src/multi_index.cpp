#include "varseq/multi_index.hpp"

#include <algorithm>
#include <functional>

namespace varseq {

std::vector<MultiIndex> multiindices_of_order(int n, int order) {
    std::vector<MultiIndex> out;
    MultiIndex cur(n);
    // Recursive distribution of `order` over n slots, emitting larger leading
    // components first to match the canonical ordering.
    std::function<void(int, int)> rec = [&](int slot, int remaining) {
        if (slot == n - 1) {
            cur.ex[static_cast<size_t>(slot)] = remaining;
            out.push_back(cur);
            return;
        }
        for (int v = remaining; v >= 0; --v) {
            cur.ex[static_cast<size_t>(slot)] = v;
            rec(slot + 1, remaining - v);
        }
    };
    if (n == 0) {
        if (order == 0) out.push_back(MultiIndex(0));
        return out;
    }
    rec(0, order);
    return out;
}

std::vector<MultiIndex> enumerate_multiindices(int n, int max_order) {
    std::vector<MultiIndex> out;
    for (int k = 0; k <= max_order; ++k) {
        auto level = multiindices_of_order(n, k);
        out.insert(out.end(), level.begin(), level.end());
    }
    return out;
}

}  // namespace varseq
