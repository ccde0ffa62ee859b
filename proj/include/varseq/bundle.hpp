#pragma once

#include "varseq/expr.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace varseq {

using json = nlohmann::ordered_json;

struct ParamDecl {
    std::string name;
    bool base_flag = false;  // carries a component of the base flow xi
};

// One fibered chart: base/fiber coordinate names, jet-order bookkeeping,
// defined symbols, and the declared parameter functions.
struct BundleSpec {
    int n = 1;
    int m = 1;
    std::vector<std::string> coords;
    std::vector<std::string> fields;
    int s_max = 1;
    int order_cap_override = 0;  // 0: use the default 4*s_max + 2
    SymbolTable symbols;
    std::vector<ParamDecl> params;

    int cap() const { return order_cap_override > 0 ? order_cap_override : 4 * s_max + 2; }

    int coord_index(const std::string& name) const;
    int field_index(const std::string& name) const;
    int param_index(const std::string& name) const;

    // Throws EngineError on duplicate names or out-of-range dimensions.
    void validate() const;

    json to_json() const;
    static BundleSpec from_json(const json& j);
};

// Convenience builder for tests: coordinate names then field names.
BundleSpec make_bundle(std::vector<std::string> coords, std::vector<std::string> fields,
                       int s_max = 2);

// The formal derivative D_sigma: acts as d/dx^sigma with jet variables and
// parameter derivatives promoted one order.  Throws OrderOverflow past cap().
Expr total_derivative(const Expr& e, int sigma, const BundleSpec& spec);

// D_alpha by iterated application; independent of the peeling order.
Expr iterated_total_derivative(const Expr& e, const MultiIndex& alpha, const BundleSpec& spec);

}  // namespace varseq
