#pragma once

#include "varseq/bundle.hpp"

#include <string>

namespace varseq {

// Plain-text rendering, parseable by the problem-file expression grammar.
std::string to_text(const Expr& e, const BundleSpec& spec);

std::string to_latex(const Expr& e, const BundleSpec& spec);

// JSON expression tree (report schema v1).
json to_json_tree(const Expr& e, const BundleSpec& spec);

std::string varkey_name(const VarKey& k, const BundleSpec& spec);

}  // namespace varseq
