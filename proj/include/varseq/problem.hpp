#pragma once

#include "varseq/noether.hpp"
#include "varseq/oracle.hpp"

#include <optional>
#include <string>
#include <vector>

namespace varseq {

struct LiftDecl {
    std::string name;
    ParamVectorField field;
};

struct VariationDecl {
    std::string name;
    VerticalField field;
};

// Parsed problem file: bundle, Lagrangian, named lift rules, named variation
// fields, and an optional background section.
struct ProblemFile {
    BundleSpec spec;
    Lagrangian lagrangian;
    std::vector<LiftDecl> lifts;
    std::vector<VariationDecl> variations;
    std::optional<SymbolicSection> background;
    std::string source_name;

    const LiftDecl* find_lift(const std::string& name) const;
    const VariationDecl* find_variation(const std::string& name) const;
};

ProblemFile parse_problem(const std::string& text, const std::string& source_name = "<input>");

// Canonical pretty-printed problem file; parses back to an equal ProblemFile.
std::string print_problem(const ProblemFile& pf);

bool problems_equal(const ProblemFile& a, const ProblemFile& b);

// Expression-only entry point (used for rule templates and tests).
// `allow_args` admits @k argument placeholders.
Expr parse_expression_text(const std::string& text, const BundleSpec& spec,
                           bool allow_args = false);

}  // namespace varseq
