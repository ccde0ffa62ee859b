#pragma once

#include "varseq/problem.hpp"

#include <string>

namespace varseq {

struct CliOptions {
    std::string format = "text";  // text | latex | json
    std::string lift;             // lift rule name; empty selects the first
    std::string phi;              // variation names for secondvar/kernel commands
    std::string psi;
    int max_order = 0;     // overrides the bundle order cap when positive
    double tolerance = 1e-8;
    unsigned seed = 20240711;
};

struct ReportDocument {
    std::string command;
    int exit_code = 0;
    json body;          // schema varseq.report.v1
    std::string text;   // plain-text rendering
    std::string latex;  // LaTeX rendering

    std::string rendered(const CliOptions& opts) const;
};

// cmd in {el, momenta, noether, secondvar, jacobi, bianchi, hamiltonian, verify}.
ReportDocument run_command(const std::string& cmd, const ProblemFile& pf, const CliOptions& opts);

}  // namespace varseq
