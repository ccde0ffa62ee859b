#include "varseq/report.hpp"

#include "varseq/render.hpp"

#include <random>
#include <sstream>

namespace varseq {

namespace {

json expr_json(const Expr& e, const BundleSpec& spec, bool with_tree = false) {
    json j;
    j["text"] = to_text(e, spec);
    j["latex"] = to_latex(e, spec);
    if (with_tree) j["tree"] = to_json_tree(e, spec);
    return j;
}

json report_header(const std::string& cmd, const ProblemFile& pf) {
    json j;
    j["schema"] = "varseq.report.v1";
    j["command"] = cmd;
    j["problem"] = pf.source_name;
    return j;
}

const LiftDecl& select_lift(const ProblemFile& pf, const CliOptions& opts) {
    if (pf.lifts.empty()) throw EngineError("problem file declares no [lift] rules");
    if (opts.lift.empty()) return pf.lifts.front();
    const LiftDecl* l = pf.find_lift(opts.lift);
    if (!l) throw EngineError("no lift named '" + opts.lift + "'");
    return *l;
}

const VariationDecl& select_variation(const ProblemFile& pf, const std::string& name) {
    if (pf.variations.empty()) throw EngineError("problem file declares no [variation] fields");
    if (name.empty()) return pf.variations.front();
    const VariationDecl* v = pf.find_variation(name);
    if (!v) throw EngineError("no variation named '" + name + "'");
    return *v;
}

std::string index_label(const MultiIndex& a) {
    std::string s = "[";
    for (int d = 0; d < a.dim(); ++d) {
        if (d) s += ",";
        s += std::to_string(a[d]);
    }
    return s + "]";
}

// ---------------------------------------------------------------------------
// seeded random expressions for the verify battery

struct RandomExprs {
    std::mt19937 rng;
    const BundleSpec& spec;
    int max_order;

    RandomExprs(unsigned seed, const BundleSpec& s, int ord) : rng(seed), spec(s), max_order(ord) {}

    int pick(int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }

    Expr atom() {
        int which = pick(4);
        if (which == 0) return Expr::coordinate(pick(spec.n));
        auto idx = enumerate_multiindices(spec.n, max_order);
        return Expr::jet(pick(spec.m), idx[static_cast<size_t>(pick(static_cast<int>(idx.size())))]);
    }

    Expr gen(int depth) {
        if (depth <= 0) {
            if (pick(4) == 0) return Expr::num(pick(5) - 2);
            return atom();
        }
        switch (pick(6)) {
            case 0: return gen(depth - 1) + gen(depth - 1);
            case 1: return gen(depth - 1) * gen(depth - 1);
            case 2: return Expr::pow(atom(), Rational(2));
            case 3: return Expr::fun(pick(2) ? Fn::Sin : Fn::Cos, atom());
            case 4: return Expr::num(pick(7) - 3) * gen(depth - 1);
            default: return gen(depth - 1) - gen(depth - 1);
        }
    }
};

struct Check {
    std::string name;
    bool ok;
    std::string detail;
};

std::vector<Check> run_verify(const ProblemFile& pf, const BundleSpec& spec,
                              const CliOptions& opts) {
    std::vector<Check> checks;
    auto add = [&](const std::string& name, bool ok, const std::string& detail = "") {
        checks.push_back({name, ok, detail});
    };

    // parser round trip
    try {
        ProblemFile again = parse_problem(print_problem(pf), pf.source_name);
        add("parser-round-trip", problems_equal(pf, again));
    } catch (const EngineError& e) {
        add("parser-round-trip", false, e.what());
    }

    add("normalize-idempotent", normalize(pf.lagrangian.L) == pf.lagrangian.L);

    // randomized calculus identities
    {
        RandomExprs gen(opts.seed, spec, std::min(2, spec.s_max));
        bool ok = true;
        std::string detail;
        for (int k = 0; k < 12 && ok; ++k) {
            Expr f = gen.gen(2);
            Form F = Form::scalar(f);
            if (!d_H(d_H(F, spec), spec).is_zero()) {
                ok = false;
                detail = "d_H^2 != 0";
            }
            if (ok && !d_V(d_V(F, spec), spec).is_zero()) {
                ok = false;
                detail = "d_V^2 != 0";
            }
            if (ok) {
                Form anti = d_H(d_V(F, spec), spec) + d_V(d_H(F, spec), spec);
                if (!anti.is_zero()) {
                    ok = false;
                    detail = "d_H d_V + d_V d_H != 0";
                }
            }
            if (ok && spec.n >= 2) {
                Expr a = total_derivative(total_derivative(f, 0, spec), 1, spec);
                Expr b = total_derivative(total_derivative(f, 1, spec), 0, spec);
                if (!(a == b)) {
                    ok = false;
                    detail = "total derivatives do not commute";
                }
            }
        }
        add("calculus-identities", ok, detail);
    }

    // first variation certificate with a generic projectable probe
    try {
        std::vector<Expr> xi, Xi;
        for (int d = 0; d < spec.n; ++d) xi.push_back(Expr::coordinate(d));
        for (int i = 0; i < spec.m; ++i) Xi.push_back(Expr::jet(i, MultiIndex(spec.n)));
        FirstVariation fv = first_variation(pf.lagrangian, xi, Xi, spec);
        add("first-variation-certificate", fv.residual.is_zero());
    } catch (const EngineError& e) {
        add("first-variation-certificate", false, e.what());
    }

    // momenta adjoint matches the Euler-Lagrange expressions
    try {
        SourceExpression E = euler_lagrange(pf.lagrangian, spec);
        int base = scratch_param_base(spec, {pf.lagrangian.L});
        Bank bank = Bank::param_range(base, spec.m);
        std::vector<Expr> terms;
        for (const auto& key : keys_of(pf.lagrangian.L)) {
            if (key.kind != Kind::Jet) continue;
            Expr d = partial(pf.lagrangian.L, key, spec.symbols);
            if (!d.is_zero()) terms.push_back(d * Expr::parameter(base + key.idx, key.mi));
        }
        IBPResult ibp = integrate_by_parts(Expr::add(std::move(terms)), bank, spec);
        bool ok = ibp.certificate_residual(bank, spec).is_zero();
        for (int i = 0; i < spec.m && ok; ++i) {
            auto it = ibp.adjoint.find(base + i);
            Expr adj = it == ibp.adjoint.end() ? Expr::num(0) : it->second;
            if (!(adj == E.comp[static_cast<size_t>(i)])) ok = false;
        }
        add("momenta-certificate", ok);
    } catch (const EngineError& e) {
        add("momenta-certificate", false, e.what());
    }

    // Helmholtz self-adjointness of the Jacobi operator
    try {
        LinDiffOp J = linearize_el(pf.lagrangian, spec);
        add("jacobi-self-adjoint", adjoint(J, spec) == J);
    } catch (const EngineError& e) {
        add("jacobi-self-adjoint", false, e.what());
    }

    // null Lagrangians are annihilated
    {
        RandomExprs gen(opts.seed + 1, spec, std::min(2, spec.s_max));
        bool ok = true;
        for (int k = 0; k < 5 && ok; ++k) {
            BoundaryCurrent Wc = BoundaryCurrent::zero(spec);
            for (int d = 0; d < spec.n; ++d) Wc.comp[static_cast<size_t>(d)] = gen.gen(2);
            Expr div = divergence(Wc, spec);
            SourceExpression E = euler_lagrange(Lagrangian{Expr::num(0)}, spec);
            for (int i = 0; i < spec.m && ok; ++i)
                if (!euler_operator(div, Kind::Jet, i, spec).is_zero()) ok = false;
        }
        add("null-lagrangian-annihilation", ok);
    }

    for (const auto& l : pf.lifts) {
        try {
            LiftCheckReport rep = check_lift_properties(l.field, spec);
            add("lift-" + l.name + "-properties", rep.pass(), rep.detail);
        } catch (const NotSupported& e) {
            add("lift-" + l.name + "-properties", true, std::string("bracket check skipped: ") + e.what());
        } catch (const EngineError& e) {
            add("lift-" + l.name + "-properties", false, e.what());
        }
        try {
            SymmetryReport sym = check_symmetry(pf.lagrangian, l.field, spec);
            std::string kind = sym.kind == SymmetryKind::Exact
                                   ? "exact"
                                   : (sym.kind == SymmetryKind::Divergence ? "divergence" : "broken");
            add("lift-" + l.name + "-symmetry", true, kind);
            if (sym.kind != SymmetryKind::Broken) {
                NoetherCurrentResult nc = noether_current(pf.lagrangian, l.field.xi, l.field.Xi, spec);
                add("lift-" + l.name + "-noether-identity", nc.residual.is_zero());
            }
        } catch (const EngineError& e) {
            add("lift-" + l.name + "-symmetry", false, e.what());
        }
        try {
            BianchiReport br = bianchi_decompose(pf.lagrangian, l.field, spec);
            std::ostringstream det;
            if (br.degenerate) {
                det << "no parameters";
            } else {
                int z = 0;
                for (bool b : br.zero) z += b ? 1 : 0;
                det << z << "/" << br.zero.size() << " Bianchi expressions vanish";
            }
            add("lift-" + l.name + "-bianchi-certificate", br.residual.is_zero(), det.str());
        } catch (const EngineError& e) {
            add("lift-" + l.name + "-bianchi-certificate", false, e.what());
        }
    }

    for (const auto& v : pf.variations) {
        try {
            SecondVariation sv = second_variation(pf.lagrangian, v.field, v.field, spec);
            add("variation-" + v.name + "-secondvar-certificate", sv.residual.is_zero());
        } catch (const EngineError& e) {
            add("variation-" + v.name + "-secondvar-certificate", false, e.what());
        }
        try {
            ComparisonReport cr = verify_comparison_theorem(pf.lagrangian, v.field, spec);
            add("variation-" + v.name + "-comparison-theorem", cr.pass);
        } catch (const EngineError& e) {
            add("variation-" + v.name + "-comparison-theorem", false, e.what());
        }
    }

    // numeric oracle when the Lagrangian is symbol-free
    bool has_symbol = false;
    {
        std::function<void(const Expr&)> walk = [&](const Expr& e) {
            if (e.kind() == Kind::SymApp) has_symbol = true;
            for (const auto& k : e.kids()) walk(k);
        };
        walk(pf.lagrangian.L);
    }
    if (!has_symbol) {
        try {
            TestSection gamma;
            for (int i = 0; i < spec.m; ++i) {
                Expr phase = Expr::num(7 * (i + 1), 10);
                Expr s = Expr::num(2) + Expr::num(3, 10) * Expr::fun(Fn::Sin, Expr::coordinate(0) + phase);
                if (spec.n >= 2)
                    s = Expr::num(2) +
                        Expr::num(3, 10) * Expr::fun(Fn::Sin, Expr::coordinate(0) + phase) *
                            Expr::fun(Fn::Cos, Expr::coordinate(1));
                gamma.comps.push_back(s);
            }
            std::vector<int> shape(static_cast<size_t>(spec.n), spec.n == 1 ? 64 : 24);
            std::vector<double> lo(static_cast<size_t>(spec.n), 0.0);
            std::vector<double> hi(static_cast<size_t>(spec.n), 6.283185307179586476925287);
            FdReport fd = fd_gradient_check(pf.lagrangian, gamma, spec, shape, lo, hi);
            std::ostringstream det;
            det << "max rel err " << fd.max_rel_err;
            add("fd-oracle", fd.max_rel_err < 1e-3, det.str());
        } catch (const EngineError& e) {
            add("fd-oracle", false, e.what());
        }
    }

    if (pf.background) {
        try {
            SourceExpression E = euler_lagrange(pf.lagrangian, spec);
            bool ok = true;
            double worst = 0.0;
            for (int i = 0; i < spec.m; ++i) {
                Expr r = on_background(E.comp[static_cast<size_t>(i)], *pf.background, spec);
                if (r.is_zero()) continue;
                for (int s = 0; s < 17; ++s) {
                    double t = 0.1 + 0.37 * s;
                    double val = eval(r, [&](const VarKey& k) -> double {
                        if (k.kind == Kind::Coord) return t + 0.05 * k.idx;
                        throw EvalError("background residual has non-base variables");
                    });
                    worst = std::max(worst, std::abs(val));
                }
            }
            if (worst > opts.tolerance) ok = false;
            std::ostringstream det;
            det << "max residual " << worst;
            add("background-critical", ok, det.str());
        } catch (const EngineError& e) {
            add("background-critical", false, e.what());
        }
    }

    return checks;
}

}  // namespace

std::string ReportDocument::rendered(const CliOptions& opts) const {
    if (opts.format == "json") return body.dump(2) + "\n";
    if (opts.format == "latex") return latex;
    return text;
}

ReportDocument run_command(const std::string& cmd, const ProblemFile& pf,
                           const CliOptions& opts) {
    BundleSpec spec = pf.spec;
    if (opts.max_order > 0) spec.order_cap_override = opts.max_order;

    ReportDocument doc;
    doc.command = cmd;
    doc.body = report_header(cmd, pf);
    std::ostringstream text, latexos;

    if (cmd == "el") {
        SourceExpression E = euler_lagrange(pf.lagrangian, spec);
        json arr = json::array();
        for (int i = 0; i < spec.m; ++i) {
            const std::string& f = spec.fields[static_cast<size_t>(i)];
            text << "E[" << f << "] = " << to_text(E.comp[static_cast<size_t>(i)], spec) << "\n";
            latexos << "E_{" << f << "} = " << to_latex(E.comp[static_cast<size_t>(i)], spec)
                    << "\n";
            json e = expr_json(E.comp[static_cast<size_t>(i)], spec, true);
            e["field"] = f;
            arr.push_back(e);
        }
        doc.body["euler_lagrange"] = arr;
    } else if (cmd == "momenta") {
        Momenta p = momenta(pf.lagrangian, spec);
        json arr = json::array();
        for (int mu = 0; mu < spec.n; ++mu) {
            for (const auto& [key, c] : p.p[static_cast<size_t>(mu)]) {
                const std::string& f = spec.fields[static_cast<size_t>(key.first)];
                text << "p^" << spec.coords[static_cast<size_t>(mu)] << "[" << f
                     << index_label(key.second) << "] = " << to_text(c, spec) << "\n";
                latexos << "p^{" << spec.coords[static_cast<size_t>(mu)] << "}_{" << f
                        << index_label(key.second) << "} = " << to_latex(c, spec) << "\n";
                json e = expr_json(c, spec);
                e["mu"] = spec.coords[static_cast<size_t>(mu)];
                e["field"] = f;
                e["index"] = key.second.ex;
                arr.push_back(e);
            }
        }
        doc.body["momenta"] = arr;
    } else if (cmd == "noether") {
        const LiftDecl& l = select_lift(pf, opts);
        NoetherCurrentResult nc = noether_current(pf.lagrangian, l.field.xi, l.field.Xi, spec);
        std::string kind = nc.kind == SymmetryKind::Exact ? "exact" : "divergence";
        text << "symmetry: " << kind << "\n";
        json comps = json::array();
        for (int mu = 0; mu < spec.n; ++mu) {
            text << "eps^" << spec.coords[static_cast<size_t>(mu)] << " = "
                 << to_text(nc.current.comp[static_cast<size_t>(mu)], spec) << "\n";
            latexos << "\\epsilon^{" << spec.coords[static_cast<size_t>(mu)] << "} = "
                    << to_latex(nc.current.comp[static_cast<size_t>(mu)], spec) << "\n";
            json e = expr_json(nc.current.comp[static_cast<size_t>(mu)], spec);
            e["mu"] = spec.coords[static_cast<size_t>(mu)];
            comps.push_back(e);
        }
        bool exact = nc.residual.is_zero();
        text << "strong identity D_mu eps^mu = pounds . E: " << (exact ? "exact" : "VIOLATED")
             << "\n";
        doc.body["lift"] = l.name;
        doc.body["symmetry"] = kind;
        doc.body["current"] = comps;
        doc.body["strong_identity_exact"] = exact;
        if (!exact) doc.exit_code = 1;
    } else if (cmd == "secondvar") {
        const VariationDecl& vphi = select_variation(pf, opts.phi);
        const VariationDecl& vpsi = opts.psi.empty() ? vphi : select_variation(pf, opts.psi);
        SecondVariation sv = second_variation(pf.lagrangian, vphi.field, vpsi.field, spec);
        text << "B = " << to_text(sv.B, spec) << "\n";
        text << "H = " << to_text(sv.hpart, spec) << "\n";
        latexos << "B = " << to_latex(sv.B, spec) << "\n";
        json bd = json::array();
        for (int mu = 0; mu < spec.n; ++mu) {
            text << "G^" << spec.coords[static_cast<size_t>(mu)] << " = "
                 << to_text(sv.boundary.comp[static_cast<size_t>(mu)], spec) << "\n";
            json e = expr_json(sv.boundary.comp[static_cast<size_t>(mu)], spec);
            e["mu"] = spec.coords[static_cast<size_t>(mu)];
            bd.push_back(e);
        }
        bool exact = sv.residual.is_zero();
        text << "certificate: " << (exact ? "exact" : "VIOLATED") << "\n";
        doc.body["phi"] = vphi.name;
        doc.body["psi"] = vpsi.name;
        doc.body["B"] = expr_json(sv.B, spec);
        doc.body["H"] = expr_json(sv.hpart, spec);
        doc.body["G"] = bd;
        doc.body["certificate_exact"] = exact;
        if (!exact) doc.exit_code = 1;
    } else if (cmd == "jacobi") {
        LinDiffOp J = linearize_el(pf.lagrangian, spec);
        json arr = json::array();
        for (const auto& [key, c] : J.coeff) {
            auto [i, j, beta] = key;
            text << "J(" << spec.fields[static_cast<size_t>(i)] << ","
                 << spec.fields[static_cast<size_t>(j)] << ")" << index_label(beta) << " = "
                 << to_text(c, spec) << "\n";
            json e = expr_json(c, spec);
            e["row"] = spec.fields[static_cast<size_t>(i)];
            e["col"] = spec.fields[static_cast<size_t>(j)];
            e["index"] = beta.ex;
            arr.push_back(e);
        }
        doc.body["jacobi"] = arr;
        if (pf.background) {
            LinDiffOp Jbg = restrict_to_background(J, *pf.background, spec);
            json rarr = json::array();
            text << "restricted to background:\n";
            for (const auto& [key, c] : Jbg.coeff) {
                auto [i, j, beta] = key;
                text << "J(" << spec.fields[static_cast<size_t>(i)] << ","
                     << spec.fields[static_cast<size_t>(j)] << ")" << index_label(beta) << " = "
                     << to_text(c, spec) << "\n";
                json e = expr_json(c, spec);
                e["row"] = spec.fields[static_cast<size_t>(i)];
                e["col"] = spec.fields[static_cast<size_t>(j)];
                e["index"] = beta.ex;
                rarr.push_back(e);
            }
            doc.body["jacobi_on_background"] = rarr;
        }
    } else if (cmd == "bianchi") {
        const LiftDecl& l = select_lift(pf, opts);
        BianchiReport br = bianchi_decompose(pf.lagrangian, l.field, spec);
        doc.body["lift"] = l.name;
        doc.body["omega"] = expr_json(br.omega, spec);
        text << "omega = " << to_text(br.omega, spec) << "\n";
        latexos << "\\omega = " << to_latex(br.omega, spec) << "\n";
        if (br.degenerate) {
            text << "no parameters: nothing to decompose\n";
            doc.body["degenerate"] = true;
        } else {
            json arr = json::array();
            for (size_t A = 0; A < br.beta.size(); ++A) {
                const std::string& pname = spec.params[A].name;
                text << "beta[" << pname << "] = " << to_text(br.beta[A], spec)
                     << (br.zero[A] ? "   (= 0)" : "   (nonzero)") << "\n";
                latexos << "\\beta_{" << pname << "} = " << to_latex(br.beta[A], spec) << "\n";
                json e = expr_json(br.beta[A], spec);
                e["param"] = pname;
                e["zero"] = static_cast<bool>(br.zero[A]);
                arr.push_back(e);
            }
            json marr = json::array();
            for (int mu = 0; mu < spec.n; ++mu) {
                text << "M^" << spec.coords[static_cast<size_t>(mu)] << " = "
                     << to_text(br.M.comp[static_cast<size_t>(mu)], spec) << "\n";
                json e = expr_json(br.M.comp[static_cast<size_t>(mu)], spec);
                e["mu"] = spec.coords[static_cast<size_t>(mu)];
                marr.push_back(e);
            }
            doc.body["beta"] = arr;
            doc.body["M"] = marr;
            doc.body["all_zero"] = br.all_zero;
            doc.body["certificate_exact"] = br.residual.is_zero();
            text << "verdict: " << (br.all_zero ? "all Bianchi expressions vanish" : "nonzero Bianchi expression")
                 << "\n";
            if (!br.all_zero || !br.residual.is_zero()) doc.exit_code = 1;
        }
    } else if (cmd == "hamiltonian") {
        const LiftDecl& l = select_lift(pf, opts);
        HamiltonianResult hr = hamiltonian_current(pf.lagrangian, l.field, spec);
        doc.body["lift"] = l.name;
        json comps = json::array();
        for (int mu = 0; mu < spec.n; ++mu) {
            text << "H^" << spec.coords[static_cast<size_t>(mu)] << " = "
                 << to_text(hr.current.comp[static_cast<size_t>(mu)], spec) << "\n";
            latexos << "\\mathcal{H}^{" << spec.coords[static_cast<size_t>(mu)] << "} = "
                    << to_latex(hr.current.comp[static_cast<size_t>(mu)], spec) << "\n";
            json e = expr_json(hr.current.comp[static_cast<size_t>(mu)], spec);
            e["mu"] = spec.coords[static_cast<size_t>(mu)];
            comps.push_back(e);
        }
        bool conserved = hr.div_residual.is_zero();
        text << "D_mu H^mu = " << to_text(hr.div_residual, spec) << "\n";
        text << "conservation: " << (conserved ? "exact" : "VIOLATED") << "\n";
        doc.body["current"] = comps;
        doc.body["divergence"] = expr_json(hr.div_residual, spec);
        doc.body["conserved"] = conserved;
        if (!conserved) doc.exit_code = 1;
    } else if (cmd == "verify") {
        std::vector<Check> checks = run_verify(pf, spec, opts);
        json arr = json::array();
        int failures = 0;
        for (const auto& c : checks) {
            text << (c.ok ? "ok   " : "FAIL ") << c.name;
            if (!c.detail.empty()) text << "  (" << c.detail << ")";
            text << "\n";
            json e;
            e["name"] = c.name;
            e["ok"] = c.ok;
            if (!c.detail.empty()) e["detail"] = c.detail;
            arr.push_back(e);
            if (!c.ok) ++failures;
        }
        text << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed")
             << "\n";
        doc.body["checks"] = arr;
        doc.body["failures"] = failures;
        if (failures > 0) doc.exit_code = 1;
    } else {
        throw EngineError("unknown command '" + cmd + "'");
    }

    doc.text = text.str();
    doc.latex = latexos.str().empty() ? doc.text : latexos.str();
    return doc;
}

}  // namespace varseq
