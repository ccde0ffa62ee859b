#include "varseq/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

std::string basename_of(const std::string& path) {
    size_t pos = path.find_last_of("/\\");
    return pos == std::string::npos ? path : path.substr(pos + 1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"varseq: symbolic variational calculus on jet bundles"};
    app.require_subcommand(1);

    varseq::CliOptions opts;
    if (const char* env = std::getenv("VARSEQ_FORMAT")) opts.format = env;

    std::string file;
    const std::vector<std::string> commands = {"el",     "momenta", "noether",     "secondvar",
                                               "jacobi", "bianchi", "hamiltonian", "verify"};
    for (const auto& cmd : commands) {
        CLI::App* sub = app.add_subcommand(cmd);
        sub->add_option("file", file, "problem file (.vp)")->required();
        sub->add_option("--format", opts.format, "output format: text, latex or json")
            ->check(CLI::IsMember({"text", "latex", "json"}));
        sub->add_option("--lift", opts.lift, "lift rule name");
        sub->add_option("--phi", opts.phi, "first variation field");
        sub->add_option("--psi", opts.psi, "second variation field");
        sub->add_option("--max-order", opts.max_order, "jet order cap override");
        sub->add_option("--tolerance", opts.tolerance, "numeric tolerance");
        sub->add_option("--seed", opts.seed, "seed for randomized checks");
    }

    CLI11_PARSE(app, argc, argv);
    std::string cmd = app.get_subcommands().front()->get_name();

    try {
        std::ifstream in(file);
        if (!in) {
            std::cerr << "error: cannot open '" << file << "'\n";
            return 2;
        }
        std::stringstream buf;
        buf << in.rdbuf();
        varseq::ProblemFile pf = varseq::parse_problem(buf.str(), basename_of(file));
        varseq::ReportDocument doc = varseq::run_command(cmd, pf, opts);
        std::cout << doc.rendered(opts);
        return doc.exit_code;
    } catch (const varseq::ParseError& e) {
        std::cerr << file << ":" << e.line << ":" << e.col << ": parse error: " << e.what()
                  << "\n";
        return 2;
    } catch (const varseq::OrderOverflow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const varseq::NotLinear& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const varseq::NotASymmetry& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const varseq::BianchiNonzero& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const varseq::BackgroundNotCritical& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const varseq::EngineError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
