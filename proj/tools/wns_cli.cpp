// Batch front end over the C interface.
#include "wns/wns.h"

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <cstdio>
#include <optional>
#include <string>

namespace {

int exit_code(wns_status s)
{
    switch (s) {
    case WNS_OK: return 0;
    case WNS_ERR_NOT_CONVERGED:
    case WNS_ERR_NUMERICAL: return 2;
    default: return 1;
    }
}


int run(const std::string& spec_path, std::optional<std::uint64_t> seed, const std::function<wns_status(const wns_problem*, char**)>& cmd)
{
    wns_problem* problem = nullptr;
    wns_status s = wns_problem_load(spec_path.c_str(), &problem);
    if (s != WNS_OK) {
        std::fprintf(stderr, "error: %s: %s\n", spec_path.c_str(), wns_last_error());
        return exit_code(s);
    }
    if (seed) wns_problem_set_seed(problem, *seed);
    char* summary = nullptr;
    s = cmd(problem, &summary);
    const std::string message = wns_last_error();
    if (summary) {
        std::printf("%s\n", summary);
        wns_string_free(summary);
    }
    wns_problem_free(problem);
    if (s != WNS_OK) std::fprintf(stderr, "%s: %s: %s\n", s == WNS_ERR_NOT_CONVERGED ? "warning" : "error",
                                  spec_path.c_str(), message.c_str());
    return exit_code(s);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Taylor-Hood solver for stationary Navier-Stokes in weighted spaces"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed;
    app.add_option("--seed", seed, "seed for the randomized estimators (overrides the spec)");

    std::string spec;
    int levels = 0;
    auto* solve = app.add_subcommand("solve", "solve the problem and write solution, trace and constants");
    solve->add_option("spec", spec, "problem spec (JSON)")->required();
    auto* conv = app.add_subcommand("convergence", "run a convergence study");
    conv->add_option("spec", spec, "problem spec (JSON)")->required();
    conv->add_option("--levels", levels, "number of mesh levels (>= 3)")->check(CLI::Range(3, 12));
    auto* weights = app.add_subcommand("weights", "classify the weight and scan its A2 constant");
    weights->add_option("spec", spec, "problem spec (JSON)")->required();
    auto* constants = app.add_subcommand("constants", "estimate the smallness constants");
    constants->add_option("spec", spec, "problem spec (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (*solve) return run(spec, seed, [](const wns_problem* p, char** out) { return wns_run_solve(p, 1, out); });
    if (*conv)
        return run(spec, seed,
                   [levels](const wns_problem* p, char** out) { return wns_run_convergence(p, levels, 1, out); });
    if (*weights) return run(spec, seed, [](const wns_problem* p, char** out) { return wns_run_weights(p, 1, out); });
    return run(spec, seed, [](const wns_problem* p, char** out) { return wns_run_constants(p, 1, out); });
}
