#ifndef WNS_PROBLEM_HPP
#define WNS_PROBLEM_HPP

#include "wns/study.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace wns {

/// Malformed or inconsistent problem specification. The message names the offending field
/// or, for syntax errors, the line and column.
class SpecError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct OutputPaths {
    std::filesystem::path dir = ".";
    std::string solution = "solution.json";
    std::string trace = "picard_trace.json";
    std::string constants = "constants.json";
    std::string weights = "weights.json";
    std::string convergence_csv = "convergence.csv";
    std::string convergence_json = "convergence.json";
};

struct ProblemSpec {
    Polygon domain = Polygon::unit_square();
    std::string domain_label = "unit_square";
    MeshMode mesh_mode = MeshMode::Uniform;
    int n = 8;
    GradingSpec grading{};
    Weight weight = Weight::constant(1.0);
    nlohmann::json forcing_literal;
    std::optional<double> nu; ///< absent means "auto"
    SolveOptions solve{};
    EstimatorOptions estimators{};
    OutputPaths outputs{};
    std::string manufactured_case; ///< optional; selects the exact solution for convergence
    int levels = 3;
    int reference_offset = 2;

    std::uint64_t checksum = 0; ///< FNV-1a of the raw spec text
    std::filesystem::path base_dir = ".";

    /// Forcing for a given viscosity (manufactured forcings depend on nu).
    ForcingSpec forcing(double nu) const;
    TriMesh mesh() const;
    nlohmann::json provenance() const;
};

ProblemSpec parse_problem(const std::string& text, const std::filesystem::path& base_dir = ".");
ProblemSpec load_problem(const std::filesystem::path& path);

/// Literal parsers, also used directly by tests.
Weight parse_weight(const nlohmann::json& j, const std::string& where = "weight");
ForcingSpec parse_forcing(const nlohmann::json& j, double nu, const std::string& where = "forcing");
ManufacturedCase manufactured_case(const std::string& name);

nlohmann::json to_json(const FEField& f);
nlohmann::json to_json(const PicardTrace& t);
nlohmann::json to_json(const ConstantsReport& r);
nlohmann::json to_json(const WeightClassReport& r);
nlohmann::json to_json(const ConvergenceReport& r);

/// Command outcomes. `summary` is what the CLI prints; artifacts are written when requested.
struct RunResult {
    bool converged = true;
    nlohmann::json summary;
};

RunResult run_solve(const ProblemSpec& spec, bool write_artifacts);
RunResult run_convergence(const ProblemSpec& spec, int levels, bool write_artifacts);
RunResult run_weights(const ProblemSpec& spec, bool write_artifacts);
RunResult run_constants(const ProblemSpec& spec, bool write_artifacts);

} // namespace wns

#endif
