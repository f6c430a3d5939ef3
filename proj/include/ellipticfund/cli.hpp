#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ellipticfund/canonical_json.hpp"
#include "ellipticfund/error.hpp"
#include "ellipticfund/operator.hpp"

namespace ellipticfund {

inline constexpr const char* kVersion = "ellipticfund 0.1.0";

/// Everything a single invocation needs. Defaults give a deterministic run.
struct RunConfig {
    std::string command;
    std::string op;
    std::optional<std::string> spec_file;
    std::optional<double> lambda;
    std::optional<double> Lambda;
    int dim = 2;
    /// Diagonal of A for the "linear" builtin.
    std::vector<double> diag;
    std::string method = "auto";
    int ntheta = 256;
    double grid_h = 1.0 / 64.0;
    double rinner = 0.25;
    double router = 1.0;
    double g_inner = 1.0;
    double g_outer = 0.0;
    double r = 0.25;
    std::optional<double> R;
    std::vector<double> x0;
    long paths = 10000;
    double dt = 1e-3;
    double step_factor = 1.0;
    std::vector<double> ladder{0.2, 0.1, 0.05, 0.025};
    std::uint64_t seed = 0;
    std::optional<double> tol;
    std::string family = "phi";
    double a = 1.0;
    double b = 0.0;
    std::string at = "origin";
    std::optional<std::string> out;
    std::optional<std::string> report;
};

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNonConvergence = 3;
inline constexpr int kExitInconclusive = 4;

int exit_code_for(ErrorKind kind);

/// Builtin name (pucci+, pucci-, laplacian, linear, f1, f2) or spec file.
/// Runs a 100-sample H1/H2 smoke check; failures append to `warnings`.
OperatorSpec load_operator_spec(const RunConfig& cfg, std::vector<std::string>& warnings);

/// Closed-form alpha* of a builtin, when one exists.
std::optional<double> builtin_closed_form(const RunConfig& cfg);

struct RunResult {
    int exit_code = kExitOk;
    /// {command, operator_hash, payload, version, wall_time, warnings}.
    Json report;
    /// {"error": {kind, message, exit_code}} when exit_code != 0.
    Json error;
};

RunResult run_command(const RunConfig& cfg);

/// Canonical JSON plus a newline; to stdout when `path` is empty. Throws io.
void write_report(const Json& report, const std::optional<std::string>& path);

/// Parses argv, runs, writes the report or the error JSON on stderr.
int cli_main(int argc, char** argv);

}  // namespace ellipticfund
