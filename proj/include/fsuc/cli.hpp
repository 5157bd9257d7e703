#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "fsuc/scheduler.hpp"

namespace fsuc::cli {

inline constexpr const char* kVersion = "0.1.0";
/// Names the external solver executable; unset means the built-in solver.
inline constexpr const char* kExternalSolverEnv = "FSUC_EXTERNAL_SOLVER";

enum ExitCode : int {
    kExitOk = 0,
    kExitValidation = 1,
    kExitSolver = 2,
    kExitVerification = 3,
};

/// Everything needed to rerun a command: replaying `inputs` and `overrides`
/// as flags reproduces the outputs in `output_dir`.
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> inputs;     // flag -> path
    std::map<std::string, std::string> overrides;  // flag -> value as given
    std::string output_dir;
    std::uint64_t seed = 0;
    std::string version = kVersion;

    std::string to_json() const;
    static RunManifest from_json(const std::string& text);
    /// Flag list for `command`, ready for the parser.
    std::vector<std::string> arguments() const;
};

struct StudyConfig {
    std::filesystem::path system;  // resolved against the config file
    std::vector<double> wind_capacities;
    std::vector<scheduler::LossMode> modes;
    int start = 0;
    int span = 168;
    int horizon = 2;
    int first_stage = 1;
};

/// Throws sysmodel::LoadError / ValidationError.
StudyConfig load_study(const std::filesystem::path& path);

struct StudyRow {
    double wind_capacity = 0.0;
    scheduler::LossMode mode = scheduler::LossMode::kOptimised;
    double cost_on = 0.0;
    double cost_off = 0.0;
    double load_factor = 0.0;     // largest unit, frequency-secured run
    double emissions = 0.0;       // tCO2, frequency-secured run
    double emissions_off = 0.0;
    double curtailed_energy = 0.0;  // MWh, frequency-secured run
    int verification_failures = 0;

    double frequency_service_cost() const { return cost_on - cost_off; }
};

/// Raised when a study cell cannot be solved.
class CellFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One row per (wind capacity, mode), in config order. Cells run on up to
/// `jobs` threads; the result does not depend on `jobs`.
std::vector<StudyRow> run_study(const sysmodel::SystemSpec& system, const StudyConfig& config,
                                const scheduler::UcOptions& base, int jobs = 1);

void write_study_table(std::ostream& out, const std::vector<StudyRow>& rows);

/// Full command line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fsuc::cli
