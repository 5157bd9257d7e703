#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace fsuc::sysmodel {

/// Malformed input: unreadable file, syntax error, wrong value type.
class LoadError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that breaks a data-model invariant. `field` names the
/// offending entry, e.g. "generators[CCGT1].p_min".
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

enum class Technology { kNuclear, kThermal, kWind };

const char* technology_name(Technology tech);
Technology parse_technology(const std::string& text);

struct GeneratorSpec {
    std::string id;
    Technology technology = Technology::kThermal;
    double p_max = 0.0;           // MW
    double p_min = 0.0;           // MW
    double inertia_const = 0.0;   // s
    double marginal_cost = 0.0;   // currency/MWh
    double no_load_cost = 0.0;    // currency/h
    double startup_cost = 0.0;    // currency
    int min_up = 1;               // h
    int min_down = 1;             // h
    double pfr_max = 0.0;         // MW
    double emissions_rate = 0.0;  // tCO2/MWh
    bool deloadable = false;
    double max_deload_fraction = 0.0;
    // Scheduling extras with defaults.
    bool must_run = false;
    bool initial_on = false;
    int initial_periods = 1000;   // periods already spent in the initial state
    bool loss_source = true;      // eligible as the largest-loss source

    bool synchronous() const { return technology != Technology::kWind; }
    bool operator==(const GeneratorSpec&) const = default;
};

struct FrequencyParams {
    double f0 = 50.0;              // Hz
    double df_max = 0.8;           // Hz
    double df_ss_max = 0.5;        // Hz
    double rocof_max = 0.5;        // Hz/s
    double t_d = 10.0;             // s
    double damping = 0.01;         // 1/Hz
    std::vector<double> nadir_segments;  // MW, strictly increasing
    double governor_deadband = 0.0;      // Hz, reserved; must be zero
    // Derived from the fleet on load.
    double largest_unit_rating = 0.0;    // MW
    double largest_unit_inertia = 0.0;   // s
    std::string largest_unit_id;

    bool operator==(const FrequencyParams&) const = default;
};

/// Per-period net-demand quantiles (MW) at the system's wind capacity, plus
/// the realised net demand used when simulating forward.
struct ScenarioData {
    std::vector<double> levels;
    std::vector<std::vector<double>> values;  // [period][level]
    std::vector<double> realized;             // [period]

    bool empty() const { return levels.empty(); }
    bool operator==(const ScenarioData&) const = default;
};

struct SystemSpec {
    std::string name;
    std::vector<GeneratorSpec> generators;
    std::vector<double> demand;   // MW per period
    double wind_capacity = 0.0;   // MW
    double period_hours = 1.0;
    FrequencyParams frequency;
    ScenarioData scenarios;

    int periods() const { return static_cast<int>(demand.size()); }
    /// Index of the unit that sets largest_unit_rating: the largest
    /// synchronous loss source, or the largest synchronous unit if none is flagged.
    std::size_t largest_unit_index() const;
    const GeneratorSpec& generator(const std::string& id) const;
    bool operator==(const SystemSpec&) const = default;
};

struct ScenarioBranch {
    std::vector<double> net_demand;  // MW per period of the branch
    double probability = 0.0;
};

/// Tree branching at the current period only: one root value, then one
/// branch per quantile level for the following periods.
struct ScenarioTree {
    double root_net_demand = 0.0;
    std::vector<ScenarioBranch> branches;
    std::vector<double> quantile_levels;
};

/// Reads and validates a system file. Relative scenario-file paths resolve
/// against the system file's directory.
SystemSpec load_system(const std::filesystem::path& path);
SystemSpec parse_system(const std::string& text, const std::filesystem::path& base_dir = {});
/// Serialises with scenarios inlined; parse_system(serialize_system(s)) == s.
std::string serialize_system(const SystemSpec& system);

ScenarioData load_scenarios(const std::filesystem::path& path);
ScenarioData parse_scenarios(const std::string& text);
std::string serialize_scenarios(const ScenarioData& data);

/// Fills derived fields (largest unit, default segment grid) and checks
/// every invariant; throws ValidationError.
void finalize_system(SystemSpec& system);

/// Uniform grid of `count` points from rating·(1 − deload_fraction) to rating.
std::vector<double> default_nadir_segments(double rating, double deload_fraction, int count = 10);

/// Branch masses for sorted quantile levels: each level owns the interval
/// between the midpoints to its neighbours, with 0 and 1 as outer edges.
std::vector<double> branch_probabilities(const std::vector<double>& levels);

/// Tree for the window [start, start + length). Period `start` takes the
/// root value; later periods take the per-level quantiles.
ScenarioTree build_scenario_tree(const std::vector<double>& levels, const ScenarioData& data, double root_net_demand,
                                 int start, int length);

/// Copy of `system` with wind availability scaled to `wind_capacity`.
/// Net-demand quantiles and realisations are rescaled through the implied
/// wind availability (demand − net demand).
SystemSpec with_wind_capacity(const SystemSpec& system, double wind_capacity);

}  // namespace fsuc::sysmodel
