#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsuc/freqdyn.hpp"
#include "fsuc/freqsec.hpp"
#include "fsuc/milp.hpp"
#include "fsuc/sysmodel.hpp"

namespace fsuc::scheduler {

class SchedulerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class LossMode { kFixed, kOptimised };

const char* loss_mode_name(LossMode mode);
LossMode parse_loss_mode(const std::string& text);

struct UcOptions {
    bool frequency_constraints = true;
    bool deloading_enabled = true;
    int horizon = 2;        // periods per window
    int first_stage = 1;    // periods committed per window
    LossMode mode = LossMode::kOptimised;
    milp::SolveOptions solver;
    int max_cut_rounds = 25;
    /// Executable invoked as `command model.lp model.sol` in place of the
    /// built-in solver when non-empty.
    std::string external_solver;
    /// Directory for LP exports: every failed window is written here, and
    /// external-solver exchange files too. Empty disables failure dumps.
    std::string export_dir;

    void validate() const;
};

/// Commitment history of one unit entering a window.
struct UnitState {
    bool on = false;
    int periods = 1000;  // periods spent in the current state
};

/// Initial states from the generator records, one per synchronous unit.
std::vector<UnitState> initial_states(const sysmodel::SystemSpec& system);

/// Indices into system.generators of the units that are dispatched.
std::vector<std::size_t> dispatchable_units(const sysmodel::SystemSpec& system);

/// Variable layout of one period/scenario block.
struct Block {
    int offset = 0;          // period within the window
    int scenario = -1;       // branch index, −1 for the root period
    double probability = 1.0;
    double net_demand = 0.0;
    double demand = 0.0;
    double wind_available = 0.0;
    freqsec::FreqDecisionSet vars;
    std::vector<VarId> startup;
    VarId curtailment;
    LinearExpr inertia;
    LinearExpr hr;
};

struct UcModel {
    milp::MilpModel model;
    std::vector<Block> blocks;
    std::vector<std::size_t> units;   // fleet indices into system.generators
    int start = 0;
    int length = 0;
};

/// Deterministic-equivalent MILP of one window starting at absolute period
/// `start`. `fixed_commitment`, if given, pins the root period's commitment.
UcModel build_uc(const sysmodel::SystemSpec& system, const sysmodel::ScenarioTree& tree, const UcOptions& options,
                 const std::vector<UnitState>& state, int start,
                 const std::optional<std::vector<int>>& fixed_commitment = std::nullopt);

struct BlockResult {
    int period = 0;          // absolute
    int scenario = -1;
    double probability = 1.0;
    double demand = 0.0;
    double net_demand = 0.0;
    double wind_available = 0.0;
    double curtailment = 0.0;
    double load_served = 0.0;
    std::vector<int> commit;
    std::vector<double> output;
    std::vector<double> pfr;
    double loss = 0.0;
    double loss_nadir = 0.0;
    int segment = -1;
    double inertia = 0.0;
    double total_pfr = 0.0;
    double fuel_cost = 0.0;
    double no_load_cost = 0.0;
    double startup_cost = 0.0;
    freqdyn::SecurityReport security;

    double cost() const { return fuel_cost + no_load_cost + startup_cost; }
};

struct UcSolution {
    int start = 0;
    int length = 0;
    std::vector<UnitState> initial;
    milp::SolveStatus status = milp::SolveStatus::kInfeasible;
    double objective = 0.0;
    double best_bound = 0.0;
    std::int64_t nodes = 0;
    int cut_rounds = 0;
    std::vector<BlockResult> blocks;
    std::string diagnostic;

    /// Security failures among the blocks (frequency-constrained solves only).
    int verification_failures() const;
};

/// Builds, solves and verifies one window. With frequency constraints on,
/// points failing the 60 s check get a commitment-specific cut and the
/// window is re-solved.
UcSolution solve_window(const sysmodel::SystemSpec& system, const sysmodel::ScenarioTree& tree,
                        const UcOptions& options, const std::vector<UnitState>& state, int start,
                        const std::optional<std::vector<int>>& fixed_commitment = std::nullopt);

struct Trajectory {
    std::vector<std::size_t> units;
    std::vector<UcSolution> windows;
    std::vector<BlockResult> realized;  // one per simulated period
    double period_hours = 1.0;
    bool complete = false;
    std::string diagnostic;

    double total_cost() const;
    double curtailed_energy() const;
};

/// Rolling-horizon simulation over [start, start + span). Each window commits
/// its first-stage periods, re-dispatches them against realised net demand,
/// and hands the commitment state to the next window.
Trajectory solve_rolling_horizon(const sysmodel::SystemSpec& system, const UcOptions& options, int start = 0,
                                 int span = -1);

struct FrequencyServiceCost {
    double cost_on = 0.0;
    double cost_off = 0.0;
    Trajectory with_constraints;
    Trajectory without_constraints;

    double value() const { return cost_on - cost_off; }
};

FrequencyServiceCost cost_of_frequency_services(const sysmodel::SystemSpec& system, const UcOptions& options,
                                                int start = 0, int span = -1);

/// Energy produced over p_max × simulated hours; throws for an unknown unit.
double load_factor(const Trajectory& trajectory, const sysmodel::SystemSpec& system, const std::string& unit_id);

/// tCO2 over the realised trajectory.
double emissions(const Trajectory& trajectory, const sysmodel::SystemSpec& system);

/// Tab-separated tables with a header row.
void write_trajectory_table(std::ostream& out, const Trajectory& trajectory, const sysmodel::SystemSpec& system);
void write_verification_table(std::ostream& out, const Trajectory& trajectory);

}  // namespace fsuc::scheduler
