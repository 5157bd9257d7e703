#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsuc/linear.hpp"

namespace fsuc::milp {

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VarKind { kContinuous, kBinary };

struct Variable {
    std::string name;
    VarKind kind = VarKind::kContinuous;
    double lower = 0.0;
    double upper = 0.0;
};

/// Minimisation MILP over explicitly bounded variables.
class MilpModel {
public:
    VarId add_variable(std::string name, VarKind kind, double lower, double upper);
    VarId add_continuous(std::string name, double lower, double upper) {
        return add_variable(std::move(name), VarKind::kContinuous, lower, upper);
    }
    VarId add_binary(std::string name) { return add_variable(std::move(name), VarKind::kBinary, 0.0, 1.0); }

    void add_row(LinearRow row);
    void add_rows(std::vector<LinearRow> rows);

    void set_objective(LinearExpr objective) { objective_ = std::move(objective); }
    void set_bounds(VarId id, double lower, double upper);

    const std::vector<Variable>& variables() const { return variables_; }
    const Variable& variable(VarId id) const { return variables_.at(id.index); }
    const std::vector<LinearRow>& rows() const { return rows_; }
    const LinearExpr& objective() const { return objective_; }

    std::size_t num_variables() const { return variables_.size(); }
    std::size_t num_binaries() const;

    /// Throws ModelError when bounds are not finite, a binary has bounds
    /// outside [0, 1], a row references an unknown variable, or a
    /// coefficient is not finite.
    void validate() const;

    /// Returns the id of the variable called `name`; throws ModelError when absent.
    VarId find(const std::string& name) const;

private:
    std::vector<Variable> variables_;
    std::vector<LinearRow> rows_;
    LinearExpr objective_;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kLimit };

const char* status_name(SolveStatus status);
SolveStatus parse_status(const std::string& text);

struct SolveOptions {
    double feasibility_tol = 1e-6;
    double integrality_tol = 1e-6;
    double relative_gap = 1e-6;
    double absolute_gap = 1e-9;
    std::int64_t node_limit = 200000;
    std::int64_t iteration_limit = 5000000;
    /// Open nodes evaluated per round; results merge in node order, so the
    /// outcome depends on this value but never on `threads`.
    int node_batch = 1;
    int threads = 1;
    /// Run a fractional dive from the root relaxation to seed an incumbent.
    bool root_dive = true;
};

struct MilpSolution {
    SolveStatus status = SolveStatus::kInfeasible;
    std::vector<double> values;
    double objective = 0.0;
    double best_bound = 0.0;
    double root_bound = 0.0;
    double gap = 0.0;
    std::int64_t nodes = 0;
    std::int64_t lp_iterations = 0;
    std::string diagnostic;

    double value(VarId id) const { return values.at(id.index); }
};

/// Branch-and-bound over LP relaxations solved with the bounded-variable
/// simplex kernel. Node order is best bound, then depth (deeper first),
/// then creation index.
MilpSolution solve(const MilpModel& model, const SolveOptions& options = {});

/// Drops fixed variables, splits the rest into independent blocks (variables
/// linked through shared rows) and solves each block with `solve`.
MilpSolution solve_by_components(const MilpModel& model, const SolveOptions& options = {});

/// Depth-first branching restricted to `branch_vars`, pruned by the LP
/// relaxation of the whole model. Once every branching variable is fixed the
/// remainder is solved exactly with solve_by_components. Suited to two-stage
/// models whose second stage separates once the first stage is fixed.
MilpSolution solve_staged(const MilpModel& model, const std::vector<VarId>& branch_vars,
                          const SolveOptions& options = {});

/// Enumerates every binary assignment and solves the continuous remainder.
/// Limited to 20 binaries; intended as a verification oracle.
MilpSolution solve_exhaustive(const MilpModel& model, const SolveOptions& options = {});

struct RowViolation {
    std::size_t row = 0;
    std::string label;
    double violation = 0.0;
};

/// Checks bounds, integrality and rows. Row violations are measured after
/// dividing the row by its largest absolute coefficient.
std::vector<RowViolation> check_feasibility(const MilpModel& model, const std::vector<double>& values,
                                            double tol = 1e-6);

double evaluate_objective(const MilpModel& model, const std::vector<double>& values);

/// LP-format text (Minimize / Subject To / Bounds / Binaries / End). Rows
/// keep their labels, every variable gets a bounds line in id order, and
/// coefficients are written with 17 significant digits.
std::string export_model(const MilpModel& model);

/// Reads the subset of LP format that export_model writes, plus the usual
/// free-form variations (unlabelled rows, one-sided bounds, wrapped lines).
/// Variable ids follow the order of first mention in the Bounds section.
/// Throws ModelError with a line number on malformed input.
MilpModel import_model(const std::string& text);

/// Solution text: `status <name>`, `objective <value>`, then one
/// `<variable> <value>` pair per line. '#' starts a comment.
std::string export_solution(const MilpModel& model, const MilpSolution& solution);

/// Parses solution text against `model`. Unknown or missing variables, a
/// missing status or objective line, and rows violated by more than `tol`
/// (after scaling) raise SolverError; the violated row is named. A reported
/// objective more than 1e-5 relative from the recomputed one is noted in
/// `diagnostic`.
MilpSolution import_solution(const std::string& text, const MilpModel& model, double tol = 1e-6);

/// Runs an external solver: writes `<stem>.lp`, invokes `command` with the
/// LP path and the solution path as its two arguments, then imports
/// `<stem>.sol`. Throws SolverError when the command fails.
MilpSolution solve_external(const MilpModel& model, const std::string& command, const std::string& stem);

}  // namespace fsuc::milp
