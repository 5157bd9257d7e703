#include <cmath>
#include <limits>
#include <memory>

#include "fsuc/milp.hpp"
#include "fsuc/simplex.hpp"

namespace fsuc::milp {

MilpSolution solve_exhaustive(const MilpModel& model, const SolveOptions& options) {
    model.validate();
    std::vector<int> binaries;
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
        if (model.variables()[j].kind == VarKind::kBinary) {
            binaries.push_back(static_cast<int>(j));
        }
    }
    if (binaries.size() > 20) {
        throw SolverError("exhaustive enumeration supports at most 20 binaries, model has " +
                          std::to_string(binaries.size()));
    }
    auto lp = std::make_shared<const LpData>(make_lp_data(model));
    MilpSolution best;
    best.status = SolveStatus::kInfeasible;
    best.objective = std::numeric_limits<double>::infinity();

    // Gray-code order: consecutive assignments differ in one binary, so each
    // subproblem is re-optimised from the previous basis.
    SimplexKernel kernel(lp);
    const std::uint64_t count = std::uint64_t{1} << binaries.size();
    for (std::uint64_t k = 0; k < count; ++k) {
        const std::uint64_t gray = k ^ (k >> 1);
        for (std::size_t b = 0; b < binaries.size(); ++b) {
            const double v = static_cast<double>((gray >> b) & 1U);
            const auto& var = model.variables()[binaries[b]];
            if (v < var.lower || v > var.upper) {
                goto next_assignment;
            }
        }
        for (std::size_t b = 0; b < binaries.size(); ++b) {
            const double v = static_cast<double>((gray >> b) & 1U);
            kernel.set_column_bounds(binaries[b], v, v);
        }
        {
            kernel.set_iteration_limit(kernel.iterations() + options.iteration_limit);
            LpStatus status = kernel.solve();
            if (status == LpStatus::kIterationLimit) {
                // Start this subproblem over from the slack basis.
                kernel.reset_to_slack_basis();
                kernel.set_iteration_limit(kernel.iterations() + options.iteration_limit);
                status = kernel.solve_primal();
            }
            ++best.nodes;
            if (status == LpStatus::kIterationLimit) {
                best.status = SolveStatus::kLimit;
                best.diagnostic = "iteration limit in exhaustive subproblem";
                return best;
            }
            if (status == LpStatus::kOptimal && kernel.objective() < best.objective) {
                best.objective = kernel.objective();
                best.values = kernel.column_values();
                best.status = SolveStatus::kOptimal;
            }
        }
    next_assignment:;
    }
    best.lp_iterations = kernel.iterations();
    if (best.status == SolveStatus::kOptimal) {
        for (int col : binaries) {
            best.values[col] = std::round(best.values[col]);
        }
        best.best_bound = best.objective;
        best.root_bound = best.objective;
    } else {
        best.objective = 0.0;
    }
    return best;
}

}  // namespace fsuc::milp
