#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numeric>

#include "fsuc/milp.hpp"
#include "fsuc/simplex.hpp"

namespace fsuc::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_fixed(const Variable& v) { return v.lower == v.upper; }

struct DisjointSets {
    std::vector<std::size_t> parent;

    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

    std::size_t find(std::size_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

// Worse status wins when merging component results.
int severity(SolveStatus s) {
    switch (s) {
        case SolveStatus::kOptimal:
            return 0;
        case SolveStatus::kLimit:
            return 1;
        case SolveStatus::kUnbounded:
            return 2;
        case SolveStatus::kInfeasible:
            return 3;
    }
    return 3;
}

}  // namespace

MilpSolution solve_by_components(const MilpModel& model, const SolveOptions& options) {
    model.validate();
    const std::size_t n = model.num_variables();
    const auto& vars = model.variables();
    std::vector<double> cost(n, 0.0);
    for (const auto& [id, c] : model.objective().terms) cost[id.index] = c;

    MilpSolution out;
    out.status = SolveStatus::kOptimal;
    out.values.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (is_fixed(vars[j])) out.values[j] = vars[j].lower;
    }

    DisjointSets sets(n);
    std::vector<char> in_row(n, 0);
    std::vector<std::size_t> constant_rows;
    for (std::size_t i = 0; i < model.rows().size(); ++i) {
        const auto& row = model.rows()[i];
        std::size_t first = n;
        for (const auto& [id, c] : row.coefs) {
            if (c == 0.0 || is_fixed(vars[id.index])) continue;
            in_row[id.index] = 1;
            if (first == n) {
                first = id.index;
            } else {
                sets.unite(first, id.index);
            }
        }
        if (first == n) constant_rows.push_back(i);
    }
    for (std::size_t i : constant_rows) {
        const auto& row = model.rows()[i];
        double activity = 0.0;
        for (const auto& [id, c] : row.coefs) activity += c * out.values[id.index];
        const double scale = std::max(1.0, row.scale());
        if (row.violation(activity) / scale > options.feasibility_tol) {
            out.status = SolveStatus::kInfeasible;
            out.diagnostic = "row '" + row.label + "' is violated by the fixed variables";
            out.values.clear();
            return out;
        }
    }

    // Free variables that appear in no row sit at their cheaper bound.
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t j = 0; j < n; ++j) {
        if (is_fixed(vars[j])) continue;
        if (!in_row[j]) {
            out.values[j] = cost[j] >= 0.0 ? vars[j].lower : vars[j].upper;
            continue;
        }
        groups[sets.find(j)].push_back(j);
    }

    std::vector<std::vector<std::size_t>> rows_of(n);
    for (std::size_t i = 0; i < model.rows().size(); ++i) {
        for (const auto& [id, c] : model.rows()[i].coefs) {
            if (c != 0.0 && !is_fixed(vars[id.index])) {
                rows_of[sets.find(id.index)].push_back(i);
                break;
            }
        }
    }

    double bound = 0.0;
    for (const auto& [root, members] : groups) {
        MilpModel sub;
        std::vector<std::uint32_t> local(n, 0);
        LinearExpr objective;
        for (std::size_t j : members) {
            local[j] = static_cast<std::uint32_t>(sub.num_variables());
            const VarId id = sub.add_variable(vars[j].name, vars[j].kind, vars[j].lower, vars[j].upper);
            objective.add(id, cost[j]);
        }
        sub.set_objective(std::move(objective));
        for (std::size_t i : rows_of[root]) {
            const auto& row = model.rows()[i];
            LinearRow r;
            r.sense = row.sense;
            r.rhs = row.rhs;
            r.label = row.label;
            for (const auto& [id, c] : row.coefs) {
                if (is_fixed(vars[id.index])) {
                    r.rhs -= c * vars[id.index].lower;
                } else if (c != 0.0) {
                    r.coefs.emplace(VarId{local[id.index]}, c);
                }
            }
            sub.add_row(std::move(r));
        }
        auto sol = solve(sub, options);
        out.nodes += sol.nodes;
        out.lp_iterations += sol.lp_iterations;
        if (severity(sol.status) > severity(out.status)) {
            out.status = sol.status;
            out.diagnostic = sol.diagnostic;
        }
        if (sol.status == SolveStatus::kInfeasible || sol.status == SolveStatus::kUnbounded || sol.values.empty()) {
            if (out.diagnostic.empty()) out.diagnostic = "component containing '" + vars[root].name + "' has no solution";
            out.values.clear();
            return out;
        }
        for (std::size_t k = 0; k < members.size(); ++k) out.values[members[k]] = sol.values[k];
        bound += sol.best_bound;
        out.root_bound += sol.root_bound;
    }

    out.objective = evaluate_objective(model, out.values);
    // Fixed and row-free variables contribute exactly to both objective and bound.
    double exact = model.objective().constant;
    for (std::size_t j = 0; j < n; ++j) {
        if (is_fixed(vars[j]) || !in_row[j]) exact += cost[j] * out.values[j];
    }
    out.best_bound = std::min(out.objective, bound + exact);
    out.root_bound = std::min(out.best_bound, out.root_bound + exact);
    out.gap = (out.objective - out.best_bound) / std::max(1.0, std::abs(out.objective));
    return out;
}

MilpSolution solve_staged(const MilpModel& model, const std::vector<VarId>& branch_vars, const SolveOptions& options) {
    model.validate();
    for (auto id : branch_vars) {
        if (id.index >= model.num_variables() || model.variable(id).kind != VarKind::kBinary) {
            throw ModelError("staged branching variables must be binaries of the model");
        }
    }
    auto lp = std::make_shared<const LpData>(make_lp_data(model));

    struct StageNode {
        std::vector<std::int8_t> fixings;  // per branch var: -1 free, 0, 1
        std::shared_ptr<const SimplexKernel> parent;
        int depth = 0;
    };

    MilpSolution best;
    best.status = SolveStatus::kInfeasible;
    double incumbent = kInf;
    bool hit_limit = false;
    double open_bound = kInf;  // smallest bound among nodes cut short by a limit
    std::map<std::vector<std::int8_t>, double> evaluated;

    auto tolerance = [&]() {
        return std::max(options.absolute_gap, options.relative_gap * std::max(1.0, std::abs(incumbent)));
    };

    auto evaluate_leaf = [&](const std::vector<std::int8_t>& assignment) {
        if (evaluated.count(assignment)) return;
        MilpModel fixed = model;
        for (std::size_t k = 0; k < branch_vars.size(); ++k) {
            fixed.set_bounds(branch_vars[k], assignment[k], assignment[k]);
        }
        auto sol = solve_by_components(fixed, options);
        best.nodes += sol.nodes;
        best.lp_iterations += sol.lp_iterations;
        evaluated[assignment] = sol.status == SolveStatus::kOptimal ? sol.objective : kInf;
        if (sol.status == SolveStatus::kLimit) {
            hit_limit = true;
            open_bound = std::min(open_bound, sol.best_bound);
        }
        if ((sol.status == SolveStatus::kOptimal || sol.status == SolveStatus::kLimit) && !sol.values.empty() &&
            sol.objective < incumbent) {
            incumbent = sol.objective;
            best.values = std::move(sol.values);
        }
    };

    std::vector<StageNode> stack;
    stack.push_back(StageNode{std::vector<std::int8_t>(branch_vars.size(), -1), nullptr, 0});
    bool root_done = false;
    while (!stack.empty()) {
        StageNode node = std::move(stack.back());
        stack.pop_back();
        ++best.nodes;
        auto kernel = node.parent ? std::make_shared<SimplexKernel>(*node.parent) : std::make_shared<SimplexKernel>(lp);
        for (std::size_t k = 0; k < branch_vars.size(); ++k) {
            if (node.fixings[k] >= 0) kernel->set_column_bounds(static_cast<int>(branch_vars[k].index), node.fixings[k], node.fixings[k]);
        }
        const std::int64_t before = kernel->iterations();
        kernel->set_iteration_limit(before + options.iteration_limit);
        const LpStatus status = node.parent ? kernel->solve_dual() : kernel->solve_primal();
        best.lp_iterations += kernel->iterations() - before;
        if (status == LpStatus::kIterationLimit) {
            hit_limit = true;
            open_bound = -kInf;
            continue;
        }
        if (status == LpStatus::kUnbounded) {
            best.status = SolveStatus::kUnbounded;
            best.values.clear();
            return best;
        }
        if (status != LpStatus::kOptimal) continue;
        const double lp_obj = kernel->objective();
        if (!root_done) {
            root_done = true;
            best.root_bound = lp_obj;
        }
        if (lp_obj >= incumbent - tolerance()) continue;

        const auto values = kernel->column_values();
        int pick = -1;
        double pick_frac = -1.0;
        std::vector<std::int8_t> rounded = node.fixings;
        bool integral = true;
        for (std::size_t k = 0; k < branch_vars.size(); ++k) {
            if (node.fixings[k] >= 0) continue;
            const double v = values[branch_vars[k].index];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            rounded[k] = static_cast<std::int8_t>(v >= 0.5 ? 1 : 0);
            if (frac > options.integrality_tol) integral = false;
            if (frac > pick_frac + 1e-12) {
                pick_frac = frac;
                pick = static_cast<int>(k);
            }
        }
        if (integral) {
            // The relaxation already picks a first-stage assignment; its exact
            // value is a good incumbent before the rest of the subtree is searched.
            evaluate_leaf(rounded);
            if (lp_obj >= incumbent - tolerance()) continue;
        }
        if (pick < 0) continue;  // every branching variable is fixed: the leaf above is exact

        if (best.nodes >= options.node_limit) {
            hit_limit = true;
            open_bound = std::min(open_bound, lp_obj);
            continue;
        }
        const std::int8_t near = static_cast<std::int8_t>(values[branch_vars[pick].index] >= 0.5 ? 1 : 0);
        std::shared_ptr<const SimplexKernel> shared = kernel;
        // Depth first: the child nearer the relaxation is explored first.
        for (std::int8_t side : {static_cast<std::int8_t>(1 - near), near}) {
            StageNode child;
            child.fixings = node.fixings;
            child.fixings[pick] = side;
            child.parent = shared;
            child.depth = node.depth + 1;
            stack.push_back(std::move(child));
        }
    }

    if (best.values.empty()) {
        best.status = hit_limit ? SolveStatus::kLimit : SolveStatus::kInfeasible;
        if (hit_limit) best.diagnostic = "limit reached before any integer-feasible point was found";
        return best;
    }
    best.objective = incumbent;
    best.status = hit_limit ? SolveStatus::kLimit : SolveStatus::kOptimal;
    best.best_bound = hit_limit ? std::min(open_bound, incumbent) : std::max(best.root_bound, incumbent - tolerance());
    best.best_bound = std::min(best.best_bound, incumbent);
    best.gap = (best.objective - best.best_bound) / std::max(1.0, std::abs(best.objective));
    return best;
}

}  // namespace fsuc::milp
