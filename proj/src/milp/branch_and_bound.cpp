#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <queue>
#include <thread>
#include <unordered_map>

#include "fsuc/milp.hpp"
#include "fsuc/simplex.hpp"

namespace fsuc::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixing state of each binary along the path from the root: -1 free, 0, 1.
using Fixings = std::vector<std::int8_t>;

struct Node {
    double bound = -kInf;
    int depth = 0;
    std::int64_t id = 0;
    std::int64_t parent = -1;
    Fixings fixings;
    int branch_binary = -1;
    std::shared_ptr<const Basis> parent_basis;
};

struct NodeOrder {
    // Max-heap comparator: returns true when `a` should be explored after `b`.
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.id > b.id;
    }
};

struct NodeResult {
    LpStatus status = LpStatus::kInfeasible;
    double objective = kInf;
    std::vector<double> values;
    std::shared_ptr<const Basis> basis;
    std::shared_ptr<const SimplexKernel> kernel;
    std::int64_t iterations = 0;
};

class BranchAndBound {
public:
    BranchAndBound(const MilpModel& model, const SolveOptions& options)
        : model_(model), options_(options), lp_(std::make_shared<LpData>(make_lp_data(model))) {
        for (std::size_t j = 0; j < model.num_variables(); ++j) {
            if (model.variables()[j].kind == VarKind::kBinary) {
                binary_cols_.push_back(static_cast<int>(j));
            }
        }
    }

    MilpSolution run();

private:
    NodeResult evaluate(const Node& node) const;
    std::unique_ptr<SimplexKernel> kernel_for(const Node& node) const;
    void apply_fixings(SimplexKernel& kernel, const Fixings& fixings) const;
    int most_fractional(const std::vector<double>& values) const;
    void dive(const SimplexKernel& root);
    void offer_incumbent(const std::vector<double>& values, double objective);
    double prune_tolerance() const {
        return std::max(options_.absolute_gap, options_.relative_gap * std::max(1.0, std::abs(incumbent_obj_)));
    }
    MilpSolution polish(MilpSolution sol) const;
    void cache_kernel(std::int64_t id, std::shared_ptr<const SimplexKernel> kernel);

    const MilpModel& model_;
    SolveOptions options_;
    std::shared_ptr<const LpData> lp_;
    std::vector<int> binary_cols_;

    mutable std::mutex incumbent_mutex_;
    double incumbent_obj_ = kInf;
    std::vector<double> incumbent_;
    std::int64_t iterations_ = 0;

    // Recently solved kernels keyed by node id; children warm start from a
    // copy of their parent's final tableau when it is still cached.
    std::list<std::pair<std::int64_t, std::shared_ptr<const SimplexKernel>>> kernel_cache_;
};

void BranchAndBound::cache_kernel(std::int64_t id, std::shared_ptr<const SimplexKernel> kernel) {
    kernel_cache_.emplace_front(id, std::move(kernel));
    const std::size_t capacity = static_cast<std::size_t>(std::max(4, 4 * options_.node_batch));
    while (kernel_cache_.size() > capacity) {
        kernel_cache_.pop_back();
    }
}

void BranchAndBound::apply_fixings(SimplexKernel& kernel, const Fixings& fixings) const {
    for (std::size_t k = 0; k < binary_cols_.size(); ++k) {
        const int col = binary_cols_[k];
        if (fixings[k] >= 0) {
            kernel.set_column_bounds(col, fixings[k], fixings[k]);
        }
    }
}

std::unique_ptr<SimplexKernel> BranchAndBound::kernel_for(const Node& node) const {
    for (const auto& [id, cached] : kernel_cache_) {
        if (id == node.parent) {
            auto kernel = std::make_unique<SimplexKernel>(*cached);
            const int col = binary_cols_[node.branch_binary];
            const double v = node.fixings[node.branch_binary];
            kernel->set_column_bounds(col, v, v);
            return kernel;
        }
    }
    auto kernel = std::make_unique<SimplexKernel>(lp_);
    apply_fixings(*kernel, node.fixings);
    if (node.parent_basis) {
        kernel->load_basis(*node.parent_basis);
    } else {
        kernel->reset_to_slack_basis();
    }
    return kernel;
}

NodeResult BranchAndBound::evaluate(const Node& node) const {
    NodeResult result;
    auto kernel = kernel_for(node);
    kernel->set_iteration_limit(kernel->iterations() + options_.iteration_limit);
    const std::int64_t before = kernel->iterations();
    result.status = node.parent < 0 ? kernel->solve_primal() : kernel->solve_dual();
    result.iterations = kernel->iterations() - before;
    if (result.status == LpStatus::kOptimal) {
        result.objective = kernel->objective();
        result.values = kernel->column_values();
        result.basis = std::make_shared<const Basis>(kernel->basis());
        result.kernel = std::shared_ptr<const SimplexKernel>(std::move(kernel));
    }
    return result;
}

int BranchAndBound::most_fractional(const std::vector<double>& values) const {
    int best = -1;
    double best_frac = options_.integrality_tol;
    for (std::size_t k = 0; k < binary_cols_.size(); ++k) {
        const double v = values[binary_cols_[k]];
        const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
        if (frac > best_frac + 1e-12) {
            best_frac = frac;
            best = static_cast<int>(k);
        }
    }
    return best;
}

void BranchAndBound::offer_incumbent(const std::vector<double>& values, double objective) {
    std::lock_guard<std::mutex> lock(incumbent_mutex_);
    if (objective < incumbent_obj_) {
        incumbent_obj_ = objective;
        incumbent_ = values;
    }
}

void BranchAndBound::dive(const SimplexKernel& root) {
    SimplexKernel kernel(root);
    std::vector<double> values = kernel.column_values();
    for (std::size_t step = 0; step <= binary_cols_.size(); ++step) {
        int pick = -1;
        double closest = kInf;
        for (std::size_t k = 0; k < binary_cols_.size(); ++k) {
            const double v = values[binary_cols_[k]];
            const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
            if (frac > options_.integrality_tol && frac < closest) {
                closest = frac;
                pick = static_cast<int>(k);
            }
        }
        if (pick < 0) {
            offer_incumbent(values, kernel.objective());
            return;
        }
        const int col = binary_cols_[pick];
        const double rounded = std::round(values[col]);
        SimplexKernel attempt(kernel);
        attempt.set_column_bounds(col, rounded, rounded);
        attempt.set_iteration_limit(attempt.iterations() + options_.iteration_limit);
        if (attempt.solve_dual() != LpStatus::kOptimal) {
            attempt = kernel;
            attempt.set_column_bounds(col, 1.0 - rounded, 1.0 - rounded);
            attempt.set_iteration_limit(attempt.iterations() + options_.iteration_limit);
            if (attempt.solve_dual() != LpStatus::kOptimal) {
                return;
            }
        }
        kernel = std::move(attempt);
        if (kernel.objective() >= incumbent_obj_) {
            return;
        }
        values = kernel.column_values();
    }
}

MilpSolution BranchAndBound::polish(MilpSolution sol) const {
    // Re-solve the continuous part with binaries fixed at their rounded
    // values so that reported continuous values are exact for that choice.
    SimplexKernel kernel(lp_);
    for (int col : binary_cols_) {
        const double v = std::round(sol.values[col]);
        kernel.set_column_bounds(col, v, v);
    }
    kernel.reset_to_slack_basis();
    if (kernel.solve_primal() == LpStatus::kOptimal) {
        sol.values = kernel.column_values();
        for (int col : binary_cols_) {
            sol.values[col] = std::round(sol.values[col]);
        }
        sol.objective = kernel.objective();
    }
    return sol;
}

MilpSolution BranchAndBound::run() {
    MilpSolution sol;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
    std::int64_t next_id = 0;
    Node root;
    root.id = next_id++;
    root.fixings.assign(binary_cols_.size(), -1);
    open.push(root);

    bool hit_limit = false;
    bool root_done = false;
    const int batch = std::max(1, options_.node_batch);
    const int threads = std::max(1, options_.threads);
    while (!open.empty()) {
        if (sol.nodes >= options_.node_limit) {
            hit_limit = true;
            break;
        }
        std::vector<Node> round;
        while (!open.empty() && static_cast<int>(round.size()) < batch) {
            Node node = open.top();
            open.pop();
            if (node.bound >= incumbent_obj_ - prune_tolerance()) {
                continue;
            }
            round.push_back(std::move(node));
        }
        if (round.empty()) {
            continue;
        }
        std::vector<NodeResult> results(round.size());
        if (threads > 1 && round.size() > 1) {
            std::vector<std::thread> workers;
            std::size_t next = 0;
            std::mutex next_mutex;
            const int count = std::min<int>(threads, static_cast<int>(round.size()));
            for (int w = 0; w < count; ++w) {
                workers.emplace_back([&]() {
                    while (true) {
                        std::size_t k;
                        {
                            std::lock_guard<std::mutex> lock(next_mutex);
                            if (next >= round.size()) return;
                            k = next++;
                        }
                        results[k] = evaluate(round[k]);
                    }
                });
            }
            for (auto& worker : workers) worker.join();
        } else {
            for (std::size_t k = 0; k < round.size(); ++k) {
                results[k] = evaluate(round[k]);
            }
        }

        for (std::size_t k = 0; k < round.size(); ++k) {
            const Node& node = round[k];
            NodeResult& res = results[k];
            ++sol.nodes;
            iterations_ += res.iterations;
            if (res.status == LpStatus::kIterationLimit) {
                hit_limit = true;
                continue;
            }
            if (res.status != LpStatus::kOptimal) {
                continue;
            }
            if (!root_done) {
                root_done = true;
                sol.root_bound = res.objective;
                if (options_.root_dive && !binary_cols_.empty()) {
                    dive(*res.kernel);
                }
            }
            if (res.objective >= incumbent_obj_ - prune_tolerance()) {
                continue;
            }
            const int branch = most_fractional(res.values);
            if (branch < 0) {
                offer_incumbent(res.values, res.objective);
                continue;
            }
            cache_kernel(node.id, res.kernel);
            for (int side = 0; side <= 1; ++side) {
                Node child;
                child.bound = res.objective;
                child.depth = node.depth + 1;
                child.id = next_id++;
                child.parent = node.id;
                child.fixings = node.fixings;
                child.fixings[branch] = static_cast<std::int8_t>(side);
                child.branch_binary = branch;
                child.parent_basis = res.basis;
                open.push(std::move(child));
            }
        }
        if (!open.empty() && open.top().bound >= incumbent_obj_ - prune_tolerance()) {
            // Every remaining node is dominated by the incumbent.
            while (!open.empty()) open.pop();
        }
    }

    sol.lp_iterations = iterations_;
    double best_bound = incumbent_obj_;
    if (!open.empty()) {
        best_bound = std::min(best_bound, open.top().bound);
    }
    if (incumbent_.empty()) {
        sol.status = hit_limit ? SolveStatus::kLimit : SolveStatus::kInfeasible;
        if (hit_limit) sol.diagnostic = "limit reached before any integer-feasible point was found";
        sol.best_bound = best_bound;
        return sol;
    }
    sol.values = incumbent_;
    sol.objective = incumbent_obj_;
    if (hit_limit) {
        sol.status = SolveStatus::kLimit;
        sol.best_bound = std::min(best_bound, sol.objective);
    } else {
        sol.status = SolveStatus::kOptimal;
        sol.best_bound = std::min(sol.objective, std::max(sol.root_bound, sol.objective - prune_tolerance()));
    }
    sol.gap = (sol.objective - sol.best_bound) / std::max(1.0, std::abs(sol.objective));
    return polish(std::move(sol));
}

}  // namespace

MilpSolution solve(const MilpModel& model, const SolveOptions& options) {
    model.validate();
    BranchAndBound bnb(model, options);
    return bnb.run();
}

}  // namespace fsuc::milp
