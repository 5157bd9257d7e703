#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "fsuc/scheduler.hpp"

namespace fsuc::scheduler {

using sysmodel::SystemSpec;

namespace {

BlockResult extract_block(const SystemSpec& system, const UcModel& uc, const Block& b, const UcOptions& options,
                          const std::vector<double>& values) {
    const auto& freq = system.frequency;
    BlockResult r;
    r.period = uc.start + b.offset;
    r.scenario = b.scenario;
    r.probability = b.probability;
    r.demand = b.demand;
    r.net_demand = b.net_demand;
    r.wind_available = b.wind_available;
    r.curtailment = std::clamp(values[b.curtailment.index], 0.0, b.wind_available);
    double total = 0.0;
    for (std::size_t g = 0; g < uc.units.size(); ++g) {
        const auto& gen = system.generators[uc.units[g]];
        const int on = values[b.vars.commit[g].index] > 0.5 ? 1 : 0;
        const double p = on ? std::clamp(values[b.vars.output[g].index], 0.0, gen.p_max) : 0.0;
        r.commit.push_back(on);
        r.output.push_back(p);
        // Canonical response: everything the unit can still deliver.
        r.pfr.push_back(on ? std::max(0.0, std::min(gen.pfr_max, gen.p_max - p)) : 0.0);
        total += p;
        r.total_pfr += r.pfr.back();
        if (gen.loss_source) r.loss = std::max(r.loss, p);
        r.inertia += on * gen.inertia_const * gen.p_max / freq.f0;
        r.fuel_cost += gen.marginal_cost * p * system.period_hours;
        r.no_load_cost += gen.no_load_cost * on * system.period_hours;
    }
    r.inertia -= freq.largest_unit_rating * freq.largest_unit_inertia / freq.f0;
    r.load_served = total + b.wind_available - r.curtailment;
    if (options.frequency_constraints) {
        const auto& grid = freq.nadir_segments;
        r.segment = static_cast<int>(grid.size()) - 1;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] >= r.loss - 1e-6) {
                r.segment = static_cast<int>(i);
                break;
            }
        }
        r.loss_nadir = grid[r.segment];
    }
    // Checked even when unconstrained so reports can show what was given up.
    r.security = freqdyn::verify_point(r.inertia, r.total_pfr, r.loss, r.demand, freq);
    return r;
}

// Δf(60 s) is linear in (R, P^L) for a fixed commitment and damping.
struct QssCoefficients {
    double per_pfr = 0.0;
    double per_loss = 0.0;
};

QssCoefficients qss_coefficients(double inertia, double demand, const sysmodel::FrequencyParams& freq) {
    freqdyn::SwingInputs in;
    in.inertia = inertia;
    in.damping = freq.damping * demand;
    in.t_d = freq.t_d;
    in.step = 0.0;
    in.pfr = 1.0;
    in.loss = 0.0;
    QssCoefficients c;
    c.per_pfr = freqdyn::deviation_at(in, 60.0);
    in.pfr = 0.0;
    in.loss = 1.0;
    c.per_loss = freqdyn::deviation_at(in, 60.0);
    return c;
}

}  // namespace

int UcSolution::verification_failures() const {
    int n = 0;
    for (const auto& b : blocks) {
        if (b.segment >= 0 && !b.security.secure()) ++n;
    }
    return n;
}

UcSolution solve_window(const SystemSpec& system, const sysmodel::ScenarioTree& tree, const UcOptions& options,
                        const std::vector<UnitState>& state, int start,
                        const std::optional<std::vector<int>>& fixed_commitment) {
    UcModel uc = build_uc(system, tree, options, state, start, fixed_commitment);
    const auto& freq = system.frequency;
    UcSolution out;
    out.start = start;
    out.length = uc.length;
    out.initial = state;
    double loss_cap = 0.0;
    for (auto g : uc.units) {
        if (system.generators[g].loss_source) loss_cap = std::max(loss_cap, system.generators[g].p_max);
    }

    // Commitments shared by every branch form the first stage; once they are
    // fixed the branches separate. A single branch has nothing to separate.
    std::vector<VarId> shared;
    const bool staged = tree.branches.size() > 1;
    for (const auto& b : uc.blocks) {
        if (staged && b.offset < options.first_stage) {
            for (auto v : b.vars.commit) {
                if (std::find(shared.begin(), shared.end(), v) == shared.end()) shared.push_back(v);
            }
        }
    }

    for (int round = 0;; ++round) {
        milp::MilpSolution sol;
        if (!options.external_solver.empty()) {
            const auto dir = options.export_dir.empty() ? std::filesystem::temp_directory_path() : std::filesystem::path(options.export_dir);
            sol = milp::solve_external(uc.model, options.external_solver,
                                       (dir / ("window_" + std::to_string(start) + "_" + std::to_string(round))).string());
        } else if (staged) {
            sol = milp::solve_staged(uc.model, shared, options.solver);
        } else {
            sol = milp::solve(uc.model, options.solver);
        }
        out.status = sol.status;
        out.objective = sol.objective;
        out.best_bound = sol.best_bound;
        out.nodes += sol.nodes;
        out.cut_rounds = round;
        if (sol.status != milp::SolveStatus::kOptimal) {
            out.diagnostic = std::string("window at period ") + std::to_string(start) + ": solver status " +
                             milp::status_name(sol.status) + (sol.diagnostic.empty() ? "" : " (" + sol.diagnostic + ")");
            out.blocks.clear();
            if (!options.export_dir.empty()) {
                const auto path = std::filesystem::path(options.export_dir) / ("failed_window_" + std::to_string(start) + ".lp");
                std::ofstream lp(path);
                lp << milp::export_model(uc.model);
                if (lp) out.diagnostic += "; model written to " + path.string();
            }
            return out;
        }
        out.blocks.clear();
        for (const auto& b : uc.blocks) {
            out.blocks.push_back(extract_block(system, uc, b, options, sol.values));
        }
        // Startup costs along each block's branch path.
        for (std::size_t i = 0; i < uc.blocks.size(); ++i) {
            const auto& b = uc.blocks[i];
            auto& r = out.blocks[i];
            const BlockResult* prev = nullptr;
            if (b.offset > 0) {
                for (std::size_t j = 0; j < uc.blocks.size(); ++j) {
                    const auto& c = uc.blocks[j];
                    if (c.offset == b.offset - 1 && (c.scenario == b.scenario || c.scenario < 0)) prev = &out.blocks[j];
                }
            }
            for (std::size_t g = 0; g < uc.units.size(); ++g) {
                const int before = prev ? prev->commit[g] : (state[g].on ? 1 : 0);
                if (r.commit[g] && !before) r.startup_cost += system.generators[uc.units[g]].startup_cost;
            }
        }
        if (!options.frequency_constraints) return out;

        bool cut_added = false;
        for (std::size_t i = 0; i < uc.blocks.size(); ++i) {
            const auto& r = out.blocks[i];
            if (r.security.qss_ok || r.inertia <= 0.0) continue;
            const auto& b = uc.blocks[i];
            const auto c = qss_coefficients(r.inertia, r.demand, freq);
            LinearExpr e;
            e.add(b.vars.total_pfr(), c.per_pfr).add(b.vars.loss, c.per_loss);
            // Relax the cut for every other commitment of this block.
            const double big_m = std::abs(c.per_loss) * loss_cap;
            for (std::size_t g = 0; g < uc.units.size(); ++g) {
                if (r.commit[g]) {
                    e.add(b.vars.commit[g], -big_m);
                    e.constant += big_m;
                } else {
                    e.add(b.vars.commit[g], big_m);
                }
            }
            // A tolerance-sized margin keeps the cut effective under the solver's scaled feasibility test.
            const double margin = options.solver.feasibility_tol * std::max(1.0, big_m);
            uc.model.add_row(LinearRow::from_expr(e, Sense::kGreaterEqual, -freq.df_ss_max + margin,
                                                  "qss60[" + std::to_string(r.period) + "]" +
                                                      (r.scenario >= 0 ? "[" + std::to_string(r.scenario) + "]" : "") +
                                                      "[" + std::to_string(round) + "]"));
            cut_added = true;
        }
        if (!cut_added || round >= options.max_cut_rounds) {
            if (cut_added) out.diagnostic = "60 s cut loop hit its round limit";
            return out;
        }
    }
}

}  // namespace fsuc::scheduler
