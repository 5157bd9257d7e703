#include <algorithm>
#include <cmath>

#include "fsuc/scheduler.hpp"

namespace fsuc::scheduler {

using sysmodel::GeneratorSpec;
using sysmodel::SystemSpec;

const char* loss_mode_name(LossMode mode) { return mode == LossMode::kFixed ? "fixed" : "optimised"; }

LossMode parse_loss_mode(const std::string& text) {
    if (text == "fixed") return LossMode::kFixed;
    if (text == "optimised" || text == "optimized") return LossMode::kOptimised;
    throw SchedulerError("unknown largest-loss mode '" + text + "'");
}

void UcOptions::validate() const {
    if (horizon < 1) throw SchedulerError("horizon must be at least one period");
    if (first_stage < 1 || first_stage > horizon) {
        throw SchedulerError("first-stage length must lie in [1, horizon]");
    }
    if (max_cut_rounds < 0) throw SchedulerError("cut round limit must be non-negative");
}

std::vector<std::size_t> dispatchable_units(const SystemSpec& system) {
    std::vector<std::size_t> out;
    for (std::size_t g = 0; g < system.generators.size(); ++g) {
        if (system.generators[g].synchronous()) out.push_back(g);
    }
    return out;
}

std::vector<UnitState> initial_states(const SystemSpec& system) {
    std::vector<UnitState> out;
    for (auto g : dispatchable_units(system)) {
        const auto& gen = system.generators[g];
        out.push_back(UnitState{gen.initial_on || gen.must_run, gen.initial_periods});
    }
    return out;
}

namespace {

std::string period_tag(int t, int scenario) {
    std::string tag = "[" + std::to_string(t) + "]";
    if (scenario >= 0) tag += "[" + std::to_string(scenario) + "]";
    return tag;
}

double effective_p_min(const GeneratorSpec& g, const UcOptions& options) {
    if (!g.deloadable) return g.p_min;
    if (options.mode == LossMode::kFixed || !options.deloading_enabled) return g.p_max;
    return std::max(g.p_min, (1.0 - g.max_deload_fraction) * g.p_max);
}

}  // namespace

UcModel build_uc(const SystemSpec& system, const sysmodel::ScenarioTree& tree, const UcOptions& options,
                 const std::vector<UnitState>& state, int start, const std::optional<std::vector<int>>& fixed_commitment) {
    options.validate();
    UcModel uc;
    uc.units = dispatchable_units(system);
    uc.start = start;
    std::vector<GeneratorSpec> fleet;
    for (auto g : uc.units) fleet.push_back(system.generators[g]);
    const int n_units = static_cast<int>(fleet.size());
    if (static_cast<int>(state.size()) != n_units) {
        throw SchedulerError("unit state count differs from the dispatchable fleet");
    }
    if (tree.branches.empty()) {
        throw SchedulerError("scenario tree has no branches");
    }
    const int length = static_cast<int>(tree.branches.front().net_demand.size());
    const int n_scen = static_cast<int>(tree.branches.size());
    uc.length = length;
    if (start < 0 || start + length > system.periods()) {
        throw SchedulerError("window extends past the demand profile");
    }
    if (fixed_commitment && static_cast<int>(fixed_commitment->size()) != n_units) {
        throw SchedulerError("fixed commitment size differs from the dispatchable fleet");
    }
    const auto& freq = system.frequency;
    const double hours = system.period_hours;
    auto& model = uc.model;

    // Commitment and startup variables: one set per period while shared,
    // one per branch afterwards.
    auto shared = [&](int k) { return k == 0 || k < options.first_stage; };
    std::vector<std::vector<std::vector<VarId>>> x(length), u(length);
    for (int k = 0; k < length; ++k) {
        const int t = start + k;
        const int copies = shared(k) ? 1 : n_scen;
        x[k].resize(copies);
        u[k].resize(copies);
        for (int s = 0; s < copies; ++s) {
            const std::string tag = period_tag(t, shared(k) ? -1 : s);
            for (int g = 0; g < n_units; ++g) {
                const auto& gen = fleet[g];
                double lo = 0.0;
                double hi = 1.0;
                if (gen.must_run) lo = 1.0;
                if (gen.deloadable && options.mode == LossMode::kFixed) lo = 1.0;
                if (state[g].on && state[g].periods < gen.min_up && k < gen.min_up - state[g].periods) lo = 1.0;
                if (!state[g].on && state[g].periods < gen.min_down && k < gen.min_down - state[g].periods) hi = 0.0;
                if (k == 0 && fixed_commitment) {
                    const double v = (*fixed_commitment)[g] ? 1.0 : 0.0;
                    if (v < lo || v > hi) {
                        throw SchedulerError("fixed commitment of " + gen.id + " conflicts with its history");
                    }
                    lo = hi = v;
                }
                if (lo > hi) {
                    throw SchedulerError("commitment of " + gen.id + " in period " + std::to_string(t) +
                                         " is forced both on and off");
                }
                const VarId xv = model.add_variable("x" + tag + "[" + gen.id + "]", milp::VarKind::kBinary, lo, hi);
                x[k][s].push_back(xv);
                u[k][s].push_back(model.add_continuous("u" + tag + "[" + gen.id + "]", 0.0, 1.0));
            }
        }
    }
    auto xs = [&](int k, int s) -> const std::vector<VarId>& { return x[k][shared(k) ? 0 : s]; };
    auto us = [&](int k, int s) -> const std::vector<VarId>& { return u[k][shared(k) ? 0 : s]; };

    // Startup indicators and minimum up/down times along each branch path.
    for (int s = 0; s < n_scen; ++s) {
        for (int k = 0; k < length; ++k) {
            if (shared(k) && s > 0) continue;
            const int t = start + k;
            const std::string tag = period_tag(t, shared(k) ? -1 : s);
            for (int g = 0; g < n_units; ++g) {
                const double prev = state[g].on ? 1.0 : 0.0;
                LinearExpr e;
                e.add(us(k, s)[g], 1.0).add(xs(k, s)[g], -1.0);
                if (k > 0) e.add(xs(k - 1, s)[g], 1.0);
                else e.constant += prev;
                model.add_row(LinearRow::from_expr(e, Sense::kGreaterEqual, 0.0, "startup" + tag + "[" + fleet[g].id + "]"));
            }
        }
        for (int g = 0; g < n_units; ++g) {
            const auto& gen = fleet[g];
            const double prev = state[g].on ? 1.0 : 0.0;
            for (int k = 0; k < length; ++k) {
                for (int tau = k + 1; tau < length; ++tau) {
                    if (shared(tau) && s > 0) continue;
                    const std::string tag = "[" + std::to_string(start + k) + "][" + std::to_string(start + tau) + "]" +
                                            (shared(tau) ? "" : "[" + std::to_string(s) + "]") + "[" + gen.id + "]";
                    if (tau - k < gen.min_up) {
                        LinearExpr e;
                        e.add(xs(k, s)[g], 1.0).add(xs(tau, s)[g], -1.0);
                        if (k > 0) e.add(xs(k - 1, s)[g], -1.0);
                        else e.constant -= prev;
                        model.add_row(LinearRow::from_expr(e, Sense::kLessEqual, 0.0, "min_up" + tag));
                    }
                    if (tau - k < gen.min_down) {
                        LinearExpr e;
                        e.add(xs(k, s)[g], -1.0).add(xs(tau, s)[g], 1.0);
                        if (k > 0) e.add(xs(k - 1, s)[g], 1.0);
                        else e.constant += prev;
                        model.add_row(LinearRow::from_expr(e, Sense::kLessEqual, 1.0, "min_down" + tag));
                    }
                }
            }
        }
    }

    double loss_cap = 0.0;
    for (const auto& g : fleet) {
        if (g.loss_source) loss_cap = std::max(loss_cap, g.p_max);
    }
    double r_max = 0.0;
    for (const auto& g : fleet) r_max += g.pfr_max;

    LinearExpr objective;
    for (int k = 0; k < length; ++k) {
        const int t = start + k;
        const int copies = k == 0 ? 1 : n_scen;
        for (int s = 0; s < copies; ++s) {
            Block b;
            b.offset = k;
            b.scenario = k == 0 ? -1 : s;
            b.probability = k == 0 ? 1.0 : tree.branches[s].probability;
            b.demand = system.demand[t];
            b.net_demand = k == 0 ? tree.root_net_demand : tree.branches[s].net_demand[k];
            b.wind_available = std::max(0.0, b.demand - b.net_demand);
            const std::string tag = period_tag(t, b.scenario);

            // Cheap infeasibility screen before any solving.
            double cap = 0.0;
            double floor = 0.0;
            for (int g = 0; g < n_units; ++g) {
                const auto& v = model.variable(xs(k, std::max(s, 0))[g]);
                cap += v.upper * fleet[g].p_max;
                floor += v.lower * effective_p_min(fleet[g], options);
            }
            if (b.net_demand > cap + 1e-6) {
                throw SchedulerError("net demand " + std::to_string(b.net_demand) + " MW exceeds available capacity " +
                                     std::to_string(cap) + " MW in block " + tag);
            }
            if (floor > b.demand + 1e-6) {
                throw SchedulerError("must-run output " + std::to_string(floor) + " MW exceeds demand in block " + tag);
            }

            auto& d = b.vars;
            d.commit = xs(k, std::max(s, 0));
            b.startup = us(k, std::max(s, 0));
            for (int g = 0; g < n_units; ++g) {
                d.output.push_back(model.add_continuous("p" + tag + "[" + fleet[g].id + "]", 0.0, fleet[g].p_max));
                d.pfr.push_back(model.add_continuous("r" + tag + "[" + fleet[g].id + "]", 0.0, fleet[g].pfr_max));
            }
            b.curtailment = model.add_continuous("curtail" + tag, 0.0, b.wind_available);

            LinearExpr balance;
            for (auto p : d.output) balance.add(p, 1.0);
            balance.add(b.curtailment, -1.0);
            model.add_row(LinearRow::from_expr(balance, Sense::kEqual, b.net_demand, "balance" + tag));

            for (int g = 0; g < n_units; ++g) {
                const auto& gen = fleet[g];
                const std::string ut = tag + "[" + gen.id + "]";
                LinearExpr upper;
                upper.add(d.output[g], 1.0).add(d.commit[g], -gen.p_max);
                model.add_row(LinearRow::from_expr(upper, Sense::kLessEqual, 0.0, "pmax" + ut));
                const double p_min = effective_p_min(gen, options);
                if (p_min > 0.0) {
                    LinearExpr lower;
                    lower.add(d.output[g], 1.0).add(d.commit[g], -p_min);
                    model.add_row(LinearRow::from_expr(lower, Sense::kGreaterEqual, 0.0, "pmin" + ut));
                }
                if (gen.deloadable && options.mode == LossMode::kFixed) {
                    LinearExpr fixed;
                    fixed.add(d.output[g], 1.0);
                    model.add_row(LinearRow::from_expr(fixed, Sense::kEqual, gen.p_max, "fixed_output" + ut));
                }
                if (gen.pfr_max > 0.0) {
                    LinearExpr cap_r;
                    cap_r.add(d.pfr[g], 1.0).add(d.commit[g], -gen.pfr_max);
                    model.add_row(LinearRow::from_expr(cap_r, Sense::kLessEqual, 0.0, "pfr" + ut));
                    LinearExpr head;
                    head.add(d.pfr[g], 1.0).add(d.output[g], 1.0).add(d.commit[g], -gen.p_max);
                    model.add_row(LinearRow::from_expr(head, Sense::kLessEqual, 0.0, "headroom" + ut));
                }
                const double w = b.probability;
                objective.add(d.output[g], w * hours * gen.marginal_cost);
                objective.add(d.commit[g], w * hours * gen.no_load_cost);
                objective.add(b.startup[g], w * gen.startup_cost);
            }

            if (options.frequency_constraints) {
                d.loss = model.add_continuous("pl" + tag, 0.0, loss_cap);
                auto loss_rows = freqsec::largest_loss_rows(d, fleet, tag);
                model.add_rows(std::move(loss_rows.rows));
                b.inertia = freqsec::inertia_expression(d, fleet, freq);
                model.add_row(freqsec::rocof_row(d, b.inertia, freq, tag));
                model.add_row(freqsec::inertia_nonneg_row(b.inertia, tag));
                model.add_row(freqsec::qss_row(d, freq, b.demand, tag));
                auto bl = freqsec::linearize_inertia_pfr(model, d, fleet, freq, r_max, tag);
                model.add_rows(std::move(bl.rows));
                b.hr = bl.hr;
                freqsec::add_segment_variables(model, d, freq, tag);
                model.add_rows(freqsec::nadir_discretization_rows(d, freq, b.demand, b.hr, tag));
            }
            uc.blocks.push_back(std::move(b));
        }
    }
    model.set_objective(objective);
    return uc;
}

}  // namespace fsuc::scheduler
