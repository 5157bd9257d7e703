#include <algorithm>
#include <iomanip>
#include <ostream>

#include "fsuc/scheduler.hpp"

namespace fsuc::scheduler {

using sysmodel::SystemSpec;

namespace {

sysmodel::ScenarioData scenario_data(const SystemSpec& system) {
    if (!system.scenarios.empty()) return system.scenarios;
    // No uncertainty given: one branch equal to the demand profile.
    sysmodel::ScenarioData d;
    d.levels = {0.5};
    for (double v : system.demand) {
        d.values.push_back({v});
        d.realized.push_back(v);
    }
    return d;
}

void advance(std::vector<UnitState>& state, const std::vector<int>& commit) {
    for (std::size_t g = 0; g < state.size(); ++g) {
        const bool on = commit[g] != 0;
        if (on == state[g].on) {
            state[g].periods = std::min(state[g].periods + 1, 1000000);
        } else {
            state[g] = UnitState{on, 1};
        }
    }
}

}  // namespace

double Trajectory::total_cost() const {
    double c = 0.0;
    for (const auto& r : realized) c += r.cost();
    return c;
}

double Trajectory::curtailed_energy() const {
    double e = 0.0;
    for (const auto& r : realized) e += r.curtailment * period_hours;
    return e;
}

Trajectory solve_rolling_horizon(const SystemSpec& system, const UcOptions& options, int start, int span) {
    options.validate();
    if (span < 0) span = system.periods() - start;
    if (start < 0 || span < 1 || start + span > system.periods()) {
        throw SchedulerError("simulation span lies outside the demand profile");
    }
    const auto data = scenario_data(system);
    Trajectory traj;
    traj.units = dispatchable_units(system);
    traj.period_hours = system.period_hours;
    auto state = initial_states(system);
    const int end = start + span;

    for (int t = start; t < end;) {
        const int length = std::min(options.horizon, end - t);
        const auto tree = sysmodel::build_scenario_tree(data.levels, data, data.realized.at(t), t, length);
        auto window = solve_window(system, tree, options, state, t);
        if (window.status != milp::SolveStatus::kOptimal) {
            traj.diagnostic = window.diagnostic;
            traj.windows.push_back(std::move(window));
            return traj;
        }
        const int committed = std::min(options.first_stage, length);
        std::vector<std::vector<int>> plan(committed);
        for (const auto& b : window.blocks) {
            if (b.period - t < committed) plan[b.period - t] = b.commit;
        }
        for (const auto& b : window.blocks) {
            if (b.period == t) traj.realized.push_back(b);
        }
        advance(state, plan[0]);
        traj.windows.push_back(std::move(window));

        // Later first-stage periods: keep the commitment, redispatch against
        // the realised net demand.
        for (int k = 1; k < committed; ++k) {
            sysmodel::ScenarioTree det;
            det.root_net_demand = data.realized.at(t + k);
            det.quantile_levels = {0.5};
            det.branches.push_back(sysmodel::ScenarioBranch{{det.root_net_demand}, 1.0});
            auto redispatch = solve_window(system, det, options, state, t + k, plan[k]);
            if (redispatch.status != milp::SolveStatus::kOptimal) {
                traj.diagnostic = redispatch.diagnostic;
                traj.windows.push_back(std::move(redispatch));
                return traj;
            }
            traj.realized.push_back(redispatch.blocks.front());
            advance(state, plan[k]);
            traj.windows.push_back(std::move(redispatch));
        }
        t += committed;
    }
    traj.complete = true;
    return traj;
}

FrequencyServiceCost cost_of_frequency_services(const SystemSpec& system, const UcOptions& options, int start,
                                                int span) {
    FrequencyServiceCost out;
    UcOptions on = options;
    on.frequency_constraints = true;
    UcOptions off = options;
    off.frequency_constraints = false;
    out.with_constraints = solve_rolling_horizon(system, on, start, span);
    if (!out.with_constraints.complete) {
        throw SchedulerError("frequency-constrained run failed: " + out.with_constraints.diagnostic);
    }
    out.without_constraints = solve_rolling_horizon(system, off, start, span);
    if (!out.without_constraints.complete) {
        throw SchedulerError("unconstrained run failed: " + out.without_constraints.diagnostic);
    }
    out.cost_on = out.with_constraints.total_cost();
    out.cost_off = out.without_constraints.total_cost();
    return out;
}

double load_factor(const Trajectory& trajectory, const SystemSpec& system, const std::string& unit_id) {
    for (std::size_t g = 0; g < trajectory.units.size(); ++g) {
        const auto& gen = system.generators.at(trajectory.units[g]);
        if (gen.id != unit_id) continue;
        if (trajectory.realized.empty()) return 0.0;
        double energy = 0.0;
        for (const auto& r : trajectory.realized) energy += r.output.at(g) * trajectory.period_hours;
        return energy / (gen.p_max * trajectory.period_hours * static_cast<double>(trajectory.realized.size()));
    }
    throw SchedulerError("unknown unit '" + unit_id + "'");
}

double emissions(const Trajectory& trajectory, const SystemSpec& system) {
    double total = 0.0;
    for (const auto& r : trajectory.realized) {
        for (std::size_t g = 0; g < trajectory.units.size(); ++g) {
            total += r.output.at(g) * trajectory.period_hours * system.generators.at(trajectory.units[g]).emissions_rate;
        }
    }
    return total;
}

void write_trajectory_table(std::ostream& out, const Trajectory& trajectory, const SystemSpec& system) {
    out << std::setprecision(10);
    out << "period\tdemand\tnet_demand\twind_available\tcurtailment\tload_served\tloss\tloss_nadir\tinertia\tpfr"
           "\tfuel_cost\tno_load_cost\tstartup_cost";
    for (auto g : trajectory.units) out << "\tx_" << system.generators[g].id;
    for (auto g : trajectory.units) out << "\tp_" << system.generators[g].id;
    out << '\n';
    for (const auto& r : trajectory.realized) {
        out << r.period << '\t' << r.demand << '\t' << r.net_demand << '\t' << r.wind_available << '\t'
            << r.curtailment << '\t' << r.load_served << '\t' << r.loss << '\t' << r.loss_nadir << '\t' << r.inertia
            << '\t' << r.total_pfr << '\t' << r.fuel_cost << '\t' << r.no_load_cost << '\t' << r.startup_cost;
        for (int x : r.commit) out << '\t' << x;
        for (double p : r.output) out << '\t' << p;
        out << '\n';
    }
}

void write_verification_table(std::ostream& out, const Trajectory& trajectory) {
    out << std::setprecision(10);
    out << "window\tperiod\tscenario\tprobability\tconstrained\tloss\tinertia\tpfr\trocof_margin\tnadir_margin"
           "\tqss_margin\trocof_ok\tnadir_ok\tqss_ok\n";
    for (const auto& w : trajectory.windows) {
        for (const auto& b : w.blocks) {
            const auto& s = b.security;
            out << w.start << '\t' << b.period << '\t' << b.scenario << '\t' << b.probability << '\t'
                << (b.segment >= 0) << '\t' << b.loss << '\t' << b.inertia << '\t' << b.total_pfr << '\t'
                << s.rocof_margin << '\t' << s.nadir_margin << '\t' << s.qss_margin << '\t' << s.rocof_ok << '\t'
                << s.nadir_ok << '\t' << s.qss_ok << '\n';
        }
    }
}

}  // namespace fsuc::scheduler
