#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "fsuc/cli.hpp"
#include "fsuc/freqdyn.hpp"
#include "json.hpp"

namespace fsuc::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw sysmodel::LoadError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

bool positional_key(const std::string& key) { return key.rfind("args[", 0) == 0; }

// Options the user actually gave, keyed by long name, excluding inputs and
// the output directory which the manifest records separately.
std::map<std::string, std::string> given_overrides(const CLI::App& sub, const std::vector<std::string>& skip) {
    std::map<std::string, std::string> out;
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->count() == 0 || opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        if (name == "help" || std::find(skip.begin(), skip.end(), name) != skip.end()) continue;
        if (opt->get_type_size() == 0) {
            out[name] = "true";
            continue;
        }
        std::string joined;
        for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
        out[name] = joined;
    }
    return out;
}

void write_manifest(const RunManifest& m) {
    write_text(fs::path(m.output_dir) / "manifest.json", m.to_json());
}

struct Reporter {
    std::ostream& out;
    std::ostream& err;

    int fail(int code, const std::string& what) const {
        err << "error: " << what << '\n';
        return code;
    }
};

// -- validate ---------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& paths, const Reporter& r) {
    int bad = 0;
    for (const auto& p : paths) {
        try {
            const fs::path path(p);
            if (path.extension() == ".csv") {
                sysmodel::load_scenarios(path);
            } else {
                const auto doc = json::parse(read_text(path), nullptr, false);
                if (doc.is_object() && doc.contains("wind_capacities")) {
                    const auto study = load_study(path);
                    sysmodel::load_system(study.system);
                } else {
                    sysmodel::load_system(path);
                }
            }
            r.out << "ok\t" << p << '\n';
        } catch (const std::exception& e) {
            ++bad;
            r.out << "error\t" << p << '\t' << e.what() << '\n';
        }
    }
    return bad == 0 ? kExitOk : kExitValidation;
}

// -- solve ------------------------------------------------------------------

struct SolveArgs {
    std::string system;
    std::string scenarios;
    std::string out;
    std::string frequency = "on";
    std::string mode = "optimised";
    bool no_deloading = false;
    int horizon = 2;
    int first_stage = 1;
    int start = 0;
    int span = -1;
    double wind_capacity = -1.0;
    double gap = 1e-6;
    std::int64_t node_limit = 200000;
    int threads = 1;
};

scheduler::UcOptions uc_options(const SolveArgs& a) {
    scheduler::UcOptions o;
    if (a.frequency != "on" && a.frequency != "off") {
        throw scheduler::SchedulerError("--frequency takes 'on' or 'off', not '" + a.frequency + "'");
    }
    o.frequency_constraints = a.frequency == "on";
    o.mode = scheduler::parse_loss_mode(a.mode);
    o.deloading_enabled = !a.no_deloading;
    o.horizon = a.horizon;
    o.first_stage = a.first_stage;
    o.solver.relative_gap = a.gap;
    o.solver.node_limit = a.node_limit;
    o.solver.threads = a.threads;
    o.validate();
    return o;
}

std::string external_solver() {
    const char* env = std::getenv(kExternalSolverEnv);
    return env ? std::string(env) : std::string();
}

int cmd_solve(const SolveArgs& a, RunManifest manifest, const Reporter& r) {
    sysmodel::SystemSpec system;
    scheduler::UcOptions options;
    try {
        system = sysmodel::load_system(a.system);
        if (!a.scenarios.empty()) {
            system.scenarios = sysmodel::load_scenarios(a.scenarios);
            sysmodel::finalize_system(system);
        }
        if (a.wind_capacity >= 0.0) system = sysmodel::with_wind_capacity(system, a.wind_capacity);
        options = uc_options(a);
    } catch (const std::exception& e) {
        return r.fail(kExitValidation, e.what());
    }
    const fs::path dir(a.out);
    fs::create_directories(dir);
    options.export_dir = dir.string();
    options.external_solver = external_solver();
    if (!options.external_solver.empty()) r.out << "using external solver " << options.external_solver << '\n';

    scheduler::Trajectory traj;
    try {
        traj = scheduler::solve_rolling_horizon(system, options, a.start, a.span);
    } catch (const scheduler::SchedulerError& e) {
        return r.fail(kExitValidation, e.what());
    } catch (const milp::SolverError& e) {
        return r.fail(kExitSolver, e.what());
    } catch (const milp::ModelError& e) {
        return r.fail(kExitSolver, e.what());
    }

    {
        std::ofstream t(dir / "schedule.tsv");
        scheduler::write_trajectory_table(t, traj, system);
        std::ofstream v(dir / "verification.tsv");
        scheduler::write_verification_table(v, traj);
        std::ofstream w(dir / "windows.tsv");
        w << std::setprecision(12) << "start\tlength\tstatus\tobjective\tbest_bound\tnodes\tcut_rounds\tfailures\n";
        for (const auto& win : traj.windows) {
            w << win.start << '\t' << win.length << '\t' << milp::status_name(win.status) << '\t' << win.objective
              << '\t' << win.best_bound << '\t' << win.nodes << '\t' << win.cut_rounds << '\t'
              << win.verification_failures() << '\n';
        }
    }
    int failures = 0;
    int unconstrained_failures = 0;
    int blocks = 0;
    for (const auto& win : traj.windows) {
        failures += win.verification_failures();
        for (const auto& b : win.blocks) {
            ++blocks;
            if (!b.security.secure()) ++unconstrained_failures;
        }
    }
    json summary = {
        {"complete", traj.complete},
        {"periods", traj.realized.size()},
        {"total_cost", traj.total_cost()},
        {"curtailed_energy", traj.curtailed_energy()},
        {"emissions", scheduler::emissions(traj, system)},
        {"largest_unit", system.frequency.largest_unit_id},
        {"largest_unit_load_factor", scheduler::load_factor(traj, system, system.frequency.largest_unit_id)},
        {"frequency_constraints", options.frequency_constraints},
        {"verification_failures", options.frequency_constraints ? failures : unconstrained_failures},
        {"verified_blocks", blocks},
    };
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    manifest.output_dir = dir.string();
    write_manifest(manifest);

    if (!traj.complete) return r.fail(kExitSolver, "solver failure: " + traj.diagnostic);
    r.out << "periods " << traj.realized.size() << "  cost " << std::setprecision(12) << traj.total_cost() << '\n';
    if (!options.frequency_constraints) {
        r.out << "verification: " << unconstrained_failures << " of " << blocks
              << " blocks fail the security check (frequency constraints off, failures are expected)\n";
        return kExitOk;
    }
    r.out << "verification: " << failures << " of " << blocks << " blocks fail the security check\n";
    if (failures > 0) return r.fail(kExitVerification, "frequency-secured schedule failed verification");
    return kExitOk;
}

// -- study ------------------------------------------------------------------

struct StudyArgs {
    std::string config;
    std::string out;
    int jobs = 1;
    int span = -1;
    double gap = 1e-6;
};

int cmd_study(const StudyArgs& a, RunManifest manifest, const Reporter& r) {
    StudyConfig config;
    sysmodel::SystemSpec system;
    scheduler::UcOptions base;
    try {
        config = load_study(a.config);
        if (a.span > 0) config.span = a.span;
        system = sysmodel::load_system(config.system);
        base.horizon = config.horizon;
        base.first_stage = config.first_stage;
        base.solver.relative_gap = a.gap;
        base.validate();
        if (a.jobs < 1) throw scheduler::SchedulerError("--jobs must be at least 1");
    } catch (const std::exception& e) {
        return r.fail(kExitValidation, e.what());
    }
    base.external_solver = external_solver();
    const fs::path dir(a.out);
    fs::create_directories(dir);
    base.export_dir = dir.string();

    std::vector<StudyRow> rows;
    try {
        rows = run_study(system, config, base, a.jobs);
    } catch (const CellFailure& e) {
        return r.fail(kExitSolver, e.what());
    } catch (const milp::SolverError& e) {
        return r.fail(kExitSolver, e.what());
    } catch (const scheduler::SchedulerError& e) {
        return r.fail(kExitValidation, e.what());
    }
    std::ostringstream table;
    write_study_table(table, rows);
    write_text(dir / "study.tsv", table.str());
    manifest.output_dir = dir.string();
    write_manifest(manifest);
    r.out << table.str();
    int failures = 0;
    for (const auto& row : rows) failures += row.verification_failures;
    if (failures > 0) return r.fail(kExitVerification, std::to_string(failures) + " secured blocks failed verification");
    return kExitOk;
}

// -- region -----------------------------------------------------------------

struct RegionArgs {
    std::vector<double> losses;
    double t_d = 10.0;
    double df_max = 0.8;
    double damping_max = 500.0;
    int points = 26;
    std::string out;
};

int cmd_region(const RegionArgs& a, RunManifest manifest, const Reporter& r) {
    if (a.losses.empty()) return r.fail(kExitValidation, "at least one --loss is required");
    for (double l : a.losses) {
        if (!(l > 0.0) || !std::isfinite(l)) return r.fail(kExitValidation, "--loss values must be positive");
    }
    if (!(a.t_d > 0.0)) return r.fail(kExitValidation, "--t-d must be positive");
    if (!(a.df_max > 0.0)) return r.fail(kExitValidation, "--df-max must be positive");
    if (!(a.damping_max >= 0.0) || !std::isfinite(a.damping_max)) {
        return r.fail(kExitValidation, "--damping-max must be finite and non-negative");
    }
    if (a.points < 2) return r.fail(kExitValidation, "--points must be at least 2");

    std::vector<double> dampings;
    for (int i = 0; i < a.points; ++i) dampings.push_back(a.damping_max * i / (a.points - 1));
    std::ostringstream table;
    table << std::setprecision(12) << "loss\tdamping\texact_hr\tlinear_hr\n";
    for (double loss : a.losses) {
        for (const auto& p : freqdyn::region_curve(loss, a.t_d, a.df_max, dampings)) {
            table << loss << '\t' << p.damping << '\t' << p.exact_hr << '\t' << p.linear_hr << '\n';
        }
    }
    if (a.out.empty()) {
        r.out << table.str();
        return kExitOk;
    }
    const fs::path dir(a.out);
    fs::create_directories(dir);
    write_text(dir / "region.tsv", table.str());
    manifest.output_dir = dir.string();
    write_manifest(manifest);
    return kExitOk;
}

}  // namespace

// -- manifest ----------------------------------------------------------------

std::string RunManifest::to_json() const {
    json j = {
        {"command", command}, {"inputs", inputs},   {"overrides", overrides},
        {"output_dir", output_dir}, {"seed", seed}, {"version", version},
    };
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        RunManifest m;
        m.command = j.at("command").get<std::string>();
        m.inputs = j.value("inputs", std::map<std::string, std::string>{});
        m.overrides = j.value("overrides", std::map<std::string, std::string>{});
        m.output_dir = j.value("output_dir", std::string());
        m.seed = j.value("seed", std::uint64_t{0});
        m.version = j.value("version", std::string());
        return m;
    } catch (const json::exception& e) {
        throw sysmodel::LoadError(std::string("manifest: ") + e.what());
    }
}

std::vector<std::string> RunManifest::arguments() const {
    std::vector<std::string> args{command};
    for (const auto& [key, value] : inputs) {
        if (positional_key(key)) {
            args.push_back(value);
        } else {
            args.push_back("--" + key);
            args.push_back(value);
        }
    }
    for (const auto& [key, value] : overrides) {
        args.push_back("--" + key);
        if (value != "true") args.push_back(value);
    }
    if (!output_dir.empty()) {
        args.push_back("--out");
        args.push_back(output_dir);
    }
    args.push_back("--seed");
    args.push_back(std::to_string(seed));
    return args;
}

// -- study config ------------------------------------------------------------

StudyConfig load_study(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw sysmodel::LoadError(path.string() + ": " + e.what());
    }
    StudyConfig c;
    try {
        c.system = j.at("system").get<std::string>();
        if (c.system.is_relative()) c.system = path.parent_path() / c.system;
        c.wind_capacities = j.at("wind_capacities").get<std::vector<double>>();
        c.modes.clear();
        for (const auto& m : j.value("modes", std::vector<std::string>{"fixed", "optimised"})) {
            c.modes.push_back(scheduler::parse_loss_mode(m));
        }
        c.start = j.value("start", c.start);
        c.span = j.value("span", c.span);
        c.horizon = j.value("horizon", c.horizon);
        c.first_stage = j.value("first_stage", c.first_stage);
    } catch (const json::exception& e) {
        throw sysmodel::LoadError(path.string() + ": " + e.what());
    } catch (const scheduler::SchedulerError& e) {
        throw sysmodel::ValidationError("modes", e.what());
    }
    if (c.wind_capacities.empty()) throw sysmodel::ValidationError("wind_capacities", "at least one level is required");
    for (double w : c.wind_capacities) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw sysmodel::ValidationError("wind_capacities", "levels must be finite and non-negative");
        }
    }
    if (c.modes.empty()) throw sysmodel::ValidationError("modes", "at least one mode is required");
    if (c.start < 0) throw sysmodel::ValidationError("start", "must be non-negative");
    if (c.span < 1) throw sysmodel::ValidationError("span", "must be at least one period");
    if (c.horizon < 1) throw sysmodel::ValidationError("horizon", "must be at least one period");
    if (c.first_stage < 1 || c.first_stage > c.horizon) {
        throw sysmodel::ValidationError("first_stage", "must lie in [1, horizon]");
    }
    return c;
}

std::vector<StudyRow> run_study(const sysmodel::SystemSpec& system, const StudyConfig& config,
                                const scheduler::UcOptions& base, int jobs) {
    struct Cell {
        double wind;
        scheduler::LossMode mode;
    };
    std::vector<Cell> cells;
    for (double w : config.wind_capacities) {
        for (auto m : config.modes) cells.push_back({w, m});
    }

    auto solve_cell = [&](const Cell& cell) {
        const auto sys = sysmodel::with_wind_capacity(system, cell.wind);
        scheduler::UcOptions on = base;
        on.mode = cell.mode;
        on.frequency_constraints = true;
        scheduler::UcOptions off = on;
        off.frequency_constraints = false;
        const std::string tag = "wind " + std::to_string(cell.wind) + " MW, " + scheduler::loss_mode_name(cell.mode);
        auto with = scheduler::solve_rolling_horizon(sys, on, config.start, config.span);
        if (!with.complete) throw CellFailure(tag + ", frequency on: " + with.diagnostic);
        auto without = scheduler::solve_rolling_horizon(sys, off, config.start, config.span);
        if (!without.complete) throw CellFailure(tag + ", frequency off: " + without.diagnostic);
        StudyRow row;
        row.wind_capacity = cell.wind;
        row.mode = cell.mode;
        row.cost_on = with.total_cost();
        row.cost_off = without.total_cost();
        row.load_factor = scheduler::load_factor(with, sys, sys.frequency.largest_unit_id);
        row.emissions = scheduler::emissions(with, sys);
        row.emissions_off = scheduler::emissions(without, sys);
        row.curtailed_energy = with.curtailed_energy();
        for (const auto& w : with.windows) row.verification_failures += w.verification_failures();
        return row;
    };

    std::vector<StudyRow> rows(cells.size());
    const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
    for (std::size_t first = 0; first < cells.size(); first += width) {
        const std::size_t last = std::min(cells.size(), first + width);
        if (width == 1) {
            rows[first] = solve_cell(cells[first]);
            continue;
        }
        std::vector<std::future<StudyRow>> running;
        for (std::size_t i = first; i < last; ++i) {
            running.push_back(std::async(std::launch::async, solve_cell, cells[i]));
        }
        for (std::size_t i = first; i < last; ++i) rows[i] = running[i - first].get();
    }
    return rows;
}

void write_study_table(std::ostream& out, const std::vector<StudyRow>& rows) {
    out << std::setprecision(12);
    out << "wind_capacity\tmode\tcost_on\tcost_off\tfrequency_service_cost\tlargest_unit_load_factor\temissions"
           "\temissions_off\tcurtailed_energy\tverification_failures\n";
    for (const auto& r : rows) {
        out << r.wind_capacity << '\t' << scheduler::loss_mode_name(r.mode) << '\t' << r.cost_on << '\t' << r.cost_off
            << '\t' << r.frequency_service_cost() << '\t' << r.load_factor << '\t' << r.emissions << '\t'
            << r.emissions_off << '\t' << r.curtailed_energy << '\t' << r.verification_failures << '\n';
    }
}

// -- entry point ---------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    const Reporter reporter{out, err};
    CLI::App app{"Frequency-secured stochastic unit commitment", "fsuc"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::uint64_t seed = 0;

    auto* validate = app.add_subcommand("validate", "Load and check system, scenario and study files");
    std::vector<std::string> paths;
    validate->add_option("paths", paths, "Files to check")->required();

    auto* solve = app.add_subcommand("solve", "Rolling-horizon schedule with a verification report");
    SolveArgs sa;
    solve->add_option("--system", sa.system, "System file")->required();
    solve->add_option("--scenarios", sa.scenarios, "Scenario CSV replacing the system's own");
    solve->add_option("--out", sa.out, "Output directory")->required();
    solve->add_option("--frequency", sa.frequency, "on | off")->capture_default_str();
    solve->add_option("--mode", sa.mode, "Largest-loss mode: fixed | optimised")->capture_default_str();
    solve->add_flag("--no-deloading", sa.no_deloading, "Keep deloadable units at their normal minimum");
    solve->add_option("--horizon", sa.horizon, "Periods per window")->capture_default_str();
    solve->add_option("--first-stage", sa.first_stage, "Periods committed per window")->capture_default_str();
    solve->add_option("--start", sa.start, "First simulated period")->capture_default_str();
    solve->add_option("--span", sa.span, "Simulated periods (default: to the end)");
    solve->add_option("--wind-capacity", sa.wind_capacity, "Rescale wind to this capacity, MW");
    solve->add_option("--gap", sa.gap, "Relative optimality gap")->capture_default_str();
    solve->add_option("--node-limit", sa.node_limit, "Branch-and-bound node limit")->capture_default_str();
    solve->add_option("--threads", sa.threads, "Solver threads")->capture_default_str();
    solve->add_option("--seed", seed, "Recorded in the manifest");

    auto* study = app.add_subcommand("study", "Cost of frequency services across wind levels and modes");
    StudyArgs st;
    study->add_option("--config", st.config, "Study file")->required();
    study->add_option("--out", st.out, "Output directory")->required();
    study->add_option("--jobs", st.jobs, "Cells solved concurrently")->capture_default_str();
    study->add_option("--span", st.span, "Override the configured span");
    study->add_option("--gap", st.gap, "Relative optimality gap")->capture_default_str();
    study->add_option("--seed", seed, "Recorded in the manifest");

    auto* region = app.add_subcommand("region", "Nadir-feasible H·R boundary against D·P^D");
    RegionArgs ra;
    region->add_option("--loss", ra.losses, "Loss sizes, MW")->required()->delimiter(',');
    region->add_option("--t-d", ra.t_d, "PFR delivery time, s")->capture_default_str();
    region->add_option("--df-max", ra.df_max, "Nadir limit, Hz")->capture_default_str();
    region->add_option("--damping-max", ra.damping_max, "Largest D·P^D, MW/Hz")->capture_default_str();
    region->add_option("--points", ra.points, "Samples per curve")->capture_default_str();
    region->add_option("--out", ra.out, "Output directory (default: print)");
    region->add_option("--seed", seed, "Recorded in the manifest");

    auto* rerun = app.add_subcommand("rerun", "Repeat the run recorded in a manifest");
    std::string manifest_path;
    std::string rerun_out;
    rerun->add_option("manifest", manifest_path, "manifest.json")->required();
    rerun->add_option("--out", rerun_out, "Write to this directory instead");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion& e) {
        out << kVersion << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        if (app.get_subcommands().size() == 1) {
            err << app.get_subcommands().front()->help();
        }
        return reporter.fail(kExitValidation, e.what());
    }

    RunManifest manifest;
    manifest.seed = seed;
    try {
        if (*validate) {
            return cmd_validate(paths, reporter);
        }
        if (*solve) {
            manifest.command = "solve";
            manifest.inputs["system"] = sa.system;
            if (!sa.scenarios.empty()) manifest.inputs["scenarios"] = sa.scenarios;
            manifest.overrides = given_overrides(*solve, {"system", "scenarios", "out", "seed"});
            return cmd_solve(sa, manifest, reporter);
        }
        if (*study) {
            manifest.command = "study";
            manifest.inputs["config"] = st.config;
            manifest.overrides = given_overrides(*study, {"config", "out", "seed"});
            return cmd_study(st, manifest, reporter);
        }
        if (*region) {
            manifest.command = "region";
            manifest.overrides = given_overrides(*region, {"out", "seed"});
            return cmd_region(ra, manifest, reporter);
        }
        if (*rerun) {
            RunManifest m = RunManifest::from_json(read_text(manifest_path));
            if (m.command == "rerun") throw sysmodel::LoadError("manifest: cannot replay a rerun");
            if (!rerun_out.empty()) m.output_dir = rerun_out;
            return run(m.arguments(), out, err);
        }
    } catch (const sysmodel::LoadError& e) {
        return reporter.fail(kExitValidation, e.what());
    } catch (const std::exception& e) {
        return reporter.fail(kExitSolver, e.what());
    }
    return kExitValidation;
}

}  // namespace fsuc::cli
