#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fsuc/sysmodel.hpp"
#include "json.hpp"

namespace fsuc::sysmodel {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return fallback;
    }
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw LoadError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw LoadError(where + ": missing required field '" + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw LoadError(where + "." + key + ": " + e.what());
    }
}

GeneratorSpec parse_generator(const json& g, std::size_t index) {
    if (!g.is_object()) {
        throw LoadError("generators[" + std::to_string(index) + "]: expected an object");
    }
    GeneratorSpec spec;
    const std::string where = "generators[" + std::to_string(index) + "]";
    spec.id = require<std::string>(g, "id", where);
    const std::string at = "generators[" + spec.id + "]";
    try {
        spec.technology = parse_technology(require<std::string>(g, "technology", at));
    } catch (const ValidationError& e) {
        throw LoadError(at + ".technology: " + e.what());
    }
    spec.p_max = require<double>(g, "p_max", at);
    spec.p_min = get_or<double>(g, "p_min", 0.0, at);
    spec.inertia_const = get_or<double>(g, "inertia_const", 0.0, at);
    spec.marginal_cost = get_or<double>(g, "marginal_cost", 0.0, at);
    spec.no_load_cost = get_or<double>(g, "no_load_cost", 0.0, at);
    spec.startup_cost = get_or<double>(g, "startup_cost", 0.0, at);
    spec.min_up = get_or<int>(g, "min_up", 1, at);
    spec.min_down = get_or<int>(g, "min_down", 1, at);
    spec.pfr_max = get_or<double>(g, "pfr_max", 0.0, at);
    spec.emissions_rate = get_or<double>(g, "emissions_rate", 0.0, at);
    spec.deloadable = get_or<bool>(g, "deloadable", false, at);
    spec.max_deload_fraction = get_or<double>(g, "max_deload_fraction", 0.0, at);
    spec.must_run = get_or<bool>(g, "must_run", false, at);
    spec.initial_on = get_or<bool>(g, "initial_on", spec.must_run, at);
    spec.initial_periods = get_or<int>(g, "initial_periods", 1000, at);
    spec.loss_source = get_or<bool>(g, "loss_source", true, at);
    return spec;
}

json generator_json(const GeneratorSpec& g) {
    return json{{"id", g.id},
                {"technology", technology_name(g.technology)},
                {"p_max", g.p_max},
                {"p_min", g.p_min},
                {"inertia_const", g.inertia_const},
                {"marginal_cost", g.marginal_cost},
                {"no_load_cost", g.no_load_cost},
                {"startup_cost", g.startup_cost},
                {"min_up", g.min_up},
                {"min_down", g.min_down},
                {"pfr_max", g.pfr_max},
                {"emissions_rate", g.emissions_rate},
                {"deloadable", g.deloadable},
                {"max_deload_fraction", g.max_deload_fraction},
                {"must_run", g.must_run},
                {"initial_on", g.initial_on},
                {"initial_periods", g.initial_periods},
                {"loss_source", g.loss_source}};
}

void check(bool ok, const std::string& field, const std::string& what) {
    if (!ok) {
        throw ValidationError(field, what);
    }
}

void validate_generator(const GeneratorSpec& g) {
    const std::string at = "generators[" + g.id + "]";
    check(!g.id.empty(), "generators[]", "empty id");
    check(std::isfinite(g.p_max) && std::isfinite(g.p_min), at, "non-finite rating");
    check(g.p_min >= 0.0, at + ".p_min", "negative minimum output");
    check(g.p_min <= g.p_max, at + ".p_min", "p_min exceeds p_max");
    check(g.p_max > 0.0, at + ".p_max", "rating must be positive");
    check(g.inertia_const >= 0.0, at + ".inertia_const", "negative inertia constant");
    check(g.pfr_max >= 0.0, at + ".pfr_max", "negative PFR capability");
    check(g.marginal_cost >= 0.0, at + ".marginal_cost", "negative cost");
    check(g.no_load_cost >= 0.0, at + ".no_load_cost", "negative cost");
    check(g.startup_cost >= 0.0, at + ".startup_cost", "negative cost");
    check(g.emissions_rate >= 0.0, at + ".emissions_rate", "negative emissions rate");
    check(g.min_up >= 1, at + ".min_up", "minimum up time must be at least one period");
    check(g.min_down >= 1, at + ".min_down", "minimum down time must be at least one period");
    check(g.initial_periods >= 0, at + ".initial_periods", "negative initial state duration");
    if (g.technology == Technology::kWind) {
        check(g.inertia_const == 0.0, at + ".inertia_const", "non-synchronous unit with inertia");
        check(g.pfr_max == 0.0, at + ".pfr_max", "non-synchronous unit with PFR");
        check(!g.deloadable, at + ".deloadable", "non-synchronous unit cannot be deloadable");
        check(!g.must_run, at + ".must_run", "non-synchronous unit cannot be must-run");
    }
    check(g.max_deload_fraction >= 0.0 && g.max_deload_fraction <= 1.0, at + ".max_deload_fraction",
          "must lie in [0, 1]");
    if (g.deloadable) {
        check(g.max_deload_fraction > 0.0, at + ".max_deload_fraction", "deloadable unit needs a positive fraction");
    }
    check(g.pfr_max <= g.p_max, at + ".pfr_max", "PFR capability exceeds rating");
}

}  // namespace

const char* technology_name(Technology tech) {
    switch (tech) {
        case Technology::kNuclear:
            return "nuclear";
        case Technology::kThermal:
            return "thermal";
        case Technology::kWind:
            return "wind";
    }
    return "?";
}

Technology parse_technology(const std::string& text) {
    if (text == "nuclear") return Technology::kNuclear;
    if (text == "thermal") return Technology::kThermal;
    if (text == "wind") return Technology::kWind;
    throw ValidationError("technology", "unknown technology '" + text + "'");
}

std::size_t SystemSpec::largest_unit_index() const {
    // Units flagged as non-credible losses (aggregated blocks) never set the largest loss.
    bool any_source = false;
    for (const auto& g : generators) any_source = any_source || (g.synchronous() && g.loss_source);
    std::size_t best = generators.size();
    for (std::size_t i = 0; i < generators.size(); ++i) {
        const auto& g = generators[i];
        if (!g.synchronous() || (any_source && !g.loss_source)) {
            continue;
        }
        if (best == generators.size()) {
            best = i;
            continue;
        }
        const auto& b = generators[best];
        if (g.p_max > b.p_max || (g.p_max == b.p_max && g.inertia_const > b.inertia_const) ||
            (g.p_max == b.p_max && g.inertia_const == b.inertia_const && g.id < b.id)) {
            best = i;
        }
    }
    if (best == generators.size()) {
        throw ValidationError("generators", "no synchronous unit in the fleet");
    }
    return best;
}

const GeneratorSpec& SystemSpec::generator(const std::string& id) const {
    for (const auto& g : generators) {
        if (g.id == id) {
            return g;
        }
    }
    throw ValidationError("generators", "unknown unit '" + id + "'");
}

std::vector<double> default_nadir_segments(double rating, double deload_fraction, int count) {
    if (deload_fraction <= 0.0 || count <= 1) {
        return {rating};
    }
    const double low = rating * (1.0 - deload_fraction);
    std::vector<double> grid;
    for (int i = 0; i < count; ++i) {
        grid.push_back(i + 1 == count ? rating : low + (rating - low) * i / (count - 1));
    }
    return grid;
}

void finalize_system(SystemSpec& system) {
    check(!system.generators.empty(), "generators", "at least one generator is required");
    for (std::size_t i = 0; i < system.generators.size(); ++i) {
        validate_generator(system.generators[i]);
        for (std::size_t k = 0; k < i; ++k) {
            check(system.generators[k].id != system.generators[i].id, "generators[" + system.generators[i].id + "]",
                  "duplicate id");
        }
    }
    check(!system.demand.empty(), "demand", "demand profile is empty");
    for (std::size_t t = 0; t < system.demand.size(); ++t) {
        check(std::isfinite(system.demand[t]) && system.demand[t] > 0.0, "demand[" + std::to_string(t) + "]",
              "demand must be positive");
    }
    check(system.period_hours > 0.0, "period_hours", "must be positive");
    check(system.wind_capacity >= 0.0, "wind_capacity", "must be non-negative");

    auto& f = system.frequency;
    check(f.f0 > 0.0, "frequency.f0", "must be positive");
    check(f.df_max > 0.0, "frequency.df_max", "must be positive");
    check(f.df_ss_max > 0.0, "frequency.df_ss_max", "must be positive");
    check(f.df_ss_max <= f.df_max, "frequency.df_ss_max", "steady-state limit exceeds nadir limit");
    check(f.rocof_max > 0.0, "frequency.rocof_max", "must be positive");
    check(f.t_d > 0.0, "frequency.t_d", "must be positive");
    check(f.damping >= 0.0, "frequency.damping", "must be non-negative");
    check(f.governor_deadband == 0.0, "frequency.governor_deadband", "governor deadband is not modelled");

    const auto& largest = system.generators[system.largest_unit_index()];
    f.largest_unit_rating = largest.p_max;
    f.largest_unit_inertia = largest.inertia_const;
    f.largest_unit_id = largest.id;
    if (f.nadir_segments.empty()) {
        f.nadir_segments =
            default_nadir_segments(largest.p_max, largest.deloadable ? largest.max_deload_fraction : 0.0);
    }
    for (std::size_t i = 0; i < f.nadir_segments.size(); ++i) {
        check(f.nadir_segments[i] > 0.0, "frequency.nadir_segments", "segments must be positive");
        if (i > 0) {
            check(f.nadir_segments[i] > f.nadir_segments[i - 1], "frequency.nadir_segments",
                  "segments must be strictly increasing");
        }
    }
    check(f.nadir_segments.back() >= f.largest_unit_rating, "frequency.nadir_segments",
          "last segment must cover the largest unit rating");

    auto& sc = system.scenarios;
    if (!sc.empty()) {
        for (std::size_t i = 0; i < sc.levels.size(); ++i) {
            check(sc.levels[i] > 0.0 && sc.levels[i] < 1.0, "scenarios.levels", "levels must lie in (0, 1)");
            if (i > 0) {
                check(sc.levels[i] > sc.levels[i - 1], "scenarios.levels", "levels must be strictly increasing");
            }
        }
        check(sc.values.size() == system.demand.size(), "scenarios",
              "one row of quantiles per demand period is required");
        if (sc.realized.empty()) {
            // Without a realisation column, the quantile nearest the median is used.
            std::size_t mid = 0;
            for (std::size_t i = 1; i < sc.levels.size(); ++i) {
                if (std::abs(sc.levels[i] - 0.5) < std::abs(sc.levels[mid] - 0.5)) mid = i;
            }
            for (const auto& row : sc.values) sc.realized.push_back(row.at(mid));
        }
        check(sc.realized.size() == system.demand.size(), "scenarios.realized", "length differs from demand");
        const double tol = 1e-6;
        for (std::size_t t = 0; t < sc.values.size(); ++t) {
            check(sc.values[t].size() == sc.levels.size(), "scenarios[" + std::to_string(t) + "]",
                  "row width differs from the number of levels");
            auto row = sc.values[t];
            row.push_back(sc.realized[t]);
            for (double v : row) {
                const double wind = system.demand[t] - v;
                check(std::isfinite(v) && wind >= -tol && wind <= system.wind_capacity + tol,
                      "scenarios[" + std::to_string(t) + "]",
                      "net demand implies wind availability outside [0, wind_capacity]");
            }
            for (std::size_t i = 1; i < sc.values[t].size(); ++i) {
                check(sc.values[t][i] >= sc.values[t][i - 1], "scenarios[" + std::to_string(t) + "]",
                      "quantile values must be non-decreasing in level");
            }
        }
    }
}

SystemSpec parse_system(const std::string& text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw LoadError(std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) {
        throw LoadError("system file must contain an object");
    }
    SystemSpec system;
    system.name = get_or<std::string>(doc, "name", "", "system");
    system.period_hours = get_or<double>(doc, "period_hours", 1.0, "system");
    system.wind_capacity = get_or<double>(doc, "wind_capacity", 0.0, "system");

    const json freq = doc.value("frequency", json::object());
    auto& f = system.frequency;
    f.f0 = require<double>(freq, "f0", "frequency");
    f.df_max = require<double>(freq, "df_max", "frequency");
    f.df_ss_max = require<double>(freq, "df_ss_max", "frequency");
    f.rocof_max = require<double>(freq, "rocof_max", "frequency");
    f.t_d = require<double>(freq, "t_d", "frequency");
    f.damping = require<double>(freq, "damping", "frequency");
    f.nadir_segments = get_or<std::vector<double>>(freq, "nadir_segments", {}, "frequency");
    f.governor_deadband = get_or<double>(freq, "governor_deadband", 0.0, "frequency");

    const auto gens = doc.find("generators");
    if (gens == doc.end() || !gens->is_array()) {
        throw LoadError("missing 'generators' array");
    }
    for (std::size_t i = 0; i < gens->size(); ++i) {
        system.generators.push_back(parse_generator((*gens)[i], i));
    }
    // Wind records feed the aggregate wind resource when no explicit capacity is given.
    if (!doc.contains("wind_capacity")) {
        for (const auto& g : system.generators) {
            if (!g.synchronous()) system.wind_capacity += g.p_max;
        }
    }

    const auto dem = doc.find("demand");
    if (dem == doc.end()) {
        throw LoadError("missing 'demand' section");
    }
    if (dem->is_array()) {
        system.demand = dem->get<std::vector<double>>();
    } else {
        system.demand = require<std::vector<double>>(*dem, "values", "demand");
    }

    const auto sc = doc.find("scenarios");
    if (sc != doc.end() && !sc->is_null()) {
        if (sc->contains("file")) {
            auto file = std::filesystem::path(require<std::string>(*sc, "file", "scenarios"));
            if (file.is_relative()) file = base_dir / file;
            system.scenarios = load_scenarios(file);
        } else {
            system.scenarios.levels = require<std::vector<double>>(*sc, "levels", "scenarios");
            system.scenarios.values = require<std::vector<std::vector<double>>>(*sc, "net_demand", "scenarios");
            system.scenarios.realized = get_or<std::vector<double>>(*sc, "realized", {}, "scenarios");
        }
    }
    finalize_system(system);
    return system;
}

SystemSpec load_system(const std::filesystem::path& path) {
    return parse_system(read_file(path), path.parent_path());
}

std::string serialize_system(const SystemSpec& system) {
    json doc;
    doc["name"] = system.name;
    doc["period_hours"] = system.period_hours;
    doc["wind_capacity"] = system.wind_capacity;
    const auto& f = system.frequency;
    doc["frequency"] = json{{"f0", f.f0},
                            {"df_max", f.df_max},
                            {"df_ss_max", f.df_ss_max},
                            {"rocof_max", f.rocof_max},
                            {"t_d", f.t_d},
                            {"damping", f.damping},
                            {"nadir_segments", f.nadir_segments},
                            {"governor_deadband", f.governor_deadband}};
    json gens = json::array();
    for (const auto& g : system.generators) gens.push_back(generator_json(g));
    doc["generators"] = gens;
    doc["demand"] = json{{"values", system.demand}};
    if (!system.scenarios.empty()) {
        doc["scenarios"] = json{{"levels", system.scenarios.levels},
                                {"net_demand", system.scenarios.values},
                                {"realized", system.scenarios.realized}};
    }
    return doc.dump(2);
}

SystemSpec with_wind_capacity(const SystemSpec& system, double wind_capacity) {
    if (wind_capacity < 0.0) {
        throw ValidationError("wind_capacity", "must be non-negative");
    }
    SystemSpec out = system;
    out.wind_capacity = wind_capacity;
    if (system.scenarios.empty()) {
        return out;
    }
    if (system.wind_capacity <= 0.0) {
        throw ValidationError("wind_capacity", "cannot rescale scenarios of a system without wind");
    }
    const double ratio = wind_capacity / system.wind_capacity;
    auto rescale = [&](double net, std::size_t t) {
        const double wind = std::max(0.0, system.demand[t] - net);
        return system.demand[t] - wind * ratio;
    };
    for (std::size_t t = 0; t < out.scenarios.values.size(); ++t) {
        for (auto& v : out.scenarios.values[t]) v = rescale(v, t);
        out.scenarios.realized[t] = rescale(out.scenarios.realized[t], t);
    }
    return out;
}

}  // namespace fsuc::sysmodel
