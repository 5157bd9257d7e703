#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "doctest.h"
#include "fsuc/sysmodel.hpp"

using namespace fsuc::sysmodel;

namespace {

const char* kTwoUnits = R"({
  "name": "pair",
  "period_hours": 1,
  "wind_capacity": 500,
  "frequency": {"f0": 50, "df_max": 0.8, "df_ss_max": 0.5, "rocof_max": 0.5, "t_d": 10, "damping": 0.01},
  "generators": [
    {"id": "A", "technology": "nuclear", "p_max": 1200, "p_min": 600, "inertia_const": 5,
     "marginal_cost": 10, "deloadable": true, "max_deload_fraction": 0.33},
    {"id": "B", "technology": "thermal", "p_max": 800, "p_min": 200, "inertia_const": 4,
     "marginal_cost": 50, "pfr_max": 100, "emissions_rate": 0.4}
  ],
  "demand": {"values": [1500, 1700]},
  "scenarios": {"levels": [0.25, 0.75], "net_demand": [[1200, 1400], [1300, 1600]]}
})";

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("two-unit file loads with the derived largest unit") {
    auto s = parse_system(kTwoUnits);
    CHECK(s.generators.size() == 2);
    CHECK(s.frequency.largest_unit_rating == 1200.0);
    CHECK(s.frequency.largest_unit_inertia == 5.0);
    CHECK(s.frequency.largest_unit_id == "A");
    REQUIRE(s.frequency.nadir_segments.size() == 10);
    CHECK(s.frequency.nadir_segments.front() == doctest::Approx(1200 * 0.67));
    CHECK(s.frequency.nadir_segments.back() == 1200.0);
    // No realised column: the median-nearest quantile is used.
    CHECK(s.scenarios.realized == std::vector<double>{1200, 1300});
}

TEST_CASE("invariant violations name the offending field") {
    try {
        parse_system(replace(kTwoUnits, "\"p_min\": 200", "\"p_min\": 900"));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "generators[B].p_min");
    }
    const std::string wind = replace(kTwoUnits, R"({"id": "B", "technology": "thermal")",
                                     R"({"id": "W", "technology": "wind", "p_max": 10, "inertia_const": 5}, {"id": "B", "technology": "thermal")");
    try {
        parse_system(wind);
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("non-synchronous unit with inertia") != std::string::npos);
        CHECK(e.field() == "generators[W].inertia_const");
    }
    CHECK_THROWS_AS(parse_system(replace(kTwoUnits, "\"damping\": 0.01", "\"damping\": -1")), ValidationError);
    CHECK_THROWS_AS(parse_system(replace(kTwoUnits, "[1500, 1700]", "[1500, 0]")), ValidationError);
    CHECK_THROWS_AS(parse_system(replace(kTwoUnits, "\"damping\": 0.01", "\"damping\": 0.01, \"governor_deadband\": 0.015")),
                    ValidationError);
    CHECK_THROWS_AS(parse_system(replace(kTwoUnits, "\"max_deload_fraction\": 0.33", "\"max_deload_fraction\": 0")),
                    ValidationError);
}

TEST_CASE("malformed input is a load error") {
    CHECK_THROWS_AS(parse_system("{not json"), LoadError);
    CHECK_THROWS_AS(parse_system(replace(kTwoUnits, "\"p_max\": 800", "\"p_max\": \"big\"")), LoadError);
    CHECK_THROWS_AS(load_system("/nonexistent/system.json"), LoadError);
}

TEST_CASE("largest unit ties break on inertia then id") {
    auto s = parse_system(kTwoUnits);
    s.generators[1].p_max = 1200;
    s.generators[1].inertia_const = 6;
    s.frequency.nadir_segments.clear();
    finalize_system(s);
    CHECK(s.frequency.largest_unit_id == "B");
    s.generators[1].inertia_const = 5;
    s.generators[1].id = "0B";
    finalize_system(s);
    CHECK(s.frequency.largest_unit_id == "0B");
}

TEST_CASE("serialisation round-trips") {
    auto s = parse_system(kTwoUnits);
    auto again = parse_system(serialize_system(s));
    CHECK(again == s);
    // Awkward binary fractions survive too.
    s.generators[0].marginal_cost = 0.1 + 0.2;
    s.frequency.t_d = 10.0 / 3.0;
    CHECK(parse_system(serialize_system(s)) == s);
}

TEST_CASE("scenario csv parses and round-trips") {
    auto d = parse_scenarios("# comment\n0.1, 0.5, 0.9, realized\n1,2,3,2.5\n4,5,6,5\n");
    CHECK(d.levels == std::vector<double>{0.1, 0.5, 0.9});
    CHECK(d.values[1] == std::vector<double>{4, 5, 6});
    CHECK(d.realized == std::vector<double>{2.5, 5});
    CHECK(parse_scenarios(serialize_scenarios(d)) == d);
    CHECK_THROWS_AS(parse_scenarios("0.1,0.5\n1,2,3\n"), LoadError);
    CHECK_THROWS_AS(parse_scenarios("0.5,0.1\n1,2\n"), ValidationError);
    CHECK_THROWS_AS(parse_scenarios("0.5\nx\n"), LoadError);
}

TEST_CASE("scenario file referenced from the system file resolves relative paths") {
    const auto dir = std::filesystem::temp_directory_path() / "fsuc_sysmodel_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "sc.csv") << "0.5,realized\n1300,1250\n1500,1550\n";
        std::string text = kTwoUnits;
        const auto pos = text.find("\"scenarios\"");
        text = text.substr(0, pos) + "\"scenarios\": {\"file\": \"sc.csv\"}\n}";
        std::ofstream(dir / "system.json") << text;
    }
    auto s = load_system(dir / "system.json");
    CHECK(s.scenarios.levels == std::vector<double>{0.5});
    CHECK(s.scenarios.realized == std::vector<double>{1250, 1550});
    std::filesystem::remove_all(dir);
}

TEST_CASE("branch probabilities") {
    auto seven = branch_probabilities({0.005, 0.1, 0.3, 0.5, 0.7, 0.9, 0.995});
    CHECK(seven.size() == 7);
    CHECK(std::accumulate(seven.begin(), seven.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(seven[0] == doctest::Approx(0.0525));
    CHECK(seven[3] == doctest::Approx(0.2));
    CHECK(branch_probabilities({0.5}) == std::vector<double>{1.0});
    auto two = branch_probabilities({0.25, 0.75});
    CHECK(two[0] == doctest::Approx(0.5));
    CHECK(two[1] == doctest::Approx(0.5));
    CHECK_THROWS_AS(branch_probabilities({}), ValidationError);
    CHECK_THROWS_AS(branch_probabilities({0.5, 0.3}), ValidationError);
    CHECK_THROWS_AS(branch_probabilities({0.0, 0.3}), ValidationError);
}

TEST_CASE("branch probabilities sum to one for random level sets") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1e-6, 1.0 - 1e-6);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> levels(1 + trial % 15);
        for (auto& l : levels) l = u(rng);
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        auto p = branch_probabilities(levels);
        double sum = 0.0;
        for (double v : p) {
            CHECK(v > 0.0);
            sum += v;
        }
        CHECK(std::abs(sum - 1.0) <= 1e-9);
    }
}

TEST_CASE("scenario tree takes the root value then branch quantiles") {
    auto s = parse_system(kTwoUnits);
    auto tree = build_scenario_tree(s.scenarios.levels, s.scenarios, 1250.0, 0, 2);
    REQUIRE(tree.branches.size() == 2);
    CHECK(tree.root_net_demand == 1250.0);
    CHECK(tree.branches[0].net_demand == std::vector<double>{1250, 1300});
    CHECK(tree.branches[1].net_demand == std::vector<double>{1250, 1600});
    CHECK_THROWS_AS(build_scenario_tree(s.scenarios.levels, s.scenarios, 0.0, 1, 2), ValidationError);
}

TEST_CASE("wind capacity rescaling goes through implied wind") {
    auto s = parse_system(kTwoUnits);
    auto doubled = with_wind_capacity(s, 1000);
    CHECK(doubled.wind_capacity == 1000);
    // Demand 1500, net 1200: wind 300 becomes 600.
    CHECK(doubled.scenarios.values[0][0] == doctest::Approx(900));
    CHECK(doubled.scenarios.realized[1] == doctest::Approx(1700 - 2 * 400));
    auto none = with_wind_capacity(s, 0);
    CHECK(none.scenarios.values[1][1] == doctest::Approx(1700));
}
