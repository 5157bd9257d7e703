#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "fsuc/milp.hpp"
#include "oracles.hpp"

using namespace fsuc;
using namespace fsuc::milp;

namespace {

MilpModel two_variable_model() {
    MilpModel model;
    auto x = model.add_binary("x");
    auto y = model.add_continuous("y", 0.0, 4.0);
    model.add_row(LinearRow{{{x, 2.0}, {y, 1.0}}, Sense::kGreaterEqual, 3.0, "rocof[0]"});
    LinearExpr obj;
    obj.add(x, 5.0).add(y, 2.0);
    obj.constant = 1.5;
    model.set_objective(obj);
    return model;
}

void check_same_structure(const MilpModel& a, const MilpModel& b) {
    REQUIRE(a.num_variables() == b.num_variables());
    for (std::size_t j = 0; j < a.num_variables(); ++j) {
        CHECK(a.variables()[j].name == b.variables()[j].name);
        CHECK(a.variables()[j].kind == b.variables()[j].kind);
        CHECK(a.variables()[j].lower == b.variables()[j].lower);
        CHECK(a.variables()[j].upper == b.variables()[j].upper);
    }
    REQUIRE(a.rows().size() == b.rows().size());
    for (std::size_t i = 0; i < a.rows().size(); ++i) {
        const auto& ra = a.rows()[i];
        const auto& rb = b.rows()[i];
        CHECK(ra.label == rb.label);
        CHECK(ra.sense == rb.sense);
        CHECK(std::abs(ra.rhs - rb.rhs) <= 1e-12 * std::max(1.0, std::abs(ra.rhs)));
        REQUIRE(ra.coefs.size() == rb.coefs.size());
        for (const auto& [id, c] : ra.coefs) {
            REQUIRE(rb.coefs.count(id));
            CHECK(std::abs(rb.coefs.at(id) - c) <= 1e-12 * std::max(1.0, std::abs(c)));
        }
    }
    CHECK(a.objective().constant == doctest::Approx(b.objective().constant));
    CHECK(a.objective().terms.size() == b.objective().terms.size());
}

}  // namespace

TEST_CASE("one-variable export has a bounds line and the objective") {
    MilpModel model;
    auto z = model.add_continuous("z", -2.0, 3.0);
    LinearExpr obj;
    obj.add(z, 1.0);
    model.set_objective(obj);
    const auto text = export_model(model);
    CHECK(text.find("Minimize") != std::string::npos);
    CHECK(text.find("obj: 1 z") != std::string::npos);
    CHECK(text.find("-2 <= z <= 3") != std::string::npos);
    CHECK(text.find("End") != std::string::npos);
}

TEST_CASE("row labels pass through verbatim") {
    const auto text = export_model(two_variable_model());
    CHECK(text.find(" rocof[0]: 2 x + 1 y >= 3") != std::string::npos);
    CHECK(text.find("Binaries\n x\n") != std::string::npos);
}

TEST_CASE("export then import is structurally identical") {
    auto model = two_variable_model();
    check_same_structure(model, import_model(export_model(model)));
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        auto m = testing::random_milp(rng, {6, 10, 12});
        check_same_structure(m, import_model(export_model(m)));
    }
}

TEST_CASE("round trip preserves the optimal objective") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        auto m = testing::random_milp(rng, {6, 8, 10});
        auto a = solve(m);
        auto b = solve(import_model(export_model(m)));
        REQUIRE(a.status == b.status);
        if (a.status == SolveStatus::kOptimal) {
            CHECK(std::abs(a.objective - b.objective) <= 1e-9 * std::max(1.0, std::abs(a.objective)));
        }
    }
}

TEST_CASE("import accepts wrapped rows and one-sided bounds") {
    const char* text = R"(\ hand written
Minimize
 cost: 3 a + 2 b
   - c
Subject To
 c1: a + b
   => 2
 -a + c =< 1
Bounds
 a <= 4
 0 <= b <= 5
 c = 1
End
)";
    auto m = import_model(text);
    REQUIRE(m.num_variables() == 3);
    CHECK(m.variables()[0].name == "a");
    CHECK(m.variables()[0].upper == 4.0);
    CHECK(m.variables()[2].lower == 1.0);
    REQUIRE(m.rows().size() == 2);
    CHECK(m.rows()[0].label == "c1");
    CHECK(m.rows()[0].rhs == 2.0);
    CHECK(m.rows()[1].coefs.at(m.find("a")) == -1.0);
    auto sol = solve(m);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(sol.objective == doctest::Approx(2 * 2.0 - 1.0));
}

TEST_CASE("import errors carry line context") {
    CHECK_THROWS_AS(import_model("Maximize\n obj: x\nEnd\n"), ModelError);
    CHECK_THROWS_AS(import_model("Minimize\n obj: x\nSubject To\n r: x\nBounds\n 0 <= x <= 1\nEnd\n"), ModelError);
    try {
        import_model("Minimize\n obj: x\nEnd\n");
        FAIL("expected an unbounded-variable error");
    } catch (const ModelError& e) {
        CHECK(std::string(e.what()).find("'x'") != std::string::npos);
    }
}

TEST_CASE("solution import maps names to ids") {
    auto model = two_variable_model();
    auto sol = import_solution("status optimal\nobjective 8.5\nx 1\ny 1\n", model);
    REQUIRE(sol.values.size() == 2);
    CHECK(sol.values[0] == 1.0);
    CHECK(sol.values[1] == 1.0);
    CHECK(sol.objective == doctest::Approx(8.5));
    CHECK(sol.diagnostic.empty());
}

TEST_CASE("solution import validates names, status and rows") {
    auto model = two_variable_model();
    try {
        import_solution("status optimal\nobjective 0\nx 1\nq 2\n", model);
        FAIL("expected an unknown-variable error");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("'q'") != std::string::npos);
    }
    CHECK_THROWS_AS(import_solution("objective 1\nx 1\ny 1\n", model), SolverError);
    try {
        import_solution("status optimal\nobjective 2\nx 0\ny 1\n", model);
        FAIL("expected a feasibility rejection");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("rocof[0]") != std::string::npos);
    }
    auto off = import_solution("status optimal\nobjective 9\nx 1\ny 1\n", model);
    CHECK_FALSE(off.diagnostic.empty());
    auto none = import_solution("status infeasible\n", model);
    CHECK(none.status == SolveStatus::kInfeasible);
}

TEST_CASE("exported solutions import back") {
    auto model = two_variable_model();
    auto sol = solve(model);
    auto again = import_solution(export_solution(model, sol), model);
    CHECK(again.objective == doctest::Approx(sol.objective));
    CHECK(again.values == sol.values);
}

TEST_CASE("external solver command runs through files") {
    const auto dir = std::filesystem::temp_directory_path() / "fsuc_external_test";
    std::filesystem::create_directories(dir);
    // A stand-in solver that always reports x = 1, y = 1.
    const auto script = dir / "fake_solver.sh";
    {
        std::ofstream out(script);
        out << "#!/bin/sh\ntest -s \"$1\" || exit 4\nprintf 'status optimal\\nobjective 8.5\\nx 1\\ny 1\\n' > \"$2\"\n";
    }
    std::filesystem::permissions(script, std::filesystem::perms::owner_all);
    auto model = two_variable_model();
    auto sol = solve_external(model, script.string(), (dir / "model").string());
    CHECK(sol.objective == doctest::Approx(8.5));
    CHECK(std::filesystem::exists(dir / "model.lp"));
    CHECK_THROWS_AS(solve_external(model, "false", (dir / "model").string()), SolverError);
    std::filesystem::remove_all(dir);
}
