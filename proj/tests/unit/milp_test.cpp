#include <cmath>
#include <random>

#include "doctest.h"
#include "fsuc/milp.hpp"
#include "fsuc/simplex.hpp"
#include "oracles.hpp"

using namespace fsuc;
using namespace fsuc::milp;

namespace {

bool rel_close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("binary knapsack picks one of two items") {
    MilpModel model;
    auto x = model.add_binary("x");
    auto y = model.add_binary("y");
    model.add_row(LinearRow{{{x, 1.0}, {y, 1.0}}, Sense::kLessEqual, 1.0, "cap"});
    LinearExpr obj;
    obj.add(x, -1.0).add(y, -1.0);
    model.set_objective(obj);
    auto sol = solve(model);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(sol.objective == doctest::Approx(-1.0));
    CHECK(sol.value(x) + sol.value(y) == doctest::Approx(1.0));
}

TEST_CASE("pure LP settles on the binding bound row") {
    MilpModel model;
    auto x = model.add_continuous("x", 0.0, 100.0);
    model.add_row(LinearRow{{{x, 1.0}}, Sense::kGreaterEqual, 3.0, "lo"});
    model.add_row(LinearRow{{{x, 1.0}}, Sense::kLessEqual, 10.0, "hi"});
    LinearExpr obj;
    obj.add(x, 1.0);
    model.set_objective(obj);
    auto sol = solve(model);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(sol.value(x) == doctest::Approx(3.0));
    auto ex = solve_exhaustive(model);
    CHECK(ex.status == SolveStatus::kOptimal);
    CHECK(ex.objective == doctest::Approx(3.0));
}

TEST_CASE("infeasible model is reported by both solvers") {
    MilpModel model;
    auto x = model.add_binary("x");
    auto y = model.add_continuous("y", 0.0, 1.0);
    model.add_row(LinearRow{{{x, 1.0}, {y, 1.0}}, Sense::kGreaterEqual, 2.5, "too_much"});
    CHECK(solve(model).status == SolveStatus::kInfeasible);
    CHECK(solve_exhaustive(model).status == SolveStatus::kInfeasible);
}

TEST_CASE("model validation rejects bad input") {
    MilpModel model;
    auto x = model.add_variable("x", VarKind::kBinary, 0.0, 2.0);
    (void)x;
    CHECK_THROWS_AS(model.validate(), ModelError);
    MilpModel inf;
    inf.add_continuous("y", 0.0, std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(inf.validate(), ModelError);
    MilpModel dangling;
    dangling.add_continuous("z", 0.0, 1.0);
    dangling.add_row(LinearRow{{{VarId{7}, 1.0}}, Sense::kEqual, 0.0, "dangling"});
    CHECK_THROWS_AS(dangling.validate(), ModelError);
}

TEST_CASE("exhaustive enumeration refuses more than 20 binaries") {
    MilpModel model;
    for (int i = 0; i < 21; ++i) model.add_binary("b" + std::to_string(i));
    CHECK_THROWS_AS(solve_exhaustive(model), SolverError);
}

TEST_CASE("simplex kernel matches vertex enumeration on small LPs") {
    std::mt19937_64 rng(20240611);
    int optimal = 0;
    for (int trial = 0; trial < 300; ++trial) {
        auto model = testing::random_milp(rng, {0, 4, 5});
        auto expected = testing::vertex_enumeration_lp(model);
        auto lp = std::make_shared<const LpData>(make_lp_data(model));
        SimplexKernel primal(lp);
        auto ps = primal.solve_primal();
        SimplexKernel dual(lp);
        auto ds = dual.solve_dual();
        if (!expected) {
            CHECK(ps == LpStatus::kInfeasible);
            CHECK(ds == LpStatus::kInfeasible);
            continue;
        }
        ++optimal;
        REQUIRE(ps == LpStatus::kOptimal);
        REQUIRE(ds == LpStatus::kOptimal);
        CHECK(rel_close(primal.objective(), *expected, 1e-7));
        CHECK(rel_close(dual.objective(), *expected, 1e-7));
        CHECK(check_feasibility(model, primal.column_values()).empty());
    }
    CHECK(optimal > 100);
}

TEST_CASE("warm-started bound changes agree with cold solves") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        auto model = testing::random_milp(rng, {0, 8, 10});
        auto lp = std::make_shared<const LpData>(make_lp_data(model));
        SimplexKernel warm(lp);
        if (warm.solve_primal() != LpStatus::kOptimal) continue;
        const int col = trial % lp->num_cols;
        const double mid = 0.5 * (lp->col_lo[col] + lp->col_hi[col]);
        warm.set_column_bounds(col, lp->col_lo[col], mid);
        auto ws = warm.solve_dual();
        auto shrunk = model;
        shrunk.set_bounds(VarId{static_cast<std::uint32_t>(col)}, lp->col_lo[col], mid);
        SimplexKernel cold(std::make_shared<const LpData>(make_lp_data(shrunk)));
        auto cs = cold.solve_primal();
        REQUIRE(ws == cs);
        if (cs == LpStatus::kOptimal) {
            CHECK(rel_close(warm.objective(), cold.objective(), 1e-8));
        }
    }
}

TEST_CASE("branch and bound agrees with enumeration on 8-binary models") {
    std::mt19937_64 rng(88);
    for (int trial = 0; trial < 60; ++trial) {
        MilpModel model;
        do {
            model = testing::random_milp(rng, {8, 6, 10});
        } while (model.num_binaries() != 8 && model.num_binaries() < 6);
        auto bb = solve(model);
        auto ex = solve_exhaustive(model);
        REQUIRE(bb.status == ex.status);
        if (bb.status == SolveStatus::kOptimal) {
            CHECK(rel_close(bb.objective, ex.objective, 1e-6));
            CHECK(bb.root_bound <= bb.objective + 1e-7 * std::max(1.0, std::abs(bb.objective)));
            CHECK(check_feasibility(model, bb.values).empty());
        }
    }
}

TEST_CASE("results do not depend on worker count") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 20; ++trial) {
        auto model = testing::random_milp(rng, {10, 12, 14});
        SolveOptions one;
        one.node_batch = 4;
        one.threads = 1;
        SolveOptions four = one;
        four.threads = 4;
        auto a = solve(model, one);
        auto b = solve(model, four);
        REQUIRE(a.status == b.status);
        CHECK(a.objective == b.objective);
        CHECK(a.nodes == b.nodes);
    }
}

TEST_CASE("feasibility check normalises rows and reports labels") {
    MilpModel model;
    auto x = model.add_continuous("x", 0.0, 10.0);
    model.add_row(LinearRow{{{x, 1e6}}, Sense::kLessEqual, 5e6, "big"});
    CHECK(check_feasibility(model, {5.0}).empty());
    auto bad = check_feasibility(model, {5.1});
    REQUIRE(bad.size() == 1);
    CHECK(bad[0].label == "big");
    CHECK(bad[0].violation == doctest::Approx(0.1));
}

namespace {

// First-stage binaries f linked to `blocks` independent random blocks; each
// block's rows may also reference the first stage.
MilpModel two_stage_model(std::mt19937_64& rng, int first, int blocks) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> coef(-6, 6);
    MilpModel model;
    LinearExpr obj;
    std::vector<VarId> f;
    for (int i = 0; i < first; ++i) {
        f.push_back(model.add_binary("f" + std::to_string(i)));
        obj.add(f.back(), coef(rng));
    }
    for (int b = 0; b < blocks; ++b) {
        std::vector<VarId> own;
        std::vector<double> anchor;
        const std::string tag = std::to_string(b);
        for (int k = 0; k < 2; ++k) {
            own.push_back(model.add_binary("y" + tag + "_" + std::to_string(k)));
            anchor.push_back(unit(rng) < 0.5 ? 0.0 : 1.0);
        }
        for (int k = 0; k < 3; ++k) {
            own.push_back(model.add_continuous("c" + tag + "_" + std::to_string(k), 0.0, 5.0));
            anchor.push_back(5.0 * unit(rng));
        }
        for (auto v : own) obj.add(v, coef(rng));
        for (int r = 0; r < 3; ++r) {
            LinearRow row;
            row.label = "r" + tag + "_" + std::to_string(r);
            double act = 0.0;
            for (std::size_t k = 0; k < own.size(); ++k) {
                const double c = coef(rng);
                if (c != 0.0) row.coefs[own[k]] = c;
                act += c * anchor[k];
            }
            const double cf = coef(rng);
            const auto link = f[static_cast<std::size_t>(r) % f.size()];
            if (cf != 0.0) row.coefs[link] = cf;
            // Feasible for the anchor with the linked binary at zero.
            row.sense = Sense::kLessEqual;
            row.rhs = act + std::max(0.0, cf) + unit(rng);
            model.add_row(std::move(row));
        }
    }
    model.set_objective(obj);
    return model;
}

}  // namespace

TEST_CASE("component solve matches the monolithic solve") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 40; ++trial) {
        auto model = two_stage_model(rng, 3, 3);
        // Fix the first stage so that the blocks separate.
        for (int i = 0; i < 3; ++i) {
            const double v = (trial >> i) & 1;
            model.set_bounds(VarId{static_cast<std::uint32_t>(i)}, v, v);
        }
        auto whole = solve(model);
        auto parts = solve_by_components(model);
        REQUIRE(whole.status == parts.status);
        if (whole.status == SolveStatus::kOptimal) {
            CHECK(rel_close(parts.objective, whole.objective, 1e-6));
            CHECK(check_feasibility(model, parts.values).empty());
            CHECK(parts.best_bound <= parts.objective);
        }
    }
}

TEST_CASE("staged branching agrees with enumeration on two-stage models") {
    std::mt19937_64 rng(2718);
    int optimal = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto model = two_stage_model(rng, 4, 3);
        std::vector<VarId> first{VarId{0}, VarId{1}, VarId{2}, VarId{3}};
        auto staged = solve_staged(model, first);
        auto ex = solve_exhaustive(model);
        REQUIRE(staged.status == ex.status);
        if (ex.status == SolveStatus::kOptimal) {
            ++optimal;
            CHECK(rel_close(staged.objective, ex.objective, 1e-6));
            CHECK(check_feasibility(model, staged.values).empty());
            CHECK(staged.root_bound <= staged.objective + 1e-7 * std::max(1.0, std::abs(staged.objective)));
        }
    }
    CHECK(optimal > 20);
}

TEST_CASE("staged branching rejects continuous branching variables") {
    MilpModel model;
    auto c = model.add_continuous("c", 0.0, 1.0);
    CHECK_THROWS_AS(solve_staged(model, {c}), ModelError);
}

TEST_CASE("degenerate LPs terminate") {
    // Many redundant rows through one vertex invite cycling.
    MilpModel model;
    std::vector<VarId> x;
    for (int j = 0; j < 6; ++j) x.push_back(model.add_continuous("x" + std::to_string(j), 0.0, 1.0));
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> coef(-3, 3);
    for (int r = 0; r < 40; ++r) {
        LinearRow row;
        row.label = "d" + std::to_string(r);
        for (auto v : x) {
            const int c = coef(rng);
            if (c) row.coefs[v] = c;
        }
        row.sense = Sense::kLessEqual;
        row.rhs = 0.0;
        model.add_row(std::move(row));
    }
    LinearExpr obj;
    for (auto v : x) obj.add(v, coef(rng));
    model.set_objective(obj);
    SolveOptions opts;
    opts.iteration_limit = 100000;
    auto sol = solve(model, opts);
    CHECK(sol.status == SolveStatus::kOptimal);
    auto expected = testing::vertex_enumeration_lp(model);
    REQUIRE(expected);
    CHECK(rel_close(sol.objective, *expected, 1e-7));
}
