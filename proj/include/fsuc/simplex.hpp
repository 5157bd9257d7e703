#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fsuc/milp.hpp"

namespace fsuc::milp {

/// LP in row-bounded form: min c'x + c0 s.t. row_lo <= Ax <= row_hi,
/// col_lo <= x <= col_hi. Column bounds must be finite.
struct LpData {
    int num_rows = 0;
    int num_cols = 0;
    std::vector<std::vector<std::pair<int, double>>> row_entries;
    std::vector<double> cost;
    std::vector<double> col_lo;
    std::vector<double> col_hi;
    std::vector<double> row_lo;
    std::vector<double> row_hi;
    double cost_constant = 0.0;
};

LpData make_lp_data(const MilpModel& model);

enum class VarStatus : std::uint8_t { kBasic, kAtLower, kAtUpper };

struct Basis {
    std::vector<int> basic_of_row;
    std::vector<VarStatus> status;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded, kIterationLimit };

struct SimplexTolerances {
    double primal = 1e-9;
    double dual = 1e-9;
    double pivot = 1e-9;
    int refactor_interval = 64;
    int degenerate_before_bland = 60;
};

/// Dense-tableau bounded-variable simplex. Rows are equilibrated internally
/// and each row i gets a logical variable s_i = a_i'x bounded by the row
/// limits, giving the system [A | -I] (x, s) = 0. Column values are always
/// reported unscaled.
class SimplexKernel {
public:
    explicit SimplexKernel(std::shared_ptr<const LpData> lp, SimplexTolerances tol = {});

    /// Changes bounds of a structural column. A nonbasic column keeps its
    /// status and moves with its bound; basic values follow.
    void set_column_bounds(int col, double lo, double hi);

    /// Picks the algorithm for the current basis: primal phase 2 if primal
    /// feasible, dual if the basis can be made dual feasible by bound flips,
    /// otherwise primal phase 1.
    LpStatus solve();
    LpStatus solve_primal();
    LpStatus solve_dual();

    void reset_to_slack_basis();
    /// Rebuilds the tableau for `basis` by fresh elimination. Columns that
    /// cannot be pivoted in are left nonbasic at their nearest bound.
    void load_basis(const Basis& basis);
    Basis basis() const;

    double objective() const;
    std::vector<double> column_values() const;
    double column_value(int col) const { return x_[col]; }
    double primal_infeasibility() const;

    std::int64_t iterations() const { return iterations_; }
    void set_iteration_limit(std::int64_t limit) { iteration_limit_ = limit; }

    int num_rows() const { return m_; }
    int num_cols() const { return n_; }

private:
    double& t(int r, int j) { return tab_[static_cast<std::size_t>(r) * stride_ + j]; }
    double t(int r, int j) const { return tab_[static_cast<std::size_t>(r) * stride_ + j]; }

    void build_slack_tableau();
    void pivot(int r, int q);
    void refactor();
    /// Largest |a_i'x - s_i| over rows, in scaled row units.
    double row_residual() const;
    void recompute_basic_values();
    void recompute_reduced_costs();
    bool make_dual_feasible();
    double lower(int j) const { return lo_[j]; }
    double upper(int j) const { return hi_[j]; }

    std::shared_ptr<const LpData> lp_;
    SimplexTolerances tol_;
    int m_ = 0;
    int n_ = 0;
    int total_ = 0;
    std::size_t stride_ = 0;
    std::vector<double> row_scale_;
    std::vector<double> tab_;
    std::vector<double> cost_;
    std::vector<double> lo_;
    std::vector<double> hi_;
    std::vector<double> x_;
    std::vector<double> d_;
    std::vector<int> basic_of_row_;
    std::vector<int> row_of_var_;
    std::vector<VarStatus> status_;
    std::vector<int> scratch_nz_;
    std::int64_t iterations_ = 0;
    std::int64_t iteration_limit_ = 1000000;
    int pivots_since_refactor_ = 0;
};

}  // namespace fsuc::milp
