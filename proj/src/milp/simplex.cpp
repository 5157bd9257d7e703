#include "fsuc/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fsuc::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDropTol = 1e-14;
// Accumulated tableau drift tolerated before a final refactorisation.
constexpr double kResidualTol = 1e-10;
// A pivot that moves the objective by less than this (relative) counts as degenerate.
constexpr double kStallTol = 1e-12;

}  // namespace

LpData make_lp_data(const MilpModel& model) {
    LpData lp;
    lp.num_cols = static_cast<int>(model.num_variables());
    lp.num_rows = static_cast<int>(model.rows().size());
    lp.cost.assign(lp.num_cols, 0.0);
    for (const auto& [id, coef] : model.objective().terms) {
        lp.cost[id.index] += coef;
    }
    lp.cost_constant = model.objective().constant;
    for (const auto& var : model.variables()) {
        lp.col_lo.push_back(var.lower);
        lp.col_hi.push_back(var.upper);
    }
    lp.row_entries.reserve(lp.num_rows);
    for (const auto& row : model.rows()) {
        std::vector<std::pair<int, double>> entries;
        entries.reserve(row.coefs.size());
        for (const auto& [id, coef] : row.coefs) {
            if (coef != 0.0) {
                entries.emplace_back(static_cast<int>(id.index), coef);
            }
        }
        lp.row_entries.push_back(std::move(entries));
        switch (row.sense) {
            case Sense::kLessEqual:
                lp.row_lo.push_back(-kInf);
                lp.row_hi.push_back(row.rhs);
                break;
            case Sense::kGreaterEqual:
                lp.row_lo.push_back(row.rhs);
                lp.row_hi.push_back(kInf);
                break;
            case Sense::kEqual:
                lp.row_lo.push_back(row.rhs);
                lp.row_hi.push_back(row.rhs);
                break;
        }
    }
    return lp;
}

SimplexKernel::SimplexKernel(std::shared_ptr<const LpData> lp, SimplexTolerances tol)
    : lp_(std::move(lp)), tol_(tol) {
    m_ = lp_->num_rows;
    n_ = lp_->num_cols;
    total_ = n_ + m_;
    stride_ = static_cast<std::size_t>(total_);
    row_scale_.assign(m_, 1.0);
    for (int i = 0; i < m_; ++i) {
        double s = 0.0;
        for (const auto& [j, a] : lp_->row_entries[i]) {
            s = std::max(s, std::abs(a));
        }
        row_scale_[i] = s > 0.0 ? 1.0 / s : 1.0;
    }
    cost_.assign(total_, 0.0);
    lo_.assign(total_, 0.0);
    hi_.assign(total_, 0.0);
    for (int j = 0; j < n_; ++j) {
        cost_[j] = lp_->cost[j];
        lo_[j] = lp_->col_lo[j];
        hi_[j] = lp_->col_hi[j];
    }
    for (int i = 0; i < m_; ++i) {
        lo_[n_ + i] = lp_->row_lo[i] * row_scale_[i];
        hi_[n_ + i] = lp_->row_hi[i] * row_scale_[i];
    }
    x_.assign(total_, 0.0);
    d_.assign(total_, 0.0);
    status_.assign(total_, VarStatus::kAtLower);
    basic_of_row_.assign(m_, 0);
    row_of_var_.assign(total_, -1);
    scratch_nz_.reserve(total_);
    reset_to_slack_basis();
}

void SimplexKernel::build_slack_tableau() {
    tab_.assign(static_cast<std::size_t>(m_) * stride_, 0.0);
    std::fill(row_of_var_.begin(), row_of_var_.end(), -1);
    for (int i = 0; i < m_; ++i) {
        for (const auto& [j, a] : lp_->row_entries[i]) {
            t(i, j) = -a * row_scale_[i];
        }
        t(i, n_ + i) = 1.0;
        basic_of_row_[i] = n_ + i;
        row_of_var_[n_ + i] = i;
        status_[n_ + i] = VarStatus::kBasic;
    }
}

void SimplexKernel::reset_to_slack_basis() {
    for (int j = 0; j < n_; ++j) {
        status_[j] = cost_[j] >= 0.0 ? VarStatus::kAtLower : VarStatus::kAtUpper;
        x_[j] = status_[j] == VarStatus::kAtLower ? lo_[j] : hi_[j];
    }
    build_slack_tableau();
    recompute_basic_values();
    recompute_reduced_costs();
    pivots_since_refactor_ = 0;
}

void SimplexKernel::set_column_bounds(int col, double lo, double hi) {
    lo_[col] = lo;
    hi_[col] = hi;
    if (status_[col] == VarStatus::kBasic) {
        return;
    }
    double target = status_[col] == VarStatus::kAtUpper ? hi : lo;
    if (lo == hi) {
        status_[col] = VarStatus::kAtLower;
        target = lo;
    }
    const double delta = target - x_[col];
    if (delta == 0.0) {
        return;
    }
    x_[col] = target;
    for (int r = 0; r < m_; ++r) {
        const double a = t(r, col);
        if (a != 0.0) {
            x_[basic_of_row_[r]] -= a * delta;
        }
    }
}

void SimplexKernel::recompute_basic_values() {
    scratch_nz_.clear();
    for (int j = 0; j < total_; ++j) {
        if (status_[j] != VarStatus::kBasic && x_[j] != 0.0) {
            scratch_nz_.push_back(j);
        }
    }
    for (int r = 0; r < m_; ++r) {
        const double* row = &tab_[static_cast<std::size_t>(r) * stride_];
        double v = 0.0;
        for (int j : scratch_nz_) {
            v -= row[j] * x_[j];
        }
        x_[basic_of_row_[r]] = v;
    }
}

void SimplexKernel::recompute_reduced_costs() {
    d_ = cost_;
    for (int r = 0; r < m_; ++r) {
        const double cb = cost_[basic_of_row_[r]];
        if (cb == 0.0) {
            continue;
        }
        const double* row = &tab_[static_cast<std::size_t>(r) * stride_];
        for (int j = 0; j < total_; ++j) {
            d_[j] -= cb * row[j];
        }
    }
    for (int r = 0; r < m_; ++r) {
        d_[basic_of_row_[r]] = 0.0;
    }
}

void SimplexKernel::pivot(int r, int q) {
    double* pr = &tab_[static_cast<std::size_t>(r) * stride_];
    const double inv = 1.0 / pr[q];
    scratch_nz_.clear();
    for (int k = 0; k < total_; ++k) {
        if (pr[k] != 0.0) {
            pr[k] *= inv;
            if (std::abs(pr[k]) < kDropTol) {
                pr[k] = 0.0;
            } else {
                scratch_nz_.push_back(k);
            }
        }
    }
    pr[q] = 1.0;
    for (int i = 0; i < m_; ++i) {
        if (i == r) {
            continue;
        }
        double* pi = &tab_[static_cast<std::size_t>(i) * stride_];
        const double f = pi[q];
        if (f == 0.0) {
            continue;
        }
        for (int k : scratch_nz_) {
            const double v = pi[k] - f * pr[k];
            pi[k] = std::abs(v) < kDropTol ? 0.0 : v;
        }
        pi[q] = 0.0;
    }
    const double fd = d_[q];
    if (fd != 0.0) {
        for (int k : scratch_nz_) {
            d_[k] -= fd * pr[k];
        }
    }
    d_[q] = 0.0;
    const int leaving = basic_of_row_[r];
    row_of_var_[leaving] = -1;
    basic_of_row_[r] = q;
    row_of_var_[q] = r;
    status_[q] = VarStatus::kBasic;
    ++pivots_since_refactor_;
}

void SimplexKernel::refactor() {
    std::vector<char> in_target(total_, 0);
    std::vector<int> structural;
    for (int r = 0; r < m_; ++r) {
        in_target[basic_of_row_[r]] = 1;
        if (basic_of_row_[r] < n_) {
            structural.push_back(basic_of_row_[r]);
        }
    }
    std::vector<VarStatus> saved = status_;
    build_slack_tableau();
    std::sort(structural.begin(), structural.end());
    for (int q : structural) {
        int best_row = -1;
        double best = 0.0;
        for (int r = 0; r < m_; ++r) {
            const int b = basic_of_row_[r];
            if (b < n_ || in_target[b]) {
                continue;
            }
            const double a = std::abs(t(r, q));
            if (a > best) {
                best = a;
                best_row = r;
            }
        }
        if (best_row < 0 || best < 1e-11) {
            // Singular column: leave it nonbasic at the closer bound.
            in_target[q] = 0;
            status_[q] = std::abs(x_[q] - lo_[q]) <= std::abs(hi_[q] - x_[q]) ? VarStatus::kAtLower
                                                                              : VarStatus::kAtUpper;
            x_[q] = status_[q] == VarStatus::kAtLower ? lo_[q] : hi_[q];
            continue;
        }
        const int leaving = basic_of_row_[best_row];
        pivot(best_row, q);
        status_[leaving] = saved[leaving] == VarStatus::kBasic ? VarStatus::kAtLower : saved[leaving];
    }
    for (int j = 0; j < total_; ++j) {
        if (status_[j] == VarStatus::kAtLower) {
            x_[j] = std::isfinite(lo_[j]) ? lo_[j] : hi_[j];
            if (!std::isfinite(lo_[j])) status_[j] = VarStatus::kAtUpper;
        } else if (status_[j] == VarStatus::kAtUpper) {
            x_[j] = std::isfinite(hi_[j]) ? hi_[j] : lo_[j];
            if (!std::isfinite(hi_[j])) status_[j] = VarStatus::kAtLower;
        }
    }
    recompute_basic_values();
    recompute_reduced_costs();
    pivots_since_refactor_ = 0;
}

void SimplexKernel::load_basis(const Basis& basis) {
    status_ = basis.status;
    basic_of_row_ = basis.basic_of_row;
    refactor();
}

double SimplexKernel::row_residual() const {
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
        double activity = 0.0;
        for (const auto& [j, a] : lp_->row_entries[i]) {
            activity += a * x_[j];
        }
        worst = std::max(worst, std::abs(activity * row_scale_[i] - x_[n_ + i]));
    }
    return worst;
}

Basis SimplexKernel::basis() const { return Basis{basic_of_row_, status_}; }

double SimplexKernel::objective() const {
    double obj = lp_->cost_constant;
    for (int j = 0; j < n_; ++j) {
        obj += cost_[j] * x_[j];
    }
    return obj;
}

std::vector<double> SimplexKernel::column_values() const { return std::vector<double>(x_.begin(), x_.begin() + n_); }

double SimplexKernel::primal_infeasibility() const {
    double worst = 0.0;
    for (int r = 0; r < m_; ++r) {
        const int b = basic_of_row_[r];
        worst = std::max({worst, lo_[b] - x_[b], x_[b] - hi_[b]});
    }
    return worst;
}

bool SimplexKernel::make_dual_feasible() {
    for (int j = 0; j < total_; ++j) {
        if (status_[j] == VarStatus::kBasic || lo_[j] == hi_[j]) {
            continue;
        }
        const bool wrong_at_lower = status_[j] == VarStatus::kAtLower && d_[j] < -tol_.dual;
        const bool wrong_at_upper = status_[j] == VarStatus::kAtUpper && d_[j] > tol_.dual;
        if (!wrong_at_lower && !wrong_at_upper) {
            continue;
        }
        const double target = wrong_at_lower ? hi_[j] : lo_[j];
        if (!std::isfinite(target)) {
            return false;
        }
        const double delta = target - x_[j];
        x_[j] = target;
        status_[j] = wrong_at_lower ? VarStatus::kAtUpper : VarStatus::kAtLower;
        for (int r = 0; r < m_; ++r) {
            const double a = t(r, j);
            if (a != 0.0) {
                x_[basic_of_row_[r]] -= a * delta;
            }
        }
    }
    return true;
}

LpStatus SimplexKernel::solve() {
    if (primal_infeasibility() <= tol_.primal) {
        return solve_primal();
    }
    return solve_dual();
}

LpStatus SimplexKernel::solve_primal() {
    int degenerate = 0;
    int verify_rounds = 0;
    std::vector<double> phase1(total_, 0.0);
    struct Candidate {
        int row;
        double ratio;
        double bound;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(m_);
    while (true) {
        if (iterations_ >= iteration_limit_) {
            return LpStatus::kIterationLimit;
        }
        if (pivots_since_refactor_ >= tol_.refactor_interval) {
            refactor();
        }
        bool infeasible = false;
        for (int r = 0; r < m_; ++r) {
            const int b = basic_of_row_[r];
            if (x_[b] < lo_[b] - tol_.primal || x_[b] > hi_[b] + tol_.primal) {
                infeasible = true;
                break;
            }
        }
        const double* dd = d_.data();
        if (infeasible) {
            std::fill(phase1.begin(), phase1.end(), 0.0);
            for (int r = 0; r < m_; ++r) {
                const int b = basic_of_row_[r];
                double w = 0.0;
                if (x_[b] < lo_[b] - tol_.primal) {
                    w = -1.0;
                } else if (x_[b] > hi_[b] + tol_.primal) {
                    w = 1.0;
                } else {
                    continue;
                }
                const double* row = &tab_[static_cast<std::size_t>(r) * stride_];
                for (int j = 0; j < total_; ++j) {
                    if (row[j] != 0.0) {
                        phase1[j] -= w * row[j];
                    }
                }
            }
            dd = phase1.data();
        }

        const bool bland = degenerate > tol_.degenerate_before_bland;
        int q = -1;
        double best = 0.0;
        for (int j = 0; j < total_; ++j) {
            if (status_[j] == VarStatus::kBasic || lo_[j] == hi_[j]) {
                continue;
            }
            const double score = status_[j] == VarStatus::kAtLower ? -dd[j] : dd[j];
            if (score > tol_.dual) {
                if (bland) {
                    q = j;
                    break;
                }
                if (score > best) {
                    best = score;
                    q = j;
                }
            }
        }
        if (q < 0) {
            if (verify_rounds < 1 && pivots_since_refactor_ > 0 && row_residual() > kResidualTol) {
                ++verify_rounds;
                refactor();
                continue;
            }
            return infeasible ? LpStatus::kInfeasible : LpStatus::kOptimal;
        }
        verify_rounds = 0;
        const double dir = status_[q] == VarStatus::kAtLower ? 1.0 : -1.0;

        // Harris two-pass ratio test.
        candidates.clear();
        double theta_max = kInf;
        for (int r = 0; r < m_; ++r) {
            const double alpha = t(r, q);
            if (std::abs(alpha) < tol_.pivot) {
                continue;
            }
            const int b = basic_of_row_[r];
            const double xb = x_[b];
            const double delta = -alpha * dir;
            double bound;
            if (delta > 0.0) {
                if (infeasible && xb < lo_[b] - tol_.primal) {
                    bound = lo_[b];
                } else if (xb > hi_[b] + tol_.primal) {
                    continue;
                } else {
                    bound = hi_[b];
                }
                if (!std::isfinite(bound)) continue;
                theta_max = std::min(theta_max, (bound + tol_.primal - xb) / delta);
            } else {
                if (infeasible && xb > hi_[b] + tol_.primal) {
                    bound = hi_[b];
                } else if (xb < lo_[b] - tol_.primal) {
                    continue;
                } else {
                    bound = lo_[b];
                }
                if (!std::isfinite(bound)) continue;
                theta_max = std::min(theta_max, (bound - tol_.primal - xb) / delta);
            }
            candidates.push_back(Candidate{r, std::max(0.0, (bound - xb) / delta), bound});
        }
        if (bland) {
            theta_max = kInf;
            for (const auto& c : candidates) theta_max = std::min(theta_max, c.ratio);
            theta_max += 1e-12;
        }
        int leave = -1;
        double theta = kInf;
        double leave_bound = 0.0;
        double best_alpha = 0.0;
        for (const auto& c : candidates) {
            if (c.ratio <= theta_max) {
                const double a = std::abs(t(c.row, q));
                if (bland ? (leave < 0 || basic_of_row_[c.row] < basic_of_row_[leave]) : a > best_alpha) {
                    best_alpha = a;
                    leave = c.row;
                    theta = c.ratio;
                    leave_bound = c.bound;
                }
            }
        }
        const double range = hi_[q] - lo_[q];
        ++iterations_;
        if (leave < 0 || range <= theta) {
            if (!std::isfinite(range)) {
                return LpStatus::kUnbounded;
            }
            const double step = dir * range;
            x_[q] += step;
            status_[q] = dir > 0 ? VarStatus::kAtUpper : VarStatus::kAtLower;
            x_[q] = dir > 0 ? hi_[q] : lo_[q];
            for (int r = 0; r < m_; ++r) {
                const double a = t(r, q);
                if (a != 0.0) {
                    x_[basic_of_row_[r]] -= a * step;
                }
            }
            degenerate = 0;
            continue;
        }
        const double step = dir * theta;
        const double scale = infeasible ? 1.0 : std::max(1.0, std::abs(objective()));
        if (std::abs(dd[q] * step) <= kStallTol * scale) {
            ++degenerate;
        } else {
            degenerate = 0;
        }
        x_[q] += step;
        for (int r = 0; r < m_; ++r) {
            const double a = t(r, q);
            if (a != 0.0) {
                x_[basic_of_row_[r]] -= a * step;
            }
        }
        const int b = basic_of_row_[leave];
        x_[b] = leave_bound;
        status_[b] = (leave_bound == hi_[b] && lo_[b] != hi_[b]) ? VarStatus::kAtUpper : VarStatus::kAtLower;
        pivot(leave, q);
    }
}

LpStatus SimplexKernel::solve_dual() {
    if (!make_dual_feasible()) {
        return solve_primal();
    }
    int degenerate = 0;
    int verify_rounds = 0;
    struct Candidate {
        int col;
        double ratio;
    };
    std::vector<Candidate> candidates;
    while (true) {
        if (iterations_ >= iteration_limit_) {
            return LpStatus::kIterationLimit;
        }
        if (pivots_since_refactor_ >= tol_.refactor_interval) {
            refactor();
            if (!make_dual_feasible()) {
                return solve_primal();
            }
        }
        const bool bland = degenerate > tol_.degenerate_before_bland;
        int r = -1;
        double worst = 0.0;
        for (int i = 0; i < m_; ++i) {
            const int b = basic_of_row_[i];
            const double viol = std::max(lo_[b] - x_[b], x_[b] - hi_[b]);
            if (viol > tol_.primal) {
                if (bland) {
                    if (r < 0 || b < basic_of_row_[r]) {
                        r = i;
                    }
                } else if (viol > worst) {
                    worst = viol;
                    r = i;
                }
            }
        }
        if (r < 0) {
            if (verify_rounds < 1 && pivots_since_refactor_ > 0 && row_residual() > kResidualTol) {
                ++verify_rounds;
                refactor();
                if (!make_dual_feasible()) {
                    return solve_primal();
                }
                continue;
            }
            return LpStatus::kOptimal;
        }
        verify_rounds = 0;
        const int b = basic_of_row_[r];
        const bool increase = x_[b] < lo_[b];
        const double target = increase ? lo_[b] : hi_[b];
        const double* row = &tab_[static_cast<std::size_t>(r) * stride_];

        candidates.clear();
        double theta_max = kInf;
        for (int j = 0; j < total_; ++j) {
            if (status_[j] == VarStatus::kBasic || lo_[j] == hi_[j]) {
                continue;
            }
            const double alpha = row[j];
            if (std::abs(alpha) < tol_.pivot) {
                continue;
            }
            const bool at_lower = status_[j] == VarStatus::kAtLower;
            const bool eligible = increase ? (at_lower ? alpha < 0.0 : alpha > 0.0) : (at_lower ? alpha > 0.0 : alpha < 0.0);
            if (!eligible) {
                continue;
            }
            const double dj = at_lower ? std::max(0.0, d_[j]) : std::max(0.0, -d_[j]);
            theta_max = std::min(theta_max, (dj + tol_.dual) / std::abs(alpha));
            candidates.push_back(Candidate{j, dj / std::abs(alpha)});
        }
        if (candidates.empty()) {
            if (verify_rounds == 0 && pivots_since_refactor_ > 0) {
                refactor();
                if (!make_dual_feasible()) {
                    return solve_primal();
                }
                ++verify_rounds;
                continue;
            }
            return LpStatus::kInfeasible;
        }
        if (bland) {
            // Bland's rule needs the exact minimum ratio, not the Harris band.
            theta_max = kInf;
            for (const auto& c : candidates) theta_max = std::min(theta_max, c.ratio);
            theta_max += 1e-12;
        }
        int q = -1;
        double best_alpha = 0.0;
        for (const auto& c : candidates) {
            if (c.ratio <= theta_max) {
                const double a = std::abs(row[c.col]);
                if (bland ? (q < 0 || c.col < q) : a > best_alpha) {
                    best_alpha = a;
                    q = c.col;
                }
            }
        }
        ++iterations_;
        const double alpha_q = row[q];
        const double step = (target - x_[b]) / (-alpha_q);
        if (std::abs(d_[q] * step) <= kStallTol * std::max(1.0, std::abs(objective()))) {
            ++degenerate;
        } else {
            degenerate = 0;
        }
        x_[q] += step;
        for (int i = 0; i < m_; ++i) {
            const double a = t(i, q);
            if (a != 0.0) {
                x_[basic_of_row_[i]] -= a * step;
            }
        }
        x_[b] = target;
        status_[b] = (increase || lo_[b] == hi_[b]) ? VarStatus::kAtLower : VarStatus::kAtUpper;
        pivot(r, q);
    }
}

}  // namespace fsuc::milp
