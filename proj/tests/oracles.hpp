#pragma once

// Test-only reference implementations. None of these share code paths with
// the library routines they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include "fsuc/milp.hpp"

namespace fsuc::testing {

/// Minimum of a small LP by enumerating every vertex: each choice of n
/// linearly independent active constraints (rows at equality or variable
/// bounds) is solved by Gaussian elimination and kept if feasible.
/// Binaries are treated as continuous in [lower, upper]; the caller fixes them.
inline std::optional<double> vertex_enumeration_lp(const milp::MilpModel& model, double tol = 1e-7) {
    const auto& vars = model.variables();
    const int n = static_cast<int>(vars.size());
    struct Hyperplane {
        std::vector<double> a;
        double b;
    };
    std::vector<Hyperplane> planes;
    for (const auto& row : model.rows()) {
        Hyperplane h{std::vector<double>(n, 0.0), row.rhs};
        for (const auto& [id, c] : row.coefs) h.a[id.index] = c;
        planes.push_back(h);
    }
    for (int j = 0; j < n; ++j) {
        Hyperplane lo{std::vector<double>(n, 0.0), vars[j].lower};
        lo.a[j] = 1.0;
        planes.push_back(lo);
        Hyperplane hi{std::vector<double>(n, 0.0), vars[j].upper};
        hi.a[j] = 1.0;
        planes.push_back(hi);
    }
    const int p = static_cast<int>(planes.size());
    std::optional<double> best;
    std::vector<int> pick(n);
    for (int k = 0; k < n; ++k) pick[k] = k;
    if (n == 0) return model.objective().constant;
    while (true) {
        // Solve the n x n system for this selection.
        std::vector<std::vector<double>> m(n, std::vector<double>(n + 1));
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) m[r][c] = planes[pick[r]].a[c];
            m[r][n] = planes[pick[r]].b;
        }
        bool singular = false;
        for (int c = 0; c < n && !singular; ++c) {
            int piv = c;
            for (int r = c + 1; r < n; ++r)
                if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
            if (std::abs(m[piv][c]) < 1e-10) {
                singular = true;
                break;
            }
            std::swap(m[piv], m[c]);
            for (int r = 0; r < n; ++r) {
                if (r == c) continue;
                const double f = m[r][c] / m[c][c];
                for (int k = c; k <= n; ++k) m[r][k] -= f * m[c][k];
            }
        }
        if (!singular) {
            std::vector<double> x(n);
            for (int c = 0; c < n; ++c) x[c] = m[c][n] / m[c][c];
            bool feasible = true;
            for (int j = 0; j < n && feasible; ++j) {
                if (x[j] < vars[j].lower - tol || x[j] > vars[j].upper + tol) feasible = false;
            }
            for (const auto& row : model.rows()) {
                if (!feasible) break;
                double act = 0.0;
                for (const auto& [id, c] : row.coefs) act += c * x[id.index];
                if (row.violation(act) > tol * std::max(1.0, row.scale())) feasible = false;
            }
            if (feasible) {
                const double obj = model.objective().evaluate([&](VarId id) { return x[id.index]; });
                if (!best || obj < *best) best = obj;
            }
        }
        int k = n - 1;
        while (k >= 0 && pick[k] == p - n + k) --k;
        if (k < 0) break;
        ++pick[k];
        for (int r = k + 1; r < n; ++r) pick[r] = pick[r - 1] + 1;
    }
    return best;
}

struct RandomMilpShape {
    int max_binaries = 10;
    int max_continuous = 20;
    int max_rows = 16;
};

/// Random bounded MILP. Right-hand sides are set around a random anchor
/// point, so most instances are feasible and some are not.
inline milp::MilpModel random_milp(std::mt19937_64& rng, RandomMilpShape shape = {}) {
    std::uniform_int_distribution<int> nb_dist(0, shape.max_binaries);
    std::uniform_int_distribution<int> nc_dist(1, shape.max_continuous);
    std::uniform_int_distribution<int> nr_dist(1, shape.max_rows);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> coef(-9, 9);
    milp::MilpModel model;
    const int nb = nb_dist(rng);
    const int nc = nc_dist(rng);
    std::vector<double> anchor;
    for (int b = 0; b < nb; ++b) {
        model.add_binary("b" + std::to_string(b));
        anchor.push_back(unit(rng) < 0.5 ? 0.0 : 1.0);
    }
    for (int c = 0; c < nc; ++c) {
        const double lo = -std::floor(5.0 * unit(rng));
        const double hi = lo + 1.0 + std::floor(10.0 * unit(rng));
        model.add_continuous("c" + std::to_string(c), lo, hi);
        anchor.push_back(lo + (hi - lo) * unit(rng));
    }
    const int n = nb + nc;
    const int nr = nr_dist(rng);
    for (int r = 0; r < nr; ++r) {
        LinearRow row;
        row.label = "r" + std::to_string(r);
        double act = 0.0;
        for (int j = 0; j < n; ++j) {
            if (unit(rng) < 0.35) {
                const int c = coef(rng);
                if (c == 0) continue;
                row.coefs[VarId{static_cast<std::uint32_t>(j)}] = c;
                act += c * anchor[j];
            }
        }
        if (row.coefs.empty()) {
            const int j = static_cast<int>(unit(rng) * n) % n;
            row.coefs[VarId{static_cast<std::uint32_t>(j)}] = 1.0;
            act += anchor[j];
        }
        const double u = unit(rng);
        const double slack = (unit(rng) < 0.9 ? 1.0 : -1.0) * std::floor(6.0 * unit(rng));
        if (u < 0.45) {
            row.sense = Sense::kLessEqual;
            row.rhs = std::round(act) + slack;
        } else if (u < 0.9) {
            row.sense = Sense::kGreaterEqual;
            row.rhs = std::round(act) - slack;
        } else {
            row.sense = Sense::kEqual;
            row.rhs = act;
        }
        model.add_row(std::move(row));
    }
    LinearExpr obj;
    for (int j = 0; j < n; ++j) {
        obj.add(VarId{static_cast<std::uint32_t>(j)}, coef(rng));
    }
    model.set_objective(obj);
    return model;
}

/// Fixed-step RK4 integration of 2H·f' + Dp·f = min(t/T_d, 1)·R − P^L from
/// f(0) = 0. Steps are split at T_d so the forcing kink falls on a node.
inline double rk4_deviation(double h, double dp, double r, double t_d, double loss, double t_end,
                            double step = 1e-4) {
    auto rhs = [&](double t, double f) {
        const double ramp = t < t_d ? t / t_d : 1.0;
        return (ramp * r - loss - dp * f) / (2.0 * h);
    };
    double t = 0.0;
    double f = 0.0;
    auto advance = [&](double until) {
        const auto n = static_cast<long>(std::ceil((until - t) / step - 1e-9));
        if (n <= 0) return;
        const double dt = (until - t) / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            const double k1 = rhs(t, f);
            const double k2 = rhs(t + dt / 2, f + dt / 2 * k1);
            const double k3 = rhs(t + dt / 2, f + dt / 2 * k2);
            const double k4 = rhs(t + dt, f + dt * k3);
            f += dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
            t += dt;
        }
        t = until;
    };
    advance(std::min(t_d, t_end));
    if (t_end > t_d) advance(t_end);
    return f;
}

/// Minimum of the RK4 trajectory sampled at every step over [0, t_end].
inline double rk4_nadir(double h, double dp, double r, double t_d, double loss, double t_end, double step = 1e-4) {
    auto rhs = [&](double t, double f) {
        const double ramp = t < t_d ? t / t_d : 1.0;
        return (ramp * r - loss - dp * f) / (2.0 * h);
    };
    double f = 0.0;
    double lowest = 0.0;
    const auto n = static_cast<long>(std::llround(t_end / step));
    for (long k = 0; k < n; ++k) {
        const double t = k * step;
        const double k1 = rhs(t, f);
        const double k2 = rhs(t + step / 2, f + step / 2 * k1);
        const double k3 = rhs(t + step / 2, f + step / 2 * k2);
        const double k4 = rhs(t + step, f + step * k3);
        f += step / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        lowest = std::min(lowest, f);
    }
    return lowest;
}

}  // namespace fsuc::testing
