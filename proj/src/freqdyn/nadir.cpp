#include <algorithm>
#include <cmath>

#include "fsuc/freqdyn.hpp"

namespace fsuc::freqdyn {

namespace {

bool feasible_hr(double hr, double loss, double damping, double t_d, double df_max, std::string* diagnostic) {
    if (loss <= 0.0) return true;
    if (!(hr > 0.0)) {
        if (diagnostic) *diagnostic = "H*R is not positive while the loss is positive";
        return false;
    }
    if (damping == 0.0) {
        return hr >= loss * loss * t_d / (4.0 * df_max);
    }
    const double y = 2.0 * hr / t_d;
    const double c = loss * damping;
    const double arg = c / y;
    if (!(arg > -1.0) || !std::isfinite(arg)) {
        if (diagnostic) *diagnostic = "logarithm argument is not positive";
        return false;
    }
    return y * std::log1p(arg) >= c - df_max * damping * damping;
}

}  // namespace

bool exact_nadir_feasible(double inertia, double pfr, double loss, double damping, double t_d, double df_max,
                          std::string* diagnostic) {
    if (inertia <= 0.0 && loss > 0.0) {
        if (diagnostic) *diagnostic = "post-loss inertia is not positive";
        return false;
    }
    return feasible_hr(inertia * pfr, loss, damping, t_d, df_max, diagnostic);
}

std::vector<RegionPoint> region_curve(double loss, double t_d, double df_max, const std::vector<double>& dampings) {
    std::vector<RegionPoint> out;
    const double intercept = loss * loss * t_d / (4.0 * df_max);
    for (double dp : dampings) {
        RegionPoint p;
        p.damping = dp;
        p.linear_hr = std::max(0.0, intercept - dp * t_d / 4.0 * loss);
        // The left side grows with H·R, so bisection finds the boundary. The
        // damping-free value is always feasible.
        double lo = 0.0;
        double hi = intercept;
        if (loss <= 0.0 || feasible_hr(0.0, loss, dp, t_d, df_max, nullptr)) {
            hi = 0.0;
        }
        for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (feasible_hr(mid, loss, dp, t_d, df_max, nullptr)) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        p.exact_hr = hi;
        out.push_back(p);
    }
    return out;
}

}  // namespace fsuc::freqdyn
