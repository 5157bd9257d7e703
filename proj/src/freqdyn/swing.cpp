#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "fsuc/freqdyn.hpp"

namespace fsuc::freqdyn {

namespace {

// (1 − e^{−x}) / x
double phi1(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
    return -std::expm1(-x) / x;
}

// (x − 1 + e^{−x}) / x²
double phi2(double x) {
    if (std::abs(x) < 1e-2) {
        return 0.5 + x * (-1.0 / 6 + x * (1.0 / 24 + x * (-1.0 / 120 + x * (1.0 / 720 - x / 5040))));
    }
    return (x + std::expm1(-x)) / (x * x);
}

double rate(const SwingInputs& in) { return in.damping / (2.0 * in.inertia); }

double ramp_deviation(const SwingInputs& in, double t) {
    const double at = rate(in) * t;
    return (in.pfr * t * t / in.t_d * phi2(at) - in.loss * t * phi1(at)) / (2.0 * in.inertia);
}

}  // namespace

void validate(const SwingInputs& in) {
    if (!(in.inertia > 0.0)) throw std::invalid_argument("swing: inertia must be positive");
    if (!(in.t_d > 0.0)) throw std::invalid_argument("swing: delivery time must be positive");
    if (!(in.pfr >= 0.0)) throw std::invalid_argument("swing: PFR must be non-negative");
    if (!(in.loss >= 0.0)) throw std::invalid_argument("swing: loss must be non-negative");
    if (!(in.damping >= 0.0)) throw std::invalid_argument("swing: damping must be non-negative");
    if (!(in.horizon > 0.0)) throw std::invalid_argument("swing: horizon must be positive");
}

double deviation_at(const SwingInputs& in, double t) {
    if (t <= in.t_d) {
        return ramp_deviation(in, std::max(t, 0.0));
    }
    const double f1 = ramp_deviation(in, in.t_d);
    const double tau = t - in.t_d;
    const double a = rate(in);
    return f1 * std::exp(-a * tau) + (in.pfr - in.loss) / (2.0 * in.inertia) * tau * phi1(a * tau);
}

SwingTrace simulate_swing(const SwingInputs& in) {
    validate(in);
    SwingTrace trace;
    trace.initial_rocof = -in.loss / (2.0 * in.inertia);
    trace.deviation_60s = deviation_at(in, 60.0);
    trace.diverged = in.damping == 0.0 && in.pfr < in.loss;

    // Candidates: both ends, the ramp-phase stationary point, and T_d. The
    // piece after T_d is monotone, so its interior holds no extremum.
    std::vector<double> candidates{0.0, in.horizon};
    if (in.t_d < in.horizon) candidates.push_back(in.t_d);
    if (in.pfr > 0.0 && in.loss > 0.0) {
        const double a = rate(in);
        const double t_star = a > 0.0 ? std::log1p(a * in.t_d * in.loss / in.pfr) / a : in.loss * in.t_d / in.pfr;
        if (t_star <= std::min(in.t_d, in.horizon)) candidates.push_back(t_star);
    }
    trace.nadir = 0.0;
    trace.nadir_time = 0.0;
    for (double t : candidates) {
        const double f = deviation_at(in, t);
        if (f < trace.nadir) {
            trace.nadir = f;
            trace.nadir_time = t;
        }
    }

    if (in.step > 0.0) {
        const auto n = static_cast<std::size_t>(std::floor(in.horizon / in.step + 1e-9));
        trace.times.reserve(n + 2);
        for (std::size_t k = 0; k <= n; ++k) {
            const double t = static_cast<double>(k) * in.step;
            trace.times.push_back(t);
            trace.deviation.push_back(deviation_at(in, t));
        }
        if (trace.times.back() < in.horizon) {
            trace.times.push_back(in.horizon);
            trace.deviation.push_back(deviation_at(in, in.horizon));
        }
    }
    return trace;
}

SecurityReport check_security(const SwingTrace& trace, const sysmodel::FrequencyParams& freq, double tol) {
    SecurityReport r;
    r.rocof_margin = freq.rocof_max - std::abs(trace.initial_rocof);
    r.nadir_margin = trace.nadir + freq.df_max;
    r.qss_margin = trace.deviation_60s + freq.df_ss_max;
    r.rocof_ok = r.rocof_margin >= -tol;
    r.nadir_ok = r.nadir_margin >= -tol;
    r.qss_ok = r.qss_margin >= -tol;
    return r;
}

SecurityReport verify_point(double inertia, double pfr, double loss, double demand,
                            const sysmodel::FrequencyParams& freq, double tol) {
    if (loss <= 0.0) {
        SecurityReport r;
        r.rocof_ok = r.nadir_ok = r.qss_ok = true;
        r.rocof_margin = freq.rocof_max;
        r.nadir_margin = freq.df_max;
        r.qss_margin = freq.df_ss_max;
        return r;
    }
    if (inertia <= 0.0) {
        // Zero post-loss inertia: the initial RoCoF is unbounded.
        SecurityReport r;
        r.rocof_margin = r.nadir_margin = r.qss_margin = -std::numeric_limits<double>::infinity();
        return r;
    }
    SwingInputs in;
    in.inertia = inertia;
    in.pfr = std::max(pfr, 0.0);
    in.loss = loss;
    in.damping = freq.damping * demand;
    in.t_d = freq.t_d;
    in.horizon = 60.0;
    in.step = 0.0;
    return check_security(simulate_swing(in), freq, tol);
}

}  // namespace fsuc::freqdyn
