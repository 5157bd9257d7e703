#pragma once

#include <string>
#include <vector>

#include "fsuc/sysmodel.hpp"

namespace fsuc::freqdyn {

struct SwingInputs {
    double inertia = 0.0;     // H, MW·s²
    double damping = 0.0;     // D·P^D, MW/Hz
    double pfr = 0.0;         // R, MW
    double t_d = 10.0;        // s
    double loss = 0.0;        // P^L, MW
    double horizon = 60.0;    // s
    double step = 0.01;       // trace sampling step, s; <= 0 disables sampling
};

struct SwingTrace {
    std::vector<double> times;
    std::vector<double> deviation;  // Hz
    double nadir = 0.0;             // Hz, minimum over [0, horizon]
    double nadir_time = 0.0;        // s
    double initial_rocof = 0.0;     // Hz/s
    double deviation_60s = 0.0;     // Hz
    bool diverged = false;          // D·P^D = 0 and R < P^L
};

/// Throws std::invalid_argument when the inputs break SwingInputs invariants.
void validate(const SwingInputs& in);

/// Closed-form frequency deviation at time t >= 0.
double deviation_at(const SwingInputs& in, double t);

/// Post-fault trajectory with the nadir found analytically.
SwingTrace simulate_swing(const SwingInputs& in);

struct SecurityReport {
    bool rocof_ok = false;
    bool nadir_ok = false;
    bool qss_ok = false;
    // Positive margin means slack against the limit.
    double rocof_margin = 0.0;  // Hz/s
    double nadir_margin = 0.0;  // Hz
    double qss_margin = 0.0;    // Hz

    bool secure() const { return rocof_ok && nadir_ok && qss_ok; }
};

SecurityReport check_security(const SwingTrace& trace, const sysmodel::FrequencyParams& freq, double tol = 1e-6);

/// Simulates and checks one post-loss operating point. With no loss the
/// point is trivially secure.
SecurityReport verify_point(double inertia, double pfr, double loss, double demand,
                            const sysmodel::FrequencyParams& freq, double tol = 1e-6);

/// Logarithmic nadir condition for a ramp-phase nadir:
///   y·ln(1 + P^L·D·P^D / y) >= P^L·D·P^D − Δf_max·(D·P^D)², y = 2H·R/T_d.
/// Delegates to H·R >= (P^L)²·T_d/(4·Δf_max) when D·P^D = 0. A non-positive
/// H·R with P^L > 0 is infeasible; `diagnostic` (if given) says why.
bool exact_nadir_feasible(double inertia, double pfr, double loss, double damping, double t_d, double df_max,
                          std::string* diagnostic = nullptr);

struct RegionPoint {
    double damping = 0.0;   // D·P^D, MW/Hz
    double exact_hr = 0.0;  // minimal H·R under the logarithmic condition
    double linear_hr = 0.0; // linear inner approximation, clamped at zero
};

/// Feasible-region boundary over a sweep of D·P^D values.
std::vector<RegionPoint> region_curve(double loss, double t_d, double df_max, const std::vector<double>& dampings);

}  // namespace fsuc::freqdyn
