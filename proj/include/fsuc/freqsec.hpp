#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fsuc/linear.hpp"
#include "fsuc/milp.hpp"
#include "fsuc/sysmodel.hpp"

namespace fsuc::freqsec {

class FreqSecError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Variable ids for one period/scenario. commit, output and pfr are aligned
/// with the fleet passed alongside; bilinear_gen[k] is the fleet index of
/// bilinear[k].
struct FreqDecisionSet {
    std::vector<VarId> commit;
    std::vector<VarId> output;
    std::vector<VarId> pfr;
    VarId loss;
    VarId loss_nadir;
    std::vector<VarId> segment;
    std::vector<VarId> bilinear;
    std::vector<std::size_t> bilinear_gen;

    LinearExpr total_pfr() const;
};

struct LossRows {
    std::vector<LinearRow> rows;
    bool no_eligible_source = false;
};

/// P^L − P_g >= 0 for every synchronous unit flagged as a loss source.
LossRows largest_loss_rows(const FreqDecisionSet& d, const std::vector<sysmodel::GeneratorSpec>& fleet,
                           const std::string& tag = "");

/// Post-loss inertia (MW·s²) as an affine expression of the commitments.
LinearExpr inertia_expression(const FreqDecisionSet& d, const std::vector<sysmodel::GeneratorSpec>& fleet,
                              const sysmodel::FrequencyParams& freq);

/// H >= P^L / (2·RoCoF_max).
LinearRow rocof_row(const FreqDecisionSet& d, const LinearExpr& inertia, const sysmodel::FrequencyParams& freq,
                    const std::string& tag = "");

/// H >= 0.
LinearRow inertia_nonneg_row(const LinearExpr& inertia, const std::string& tag = "");

/// R − P^L >= −D·P^D·Δf_ss_max.
LinearRow qss_row(const FreqDecisionSet& d, const sysmodel::FrequencyParams& freq, double demand,
                  const std::string& tag = "");

/// β = D·P^D·T_d / 4, MW·s.
double damping_beta(const sysmodel::FrequencyParams& freq, double demand);

/// (P^L)²·T_d/(4·Δf_max) − β·P^L, MW²·s.
double nadir_requirement(double p_loss, const sysmodel::FrequencyParams& freq, double demand);

/// Loss value below which nadir_requirement decreases: D·P^D·Δf_max/2.
double nadir_monotone_threshold(const sysmodel::FrequencyParams& freq, double demand);

/// Adds one binary per segment of freq.nadir_segments and the P^L_nadir
/// variable, recording them in `d`.
void add_segment_variables(milp::MilpModel& model, FreqDecisionSet& d, const sysmodel::FrequencyParams& freq,
                           const std::string& tag = "");

/// Segment selection rows. For each segment i the row
///   H·R + β·P_i >= k_i·m_i,  k_i = P_i²·T_d/(4·Δf_max)
/// enforces the segment requirement when m_i = 1 and is slack otherwise.
/// Adds Σ m_i = 1, P^L_nadir = Σ m_i·P_i, P^L_nadir >= P^L, and the
/// aggregated row H·R >= Σ (k_i − β·P_i)·m_i, which is implied at integer
/// points and tightens the relaxation.
std::vector<LinearRow> nadir_discretization_rows(const FreqDecisionSet& d, const sysmodel::FrequencyParams& freq,
                                                 double demand, const LinearExpr& hr, const std::string& tag = "");

struct BilinearForm {
    LinearExpr hr;
    std::vector<LinearRow> rows;
};

/// Big-M linearisation of H·R with z_g = x_g·R for every unit with inertia.
/// Adds the z_g variables to `model` and records them in `d`.
BilinearForm linearize_inertia_pfr(milp::MilpModel& model, FreqDecisionSet& d,
                                   const std::vector<sysmodel::GeneratorSpec>& fleet,
                                   const sysmodel::FrequencyParams& freq, double r_max, const std::string& tag = "");

}  // namespace fsuc::freqsec
