#include <cmath>

#include "fsuc/freqsec.hpp"

namespace fsuc::freqsec {

using sysmodel::FrequencyParams;
using sysmodel::GeneratorSpec;

LinearExpr FreqDecisionSet::total_pfr() const {
    LinearExpr r;
    for (auto id : pfr) r.add(id, 1.0);
    return r;
}

LossRows largest_loss_rows(const FreqDecisionSet& d, const std::vector<GeneratorSpec>& fleet,
                           const std::string& tag) {
    LossRows out;
    for (std::size_t g = 0; g < fleet.size(); ++g) {
        if (!fleet[g].loss_source || !fleet[g].synchronous()) continue;
        LinearRow row;
        row.coefs[d.loss] += 1.0;
        row.coefs[d.output.at(g)] -= 1.0;
        row.sense = Sense::kGreaterEqual;
        row.rhs = 0.0;
        row.label = "loss" + tag + "[" + fleet[g].id + "]";
        out.rows.push_back(std::move(row));
    }
    out.no_eligible_source = out.rows.empty();
    return out;
}

LinearExpr inertia_expression(const FreqDecisionSet& d, const std::vector<GeneratorSpec>& fleet,
                              const FrequencyParams& freq) {
    LinearExpr h;
    for (std::size_t g = 0; g < fleet.size(); ++g) {
        const double c = fleet[g].inertia_const * fleet[g].p_max / freq.f0;
        if (c != 0.0) h.add(d.commit.at(g), c);
    }
    h.constant = -freq.largest_unit_rating * freq.largest_unit_inertia / freq.f0;
    return h;
}

LinearRow rocof_row(const FreqDecisionSet& d, const LinearExpr& inertia, const FrequencyParams& freq,
                    const std::string& tag) {
    LinearExpr e = inertia;
    e.add(d.loss, -1.0 / (2.0 * freq.rocof_max));
    return LinearRow::from_expr(e, Sense::kGreaterEqual, 0.0, "rocof" + tag);
}

LinearRow inertia_nonneg_row(const LinearExpr& inertia, const std::string& tag) {
    return LinearRow::from_expr(inertia, Sense::kGreaterEqual, 0.0, "inertia" + tag);
}

LinearRow qss_row(const FreqDecisionSet& d, const FrequencyParams& freq, double demand, const std::string& tag) {
    LinearExpr e = d.total_pfr();
    e.add(d.loss, -1.0);
    return LinearRow::from_expr(e, Sense::kGreaterEqual, -freq.damping * demand * freq.df_ss_max, "qss" + tag);
}

double damping_beta(const FrequencyParams& freq, double demand) { return freq.damping * demand * freq.t_d / 4.0; }

double nadir_requirement(double p_loss, const FrequencyParams& freq, double demand) {
    return p_loss * p_loss * freq.t_d / (4.0 * freq.df_max) - damping_beta(freq, demand) * p_loss;
}

double nadir_monotone_threshold(const FrequencyParams& freq, double demand) {
    return freq.damping * demand * freq.df_max / 2.0;
}

void add_segment_variables(milp::MilpModel& model, FreqDecisionSet& d, const FrequencyParams& freq,
                           const std::string& tag) {
    if (freq.nadir_segments.empty()) {
        throw FreqSecError("nadir segment grid is empty");
    }
    d.segment.clear();
    for (std::size_t i = 0; i < freq.nadir_segments.size(); ++i) {
        d.segment.push_back(model.add_binary("m" + tag + "[" + std::to_string(i) + "]"));
    }
    d.loss_nadir = model.add_continuous("pl_nadir" + tag, 0.0, freq.nadir_segments.back());
}

std::vector<LinearRow> nadir_discretization_rows(const FreqDecisionSet& d, const FrequencyParams& freq,
                                                 double demand, const LinearExpr& hr, const std::string& tag) {
    const auto& grid = freq.nadir_segments;
    if (grid.empty() || grid.back() < freq.largest_unit_rating) {
        throw FreqSecError("nadir segment grid does not cover the largest unit rating");
    }
    if (d.segment.size() != grid.size()) {
        throw FreqSecError("segment variable count differs from the segment grid");
    }
    const double threshold = nadir_monotone_threshold(freq, demand);
    if (grid.front() < threshold) {
        throw FreqSecError("segment " + std::to_string(grid.front()) + " MW lies below " + std::to_string(threshold) +
                           " MW, where the linear nadir requirement is not monotone");
    }
    const double beta = damping_beta(freq, demand);
    std::vector<LinearRow> rows;
    LinearExpr one_hot;
    LinearExpr pick;
    LinearExpr hull = hr;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double k = grid[i] * grid[i] * freq.t_d / (4.0 * freq.df_max);
        LinearExpr e = hr;
        e.add(d.segment[i], -k);
        rows.push_back(LinearRow::from_expr(e, Sense::kGreaterEqual, -beta * grid[i],
                                            "nadir_seg" + tag + "[" + std::to_string(i) + "]"));
        one_hot.add(d.segment[i], 1.0);
        pick.add(d.segment[i], grid[i]);
        hull.add(d.segment[i], -(k - beta * grid[i]));
    }
    rows.push_back(LinearRow::from_expr(one_hot, Sense::kEqual, 1.0, "nadir_pick" + tag));
    LinearExpr nadir_loss;
    nadir_loss.add(d.loss_nadir, 1.0).add(pick, -1.0);
    rows.push_back(LinearRow::from_expr(nadir_loss, Sense::kEqual, 0.0, "nadir_loss" + tag));
    LinearExpr cover;
    cover.add(d.loss_nadir, 1.0).add(d.loss, -1.0);
    rows.push_back(LinearRow::from_expr(cover, Sense::kGreaterEqual, 0.0, "nadir_cover" + tag));
    rows.push_back(LinearRow::from_expr(hull, Sense::kGreaterEqual, 0.0, "nadir_hull" + tag));
    return rows;
}

BilinearForm linearize_inertia_pfr(milp::MilpModel& model, FreqDecisionSet& d, const std::vector<GeneratorSpec>& fleet,
                                   const FrequencyParams& freq, double r_max, const std::string& tag) {
    if (!(r_max > 0.0)) {
        throw FreqSecError("big-M bound on total PFR must be positive");
    }
    BilinearForm out;
    const LinearExpr r = d.total_pfr();
    d.bilinear.clear();
    d.bilinear_gen.clear();
    for (std::size_t g = 0; g < fleet.size(); ++g) {
        if (fleet[g].inertia_const <= 0.0) continue;
        const std::string name = "z" + tag + "[" + fleet[g].id + "]";
        const VarId z = model.add_continuous(name, 0.0, r_max);
        d.bilinear.push_back(z);
        d.bilinear_gen.push_back(g);
        const VarId x = d.commit.at(g);

        LinearExpr below_r;
        below_r.add(z, 1.0).add(r, -1.0);
        out.rows.push_back(LinearRow::from_expr(below_r, Sense::kLessEqual, 0.0, name + ".r"));
        LinearExpr below_x;
        below_x.add(z, 1.0).add(x, -r_max);
        out.rows.push_back(LinearRow::from_expr(below_x, Sense::kLessEqual, 0.0, name + ".x"));
        LinearExpr above;
        above.add(z, 1.0).add(r, -1.0).add(x, -r_max);
        out.rows.push_back(LinearRow::from_expr(above, Sense::kGreaterEqual, -r_max, name + ".on"));

        out.hr.add(z, fleet[g].inertia_const * fleet[g].p_max / freq.f0);
    }
    out.hr.add(r, -freq.largest_unit_rating * freq.largest_unit_inertia / freq.f0);
    return out;
}

}  // namespace fsuc::freqsec
