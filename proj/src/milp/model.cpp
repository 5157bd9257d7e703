#include <algorithm>
#include <cmath>
#include <sstream>

#include "fsuc/milp.hpp"

namespace fsuc::milp {

VarId MilpModel::add_variable(std::string name, VarKind kind, double lower, double upper) {
    VarId id{static_cast<std::uint32_t>(variables_.size())};
    variables_.push_back(Variable{std::move(name), kind, lower, upper});
    return id;
}

void MilpModel::add_row(LinearRow row) { rows_.push_back(std::move(row)); }

void MilpModel::add_rows(std::vector<LinearRow> rows) {
    for (auto& row : rows) {
        rows_.push_back(std::move(row));
    }
}

void MilpModel::set_bounds(VarId id, double lower, double upper) {
    auto& var = variables_.at(id.index);
    var.lower = lower;
    var.upper = upper;
}

std::size_t MilpModel::num_binaries() const {
    return static_cast<std::size_t>(std::count_if(variables_.begin(), variables_.end(),
                                                  [](const Variable& v) { return v.kind == VarKind::kBinary; }));
}

void MilpModel::validate() const {
    for (const auto& var : variables_) {
        if (!std::isfinite(var.lower) || !std::isfinite(var.upper)) {
            throw ModelError("variable '" + var.name + "' has a non-finite bound");
        }
        if (var.lower > var.upper) {
            throw ModelError("variable '" + var.name + "' has lower bound above upper bound");
        }
        if (var.kind == VarKind::kBinary && (var.lower < 0.0 || var.upper > 1.0)) {
            throw ModelError("binary variable '" + var.name + "' has bounds outside [0, 1]");
        }
    }
    for (const auto& row : rows_) {
        if (!std::isfinite(row.rhs)) {
            throw ModelError("row '" + row.label + "' has a non-finite right-hand side");
        }
        for (const auto& [id, coef] : row.coefs) {
            if (id.index >= variables_.size()) {
                std::ostringstream msg;
                msg << "row '" << row.label << "' references unknown variable id " << id.index;
                throw ModelError(msg.str());
            }
            if (!std::isfinite(coef)) {
                throw ModelError("row '" + row.label + "' has a non-finite coefficient");
            }
        }
    }
    for (const auto& [id, coef] : objective_.terms) {
        if (id.index >= variables_.size() || !std::isfinite(coef)) {
            throw ModelError("objective references an unknown variable or non-finite coefficient");
        }
    }
}

VarId MilpModel::find(const std::string& name) const {
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].name == name) {
            return VarId{static_cast<std::uint32_t>(j)};
        }
    }
    throw ModelError("unknown variable '" + name + "'");
}

const char* status_name(SolveStatus status) {
    switch (status) {
        case SolveStatus::kOptimal:
            return "optimal";
        case SolveStatus::kInfeasible:
            return "infeasible";
        case SolveStatus::kUnbounded:
            return "unbounded";
        case SolveStatus::kLimit:
            return "limit";
    }
    return "unknown";
}

SolveStatus parse_status(const std::string& text) {
    if (text == "optimal") return SolveStatus::kOptimal;
    if (text == "infeasible") return SolveStatus::kInfeasible;
    if (text == "unbounded") return SolveStatus::kUnbounded;
    if (text == "limit") return SolveStatus::kLimit;
    throw ModelError("unknown solve status '" + text + "'");
}

std::vector<RowViolation> check_feasibility(const MilpModel& model, const std::vector<double>& values, double tol) {
    std::vector<RowViolation> out;
    if (values.size() != model.num_variables()) {
        out.push_back(RowViolation{0, "<assignment size>", 1.0});
        return out;
    }
    const auto& vars = model.variables();
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const double v = values[j];
        double viol = std::max(vars[j].lower - v, v - vars[j].upper);
        if (vars[j].kind == VarKind::kBinary) {
            viol = std::max(viol, std::min(std::abs(v), std::abs(1.0 - v)));
        }
        if (viol > tol || !std::isfinite(v)) {
            out.push_back(RowViolation{j, "bound:" + vars[j].name, viol});
        }
    }
    const auto& rows = model.rows();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        double activity = 0.0;
        for (const auto& [id, coef] : row.coefs) {
            activity += coef * values[id.index];
        }
        const double scale = std::max(row.scale(), 1e-300);
        const double viol = row.violation(activity) / scale;
        if (viol > tol) {
            out.push_back(RowViolation{i, row.label, viol});
        }
    }
    return out;
}

double evaluate_objective(const MilpModel& model, const std::vector<double>& values) {
    return model.objective().evaluate([&](VarId id) { return values[id.index]; });
}

}  // namespace fsuc::milp
