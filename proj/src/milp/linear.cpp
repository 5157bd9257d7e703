#include "fsuc/linear.hpp"

#include <algorithm>
#include <cmath>

namespace fsuc {

const char* sense_symbol(Sense sense) {
    switch (sense) {
        case Sense::kLessEqual:
            return "<=";
        case Sense::kGreaterEqual:
            return ">=";
        case Sense::kEqual:
            return "=";
    }
    return "?";
}

LinearExpr& LinearExpr::add(VarId id, double coef) {
    if (coef == 0.0) {
        return *this;
    }
    auto [it, inserted] = terms.emplace(id, coef);
    if (!inserted) {
        it->second += coef;
        if (it->second == 0.0) {
            terms.erase(it);
        }
    }
    return *this;
}

LinearExpr& LinearExpr::add(const LinearExpr& other, double scale) {
    for (const auto& [id, coef] : other.terms) {
        add(id, coef * scale);
    }
    constant += other.constant * scale;
    return *this;
}

LinearRow LinearRow::from_expr(const LinearExpr& expr, Sense sense, double rhs, std::string label) {
    LinearRow row;
    row.coefs = expr.terms;
    row.sense = sense;
    row.rhs = rhs - expr.constant;
    row.label = std::move(label);
    return row;
}

double LinearRow::violation(double activity) const {
    switch (sense) {
        case Sense::kLessEqual:
            return activity - rhs;
        case Sense::kGreaterEqual:
            return rhs - activity;
        case Sense::kEqual:
            return std::abs(activity - rhs);
    }
    return 0.0;
}

double LinearRow::scale() const {
    double s = 0.0;
    for (const auto& [id, coef] : coefs) {
        s = std::max(s, std::abs(coef));
    }
    return s;
}

}  // namespace fsuc
