#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <string>

namespace fsuc {

/// Index of a decision variable inside a MilpModel.
struct VarId {
    std::uint32_t index = 0;

    friend auto operator<=>(const VarId&, const VarId&) = default;
};

enum class Sense { kLessEqual, kGreaterEqual, kEqual };

const char* sense_symbol(Sense sense);

/// Affine expression over model variables. Terms are kept ordered by id so
/// that emission and hashing are deterministic.
struct LinearExpr {
    std::map<VarId, double> terms;
    double constant = 0.0;

    LinearExpr& add(VarId id, double coef);
    LinearExpr& add(const LinearExpr& other, double scale = 1.0);

    /// Evaluates the expression at an assignment indexed by VarId::index.
    template <typename Lookup>
    double evaluate(Lookup&& value_of) const {
        double acc = constant;
        for (const auto& [id, coef] : terms) {
            acc += coef * value_of(id);
        }
        return acc;
    }
};

struct LinearRow {
    std::map<VarId, double> coefs;
    Sense sense = Sense::kGreaterEqual;
    double rhs = 0.0;
    std::string label;

    /// Builds `expr (sense) rhs`, folding the expression constant into the rhs.
    static LinearRow from_expr(const LinearExpr& expr, Sense sense, double rhs, std::string label);

    /// Signed violation (> 0 means violated) of the row at an activity value.
    double violation(double activity) const;

    /// Largest absolute coefficient; rows are compared in this normalisation.
    double scale() const;
};

}  // namespace fsuc
