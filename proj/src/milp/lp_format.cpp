#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "fsuc/milp.hpp"

namespace fsuc::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kTermsPerLine = 6;

std::string number(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit_terms(std::ostringstream& out, const std::map<VarId, double>& terms, const MilpModel& model) {
    int on_line = 0;
    bool first = true;
    for (const auto& [id, coef] : terms) {
        if (coef == 0.0) continue;
        if (on_line == kTermsPerLine) {
            out << "\n   ";
            on_line = 0;
        }
        out << (coef < 0 ? (first ? "-" : " -") : (first ? "" : " +")) << ' ' << number(std::abs(coef)) << ' '
            << model.variable(id).name;
        first = false;
        ++on_line;
    }
    if (first) out << " 0 " << (model.num_variables() ? model.variables()[0].name : "");
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool parse_number(const std::string& token, double& out) {
    const std::string t = lower(token);
    if (t == "inf" || t == "+inf" || t == "infinity" || t == "+infinity") {
        out = kInf;
        return true;
    }
    if (t == "-inf" || t == "-infinity") {
        out = -kInf;
        return true;
    }
    const char* begin = token.data();
    if (!token.empty() && token[0] == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, token.data() + token.size(), out);
    return ec == std::errc() && ptr == token.data() + token.size();
}

enum class Section { kNone, kObjective, kConstraints, kBounds, kBinaries, kEnd };

bool section_header(const std::string& line, Section& section) {
    const std::string l = lower(line);
    if (l == "minimize" || l == "minimise" || l == "minimum" || l == "min") {
        section = Section::kObjective;
    } else if (l == "maximize" || l == "maximise" || l == "max") {
        throw ModelError("LP text: only minimisation is supported");
    } else if (l == "subject to" || l == "such that" || l == "st" || l == "s.t." || l == "st.") {
        section = Section::kConstraints;
    } else if (l == "bounds" || l == "bound") {
        section = Section::kBounds;
    } else if (l == "binaries" || l == "binary" || l == "bin") {
        section = Section::kBinaries;
    } else if (l == "general" || l == "generals" || l == "gen" || l == "semi-continuous" || l == "sos") {
        throw ModelError("LP text: section '" + line + "' is not supported");
    } else if (l == "end") {
        section = Section::kEnd;
    } else {
        return false;
    }
    return true;
}

bool spells_infinity(const std::string& text, std::size_t at) {
    for (const char* word : {"infinity", "inf"}) {
        const std::size_t n = std::char_traits<char>::length(word);
        if (lower(text.substr(at, n)) == word &&
            (at + n == text.size() || std::isspace(static_cast<unsigned char>(text[at + n])))) {
            return true;
        }
    }
    return false;
}

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&]() {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            flush();
        } else if (c == '<' || c == '>' || c == '=') {
            flush();
            std::string op(1, c);
            if (i + 1 < text.size() && (text[i + 1] == '=' || (c == '=' && (text[i + 1] == '<' || text[i + 1] == '>')))) {
                op += text[i + 1];
                ++i;
            }
            out.push_back(op);
        } else if ((c == '+' || c == '-') && cur.empty()) {
            // A sign glued to a number stays with it; a bare sign is its own token.
            if (i + 1 < text.size() && (std::isdigit(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '.' ||
                                        spells_infinity(text, i + 1))) {
                cur += c;
            } else {
                out.emplace_back(1, c);
            }
        } else {
            cur += c;
        }
    }
    flush();
    return out;
}

Sense parse_sense(const std::string& op, int line_no) {
    if (op == "<=" || op == "=<" || op == "<") return Sense::kLessEqual;
    if (op == ">=" || op == "=>" || op == ">") return Sense::kGreaterEqual;
    if (op == "=") return Sense::kEqual;
    throw ModelError("LP text line " + std::to_string(line_no) + ": expected a comparison, got '" + op + "'");
}

bool is_comparison(const std::string& tok) { return tok[0] == '<' || tok[0] == '>' || tok[0] == '='; }

bool row_complete(const std::string& text) {
    const auto tokens = tokenize(text);
    double v = 0.0;
    return tokens.size() >= 2 && is_comparison(tokens[tokens.size() - 2]) && parse_number(tokens.back(), v);
}

class LpReader {
public:
    MilpModel read(const std::string& text) {
        Section section = Section::kNone;
        std::istringstream in(text);
        std::string raw;
        int line_no = 0;
        std::vector<std::pair<Section, std::pair<int, std::string>>> items;
        std::string pending;
        int pending_line = 0;
        Section pending_section = Section::kNone;
        auto flush = [&]() {
            if (!pending.empty()) items.push_back({pending_section, {pending_line, pending}});
            pending.clear();
        };
        while (std::getline(in, raw)) {
            ++line_no;
            const auto cut = raw.find('\\');
            std::string line = raw.substr(0, cut);
            const auto b = line.find_first_not_of(" \t\r");
            if (b == std::string::npos) continue;
            const auto e = line.find_last_not_of(" \t\r");
            line = line.substr(b, e - b + 1);
            Section next = section;
            if (section_header(line, next)) {
                flush();
                section = next;
                continue;
            }
            if (section == Section::kEnd) break;
            if (section == Section::kNone) {
                throw ModelError("LP text line " + std::to_string(line_no) + ": content before the objective section");
            }
            // The objective runs to the next header; a row runs until it has its comparison and right-hand side.
            bool continuation = !pending.empty() && section == pending_section;
            if (continuation && section == Section::kConstraints) continuation = !row_complete(pending);
            if (continuation && section != Section::kObjective && section != Section::kConstraints) continuation = false;
            if (!continuation) {
                flush();
                pending_line = line_no;
                pending_section = section;
                pending = line;
            } else {
                pending += ' ' + line;
            }
        }
        flush();

        // Bounds come first so that variable ids follow their listing order.
        for (const auto& [sec, item] : items) {
            if (sec == Section::kBounds) read_bound(item.second, item.first);
        }
        for (const auto& [sec, item] : items) {
            if (sec == Section::kBinaries) {
                std::istringstream names(item.second);
                std::string name;
                while (names >> name) binaries_.push_back(name);
            }
        }
        for (const auto& [sec, item] : items) {
            if (sec == Section::kObjective) read_objective(item.second, item.first);
            if (sec == Section::kConstraints) read_row(item.second, item.first);
        }
        for (const auto& name : binaries_) {
            const auto id = var(name);
            auto& v = vars_[id.index];
            v.kind = VarKind::kBinary;
            if (!v.bounded_lo) v.lo = 0.0;
            if (!v.bounded_hi) v.hi = 1.0;
        }

        MilpModel model;
        for (const auto& v : vars_) {
            if (!std::isfinite(v.lo) || !std::isfinite(v.hi)) {
                throw ModelError("LP text: variable '" + v.name + "' needs finite bounds");
            }
            model.add_variable(v.name, v.kind, v.lo, v.hi);
        }
        for (auto& r : rows_) model.add_row(std::move(r));
        model.set_objective(objective_);
        model.validate();
        return model;
    }

private:
    struct Var {
        std::string name;
        VarKind kind = VarKind::kContinuous;
        double lo = 0.0;
        double hi = kInf;
        bool bounded_lo = false;
        bool bounded_hi = false;
    };

    VarId var(const std::string& name) {
        auto it = index_.find(name);
        if (it != index_.end()) return VarId{it->second};
        const auto id = static_cast<std::uint32_t>(vars_.size());
        vars_.push_back(Var{name});
        index_.emplace(name, id);
        return VarId{id};
    }

    // Parses "[+-] [coef] name ..." into an expression; returns the index of the first unread token.
    std::size_t read_expr(const std::vector<std::string>& tokens, std::size_t k, LinearExpr& expr, int line_no,
                          bool stop_at_op) {
        while (k < tokens.size()) {
            const std::string& tok = tokens[k];
            if (stop_at_op && is_comparison(tok)) break;
            double sign = 1.0;
            if (tok == "+" || tok == "-") {
                sign = tok == "-" ? -1.0 : 1.0;
                if (++k >= tokens.size()) throw ModelError("LP text line " + std::to_string(line_no) + ": dangling sign");
            }
            double coef = 1.0;
            double parsed = 0.0;
            if (parse_number(tokens[k], parsed)) {
                coef = parsed;
                ++k;
                const bool ends = k >= tokens.size() || tokens[k] == "+" || tokens[k] == "-" ||
                                  (stop_at_op && is_comparison(tokens[k]));
                if (ends) {
                    expr.constant += sign * coef;
                    continue;
                }
            }
            expr.add(var(tokens[k]), sign * coef);
            ++k;
        }
        return k;
    }

    void read_objective(const std::string& text, int line_no) {
        std::string body = text;
        const auto colon = body.find(':');
        if (colon != std::string::npos) body = body.substr(colon + 1);
        const auto tokens = tokenize(body);
        LinearExpr part;
        read_expr(tokens, 0, part, line_no, false);
        objective_.add(part);
    }

    void read_row(const std::string& text, int line_no) {
        std::string body = text;
        LinearRow row;
        const auto colon = body.find(':');
        if (colon != std::string::npos) {
            row.label = body.substr(0, colon);
            row.label.erase(row.label.find_last_not_of(" \t") + 1);
            body = body.substr(colon + 1);
        } else {
            row.label = "R" + std::to_string(rows_.size());
        }
        const auto tokens = tokenize(body);
        LinearExpr lhs;
        std::size_t k = read_expr(tokens, 0, lhs, line_no, true);
        if (k + 2 != tokens.size()) {
            throw ModelError("LP text line " + std::to_string(line_no) + ": row '" + row.label +
                             "' must end with a comparison and a number");
        }
        row.sense = parse_sense(tokens[k], line_no);
        double rhs = 0.0;
        if (!parse_number(tokens[k + 1], rhs)) {
            throw ModelError("LP text line " + std::to_string(line_no) + ": bad right-hand side '" + tokens[k + 1] + "'");
        }
        row.coefs = lhs.terms;
        row.rhs = rhs - lhs.constant;
        rows_.push_back(std::move(row));
    }

    void read_bound(const std::string& text, int line_no) {
        const auto tokens = tokenize(text);
        auto fail = [&]() { throw ModelError("LP text line " + std::to_string(line_no) + ": bad bound '" + text + "'"); };
        double a = 0.0;
        double b = 0.0;
        if (tokens.size() == 2 && lower(tokens[1]) == "free") {
            auto& v = vars_[var(tokens[0]).index];
            v.lo = -kInf;
            v.hi = kInf;
            v.bounded_lo = v.bounded_hi = true;
        } else if (tokens.size() == 5 && parse_number(tokens[0], a) && parse_number(tokens[4], b) &&
                   parse_sense(tokens[1], line_no) == Sense::kLessEqual &&
                   parse_sense(tokens[3], line_no) == Sense::kLessEqual) {
            auto& v = vars_[var(tokens[2]).index];
            v.lo = a;
            v.hi = b;
            v.bounded_lo = v.bounded_hi = true;
        } else if (tokens.size() == 3 && !parse_number(tokens[0], a) && parse_number(tokens[2], b)) {
            auto& v = vars_[var(tokens[0]).index];
            switch (parse_sense(tokens[1], line_no)) {
                case Sense::kLessEqual:
                    v.hi = b;
                    v.bounded_hi = true;
                    break;
                case Sense::kGreaterEqual:
                    v.lo = b;
                    v.bounded_lo = true;
                    break;
                case Sense::kEqual:
                    v.lo = v.hi = b;
                    v.bounded_lo = v.bounded_hi = true;
                    break;
            }
        } else if (tokens.size() == 3 && parse_number(tokens[0], a)) {
            auto& v = vars_[var(tokens[2]).index];
            switch (parse_sense(tokens[1], line_no)) {
                case Sense::kLessEqual:
                    v.lo = a;
                    v.bounded_lo = true;
                    break;
                case Sense::kGreaterEqual:
                    v.hi = a;
                    v.bounded_hi = true;
                    break;
                case Sense::kEqual:
                    v.lo = v.hi = a;
                    v.bounded_lo = v.bounded_hi = true;
                    break;
            }
        } else {
            fail();
        }
    }

    std::vector<Var> vars_;
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<LinearRow> rows_;
    std::vector<std::string> binaries_;
    LinearExpr objective_;
};

}  // namespace

std::string export_model(const MilpModel& model) {
    std::ostringstream out;
    out << "\\ " << model.num_variables() << " variables, " << model.rows().size() << " rows\n";
    out << "Minimize\n obj:";
    emit_terms(out, model.objective().terms, model);
    if (model.objective().constant != 0.0) {
        out << (model.objective().constant < 0 ? " - " : " + ") << number(std::abs(model.objective().constant));
    }
    out << "\nSubject To\n";
    for (const auto& row : model.rows()) {
        out << ' ' << row.label << ':';
        emit_terms(out, row.coefs, model);
        out << ' ' << sense_symbol(row.sense) << ' ' << number(row.rhs) << '\n';
    }
    out << "Bounds\n";
    for (const auto& v : model.variables()) {
        if (v.lower == v.upper) {
            out << ' ' << v.name << " = " << number(v.lower) << '\n';
        } else {
            out << ' ' << number(v.lower) << " <= " << v.name << " <= " << number(v.upper) << '\n';
        }
    }
    bool header = false;
    for (const auto& v : model.variables()) {
        if (v.kind != VarKind::kBinary) continue;
        if (!header) out << "Binaries\n";
        header = true;
        out << ' ' << v.name << '\n';
    }
    out << "End\n";
    return out.str();
}

MilpModel import_model(const std::string& text) {
    LpReader reader;
    return reader.read(text);
}

std::string export_solution(const MilpModel& model, const MilpSolution& solution) {
    std::ostringstream out;
    out << "status " << status_name(solution.status) << '\n';
    out << "objective " << number(solution.objective) << '\n';
    for (std::size_t j = 0; j < solution.values.size() && j < model.num_variables(); ++j) {
        out << model.variables()[j].name << ' ' << number(solution.values[j]) << '\n';
    }
    return out.str();
}

MilpSolution import_solution(const std::string& text, const MilpModel& model, double tol) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < model.num_variables(); ++j) index.emplace(model.variables()[j].name, j);

    MilpSolution sol;
    bool have_status = false;
    bool have_objective = false;
    double reported = 0.0;
    std::vector<char> seen(model.num_variables(), 0);
    sol.values.assign(model.num_variables(), 0.0);

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream fields(line);
        std::string key;
        std::string value;
        if (!(fields >> key)) continue;
        if (!(fields >> value)) {
            throw SolverError("solution line " + std::to_string(line_no) + ": expected 'name value'");
        }
        std::string extra;
        if (fields >> extra) {
            throw SolverError("solution line " + std::to_string(line_no) + ": trailing text '" + extra + "'");
        }
        if (!have_status && key == "status") {
            sol.status = parse_status(value);
            have_status = true;
            continue;
        }
        if (!have_objective && key == "objective") {
            if (!parse_number(value, reported)) {
                throw SolverError("solution line " + std::to_string(line_no) + ": bad objective '" + value + "'");
            }
            have_objective = true;
            continue;
        }
        const auto it = index.find(key);
        if (it == index.end()) {
            throw SolverError("solution line " + std::to_string(line_no) + ": unknown variable '" + key + "'");
        }
        double v = 0.0;
        if (!parse_number(value, v) || !std::isfinite(v)) {
            throw SolverError("solution line " + std::to_string(line_no) + ": bad value for '" + key + "'");
        }
        sol.values[it->second] = v;
        seen[it->second] = 1;
    }
    if (!have_status) throw SolverError("solution text has no status line");
    if (sol.status != SolveStatus::kOptimal && sol.status != SolveStatus::kLimit) {
        sol.values.clear();
        sol.objective = 0.0;
        return sol;
    }
    if (!have_objective) throw SolverError("solution text has no objective line");
    for (std::size_t j = 0; j < seen.size(); ++j) {
        if (!seen[j]) throw SolverError("solution text has no value for variable '" + model.variables()[j].name + "'");
    }
    const auto violations = check_feasibility(model, sol.values, tol);
    if (!violations.empty()) {
        const auto& v = violations.front();
        throw SolverError("imported solution violates '" + v.label + "' by " + number(v.violation));
    }
    sol.objective = evaluate_objective(model, sol.values);
    if (std::abs(sol.objective - reported) > 1e-5 * std::max(1.0, std::abs(sol.objective))) {
        sol.diagnostic = "reported objective " + number(reported) + " differs from recomputed " + number(sol.objective);
    }
    sol.best_bound = sol.objective;
    return sol;
}

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

}  // namespace

MilpSolution solve_external(const MilpModel& model, const std::string& command, const std::string& stem) {
    const std::string lp_path = stem + ".lp";
    const std::string sol_path = stem + ".sol";
    {
        std::ofstream out(lp_path);
        out << export_model(model);
        if (!out) throw SolverError("cannot write " + lp_path);
    }
    std::remove(sol_path.c_str());
    const std::string cmd = command + " " + shell_quote(lp_path) + " " + shell_quote(sol_path);
    const int rc = std::system(cmd.c_str());
    if (rc != 0) {
        throw SolverError("external solver exited with status " + std::to_string(rc) + " (model in " + lp_path + ")");
    }
    std::ifstream in(sol_path);
    if (!in) throw SolverError("external solver wrote no solution file " + sol_path);
    std::ostringstream text;
    text << in.rdbuf();
    return import_solution(text.str(), model);
}

}  // namespace fsuc::milp
