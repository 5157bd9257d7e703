#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fsuc/sysmodel.hpp"

namespace fsuc::sysmodel {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_number(const std::string& text, int line_no) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw LoadError("line " + std::to_string(line_no) + ": not a number '" + text + "'");
    }
    return v;
}

void check_levels(const std::vector<double>& levels) {
    if (levels.empty()) {
        throw ValidationError("scenarios.levels", "quantile list is empty");
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0 && levels[i] < 1.0)) {
            throw ValidationError("scenarios.levels", "levels must lie in (0, 1)");
        }
        if (i > 0 && levels[i] <= levels[i - 1]) {
            throw ValidationError("scenarios.levels", "levels must be strictly increasing");
        }
    }
}

}  // namespace

ScenarioData parse_scenarios(const std::string& text) {
    ScenarioData data;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool header = false;
    int realized_col = -1;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (!header) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                if (cells[c] == "realized") {
                    if (realized_col >= 0) throw LoadError("line " + std::to_string(line_no) + ": duplicate realized column");
                    realized_col = static_cast<int>(c);
                } else {
                    data.levels.push_back(parse_number(cells[c], line_no));
                }
            }
            width = cells.size();
            header = true;
            continue;
        }
        if (cells.size() != width) {
            throw LoadError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " columns, got " +
                            std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const double v = parse_number(cells[c], line_no);
            if (static_cast<int>(c) == realized_col) {
                data.realized.push_back(v);
            } else {
                row.push_back(v);
            }
        }
        data.values.push_back(std::move(row));
    }
    if (!header) {
        throw LoadError("scenario file has no header row");
    }
    check_levels(data.levels);
    return data;
}

ScenarioData load_scenarios(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_scenarios(buf.str());
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

std::string serialize_scenarios(const ScenarioData& data) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t i = 0; i < data.levels.size(); ++i) {
        out << (i ? "," : "") << data.levels[i];
    }
    const bool with_realized = !data.realized.empty();
    if (with_realized) out << ",realized";
    out << '\n';
    for (std::size_t t = 0; t < data.values.size(); ++t) {
        for (std::size_t i = 0; i < data.values[t].size(); ++i) {
            out << (i ? "," : "") << data.values[t][i];
        }
        if (with_realized) out << ',' << data.realized.at(t);
        out << '\n';
    }
    return out.str();
}

std::vector<double> branch_probabilities(const std::vector<double>& levels) {
    check_levels(levels);
    std::vector<double> probs(levels.size());
    double lower = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        const double upper = i + 1 < levels.size() ? 0.5 * (levels[i] + levels[i + 1]) : 1.0;
        probs[i] = upper - lower;
        lower = upper;
    }
    return probs;
}

ScenarioTree build_scenario_tree(const std::vector<double>& levels, const ScenarioData& data, double root_net_demand,
                                 int start, int length) {
    const auto probs = branch_probabilities(levels);
    if (length < 1 || start < 0) {
        throw ValidationError("scenario_tree", "window must have positive length");
    }
    if (start + length > static_cast<int>(data.values.size())) {
        throw ValidationError("scenario_tree", "window extends past the scenario data");
    }
    ScenarioTree tree;
    tree.root_net_demand = root_net_demand;
    tree.quantile_levels = levels;
    // Map each requested level onto its column in the data.
    std::vector<std::size_t> column;
    for (double level : levels) {
        std::size_t c = 0;
        while (c < data.levels.size() && std::abs(data.levels[c] - level) > 1e-12) ++c;
        if (c == data.levels.size()) {
            throw ValidationError("scenario_tree", "level not present in scenario data");
        }
        column.push_back(c);
    }
    for (std::size_t i = 0; i < levels.size(); ++i) {
        ScenarioBranch branch;
        branch.probability = probs[i];
        branch.net_demand.push_back(root_net_demand);
        for (int k = 1; k < length; ++k) {
            branch.net_demand.push_back(data.values[start + k][column[i]]);
        }
        tree.branches.push_back(std::move(branch));
    }
    return tree;
}

}  // namespace fsuc::sysmodel
