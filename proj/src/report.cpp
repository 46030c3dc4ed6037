#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "snnr/explore.hpp"

namespace snnr {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string::npos) return out;
        start = comma + 1;
    }
}

std::string fixed4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(split_line(line));
    }
    return rows;
}

double parse_number(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw ParseError(context + ": bad number '" + s + "'", 0);
    }
    return v;
}

std::string heatmap_header(const GridSpec& g) {
    std::string h = "T\\V_th";
    for (double v : g.v_th_values) h += "," + format_number(v);
    return h + "\n";
}

template <typename F>
std::string heatmap(const ExplorationResult& r, F cell_text) {
    const GridSpec& g = r.grid;
    std::string out = heatmap_header(g);
    for (std::size_t jj = g.t_values.size(); jj-- > 0;) {
        out += std::to_string(g.t_values[jj]);
        for (std::size_t i = 0; i < g.v_th_values.size(); ++i) {
            out += "," + cell_text(r.cell(i, jj));
        }
        out += "\n";
    }
    return out;
}

// Heat-map body as values[i][j]; empty optional for blank cells.
std::vector<std::vector<std::optional<double>>> parse_heatmap(const GridSpec& g,
                                                              const std::filesystem::path& path) {
    const auto rows = read_csv(path);
    const std::string ctx = path.filename().string();
    const std::size_t n = g.v_th_values.size(), m = g.t_values.size();
    if (rows.size() != m + 1 || rows[0].size() != n + 1) {
        throw ParseError(ctx + ": heat map does not match the grid", 0);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (parse_number(rows[0][i + 1], ctx) != g.v_th_values[i]) {
            throw ParseError(ctx + ": V_th column mismatch", 0);
        }
    }
    std::vector<std::vector<std::optional<double>>> values(n, std::vector<std::optional<double>>(m));
    for (std::size_t r = 1; r <= m; ++r) {
        const std::size_t j = m - r;
        if (rows[r].size() != n + 1 || rows[r][0] != std::to_string(g.t_values[j])) {
            throw ParseError(ctx + ": T row mismatch", 0);
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!rows[r][i + 1].empty()) values[i][j] = parse_number(rows[r][i + 1], ctx);
        }
    }
    return values;
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string robustness_heatmap_name(std::size_t k, double epsilon) {
    return "robustness_heatmap_" + std::to_string(k) + "_eps" + format_number(epsilon) + ".csv";
}

Json to_json(const GridSpec& g) {
    return {{"v_th_values", g.v_th_values},
            {"t_values", g.t_values},
            {"epsilons", g.epsilons},
            {"a_th", g.a_th},
            {"network", to_json(g.network)},
            {"train", to_json(g.train)},
            {"attack",
             {{"iterations", g.attack.iterations},
              {"alpha_factor", g.attack.alpha_factor},
              {"random_start", g.attack.random_start}}},
            {"eval_size", g.eval_size},
            {"seed", g.seed}};
}

GridSpec grid_spec_from_json(const Json& j) {
    require_keys(j,
                 {"v_th_values", "t_values", "epsilons", "a_th", "network", "train", "attack",
                  "eval_size", "seed"},
                 "grid");
    GridSpec g;
    try {
        g.v_th_values = j.at("v_th_values").get<std::vector<double>>();
        g.t_values = j.at("t_values").get<std::vector<std::size_t>>();
        g.epsilons = j.at("epsilons").get<std::vector<double>>();
        if (j.contains("a_th")) g.a_th = j["a_th"].get<double>();
        if (j.contains("eval_size")) g.eval_size = j["eval_size"].get<std::size_t>();
        if (j.contains("seed")) g.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("attack")) {
            const Json& a = j["attack"];
            require_keys(a, {"iterations", "alpha_factor", "random_start"}, "grid.attack");
            if (a.contains("iterations")) g.attack.iterations = a["iterations"].get<std::size_t>();
            if (a.contains("alpha_factor")) g.attack.alpha_factor = a["alpha_factor"].get<double>();
            if (a.contains("random_start")) g.attack.random_start = a["random_start"].get<bool>();
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
    if (!j.contains("network")) throw ConfigError("grid: missing key 'network'");
    g.network = network_config_from_json(j["network"]);
    if (j.contains("train")) g.train = train_config_from_json(j["train"]);
    return g;
}

Json to_json(const CellResult& c, bool with_timing) {
    Json rob = Json::array();
    for (const auto& [eps, val] : c.robustness) rob.push_back({{"epsilon", eps}, {"robustness", val}});
    Json j = {{"i", c.i},
              {"j", c.j},
              {"v_th", c.v_th},
              {"t", c.t},
              {"clean_accuracy", c.clean_accuracy},
              {"learnable", c.learnable},
              {"robustness", rob},
              {"error", c.error}};
    if (with_timing) j["wall_time_s"] = c.wall_time_s;
    return j;
}

CellResult cell_result_from_json(const Json& j) {
    require_keys(j,
                 {"i", "j", "v_th", "t", "clean_accuracy", "learnable", "robustness", "error",
                  "wall_time_s"},
                 "cell");
    CellResult c;
    try {
        c.i = j.at("i").get<std::size_t>();
        c.j = j.at("j").get<std::size_t>();
        c.v_th = j.at("v_th").get<double>();
        c.t = j.at("t").get<std::size_t>();
        c.clean_accuracy = j.at("clean_accuracy").get<double>();
        c.learnable = j.at("learnable").get<bool>();
        for (const Json& r : j.at("robustness")) {
            c.robustness.emplace_back(r.at("epsilon").get<double>(), r.at("robustness").get<double>());
        }
        if (j.contains("error")) c.error = j["error"].get<std::string>();
        if (j.contains("wall_time_s")) c.wall_time_s = j["wall_time_s"].get<double>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("cell: ") + e.what());
    }
    return c;
}

Json to_json(const ExplorationResult& r) {
    Json cells = Json::array();
    for (const CellResult& c : r.cells) cells.push_back(to_json(c));
    return {{"format", "snnr-exploration"},
            {"format_version", 1},
            {"software", r.version},
            {"seed", r.grid.seed},
            {"grid", to_json(r.grid)},
            {"cells", cells}};
}

ExplorationResult exploration_result_from_json(const Json& j) {
    require_keys(j, {"format", "format_version", "software", "seed", "grid", "cells"}, "result");
    if (j.value("format", "") != "snnr-exploration") {
        throw ConfigError("result: not an exploration result");
    }
    ExplorationResult r;
    r.grid = grid_spec_from_json(j.at("grid"));
    r.version = j.value("software", "");
    for (const Json& c : j.at("cells")) r.cells.push_back(cell_result_from_json(c));
    const std::size_t n = r.grid.v_th_values.size(), m = r.grid.t_values.size();
    if (r.cells.size() != n * m) throw ConfigError("result: cell count does not match the grid");
    for (std::size_t idx = 0; idx < r.cells.size(); ++idx) {
        if (r.cells[idx].i != idx / m || r.cells[idx].j != idx % m) {
            throw ConfigError("result: cells out of (i, j) order");
        }
    }
    return r;
}

std::string learnability_heatmap_csv(const ExplorationResult& r) {
    return heatmap(r, [](const CellResult& c) { return format_number(c.clean_accuracy); });
}

std::string robustness_heatmap_csv(const ExplorationResult& r, std::size_t k) {
    return heatmap(r, [k](const CellResult& c) {
        return k < c.robustness.size() ? format_number(c.robustness[k].second) : std::string();
    });
}

std::string tidy_csv(const ExplorationResult& r) {
    std::string out = "v_th,t,epsilon,robustness\n";
    for (const CellResult& c : r.cells) {
        for (const auto& [eps, val] : c.robustness) {
            out += format_number(c.v_th) + "," + std::to_string(c.t) + "," + format_number(eps) +
                   "," + format_number(val) + "\n";
        }
    }
    return out;
}

std::vector<std::filesystem::path> write_report(const ExplorationResult& r,
                                                const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    write_json_file(dir / kResultJson, to_json(r));
    written.push_back(dir / kResultJson);
    write_text(dir / kLearnabilityCsv, learnability_heatmap_csv(r));
    written.push_back(dir / kLearnabilityCsv);
    for (std::size_t k = 0; k < r.grid.epsilons.size(); ++k) {
        const auto path = dir / robustness_heatmap_name(k, r.grid.epsilons[k]);
        write_text(path, robustness_heatmap_csv(r, k));
        written.push_back(path);
    }
    write_text(dir / kTidyCsv, tidy_csv(r));
    written.push_back(dir / kTidyCsv);
    return written;
}

std::vector<CellResult> cells_from_report_csvs(const GridSpec& grid,
                                               const std::filesystem::path& dir) {
    const std::size_t n = grid.v_th_values.size(), m = grid.t_values.size();
    const auto acc = parse_heatmap(grid, dir / kLearnabilityCsv);

    std::map<std::pair<double, std::size_t>, std::vector<std::pair<double, double>>> tidy;
    const auto rows = read_csv(dir / kTidyCsv);
    if (rows.empty() || rows[0] != std::vector<std::string>{"v_th", "t", "epsilon", "robustness"}) {
        throw ParseError(std::string(kTidyCsv) + ": unexpected header", 0);
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 4) throw ParseError(std::string(kTidyCsv) + ": bad row", 0);
        const double v = parse_number(rows[r][0], kTidyCsv);
        const auto t = static_cast<std::size_t>(parse_number(rows[r][1], kTidyCsv));
        tidy[{v, t}].emplace_back(parse_number(rows[r][2], kTidyCsv),
                                  parse_number(rows[r][3], kTidyCsv));
    }

    std::vector<CellResult> cells;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) {
            CellResult c;
            c.i = i;
            c.j = j;
            c.v_th = grid.v_th_values[i];
            c.t = grid.t_values[j];
            if (!acc[i][j]) throw ParseError(std::string(kLearnabilityCsv) + ": blank cell", 0);
            c.clean_accuracy = *acc[i][j];
            c.learnable = learnability_gate(c.clean_accuracy, grid.a_th);
            if (auto it = tidy.find({c.v_th, c.t}); it != tidy.end()) c.robustness = it->second;
            cells.push_back(std::move(c));
        }
    }
    for (std::size_t k = 0; k < grid.epsilons.size(); ++k) {
        const auto rob = parse_heatmap(grid, dir / robustness_heatmap_name(k, grid.epsilons[k]));
        for (CellResult& c : cells) {
            const bool in_tidy = k < c.robustness.size();
            if (rob[c.i][c.j].has_value() != in_tidy ||
                (in_tidy && *rob[c.i][c.j] != c.robustness[k].second)) {
                throw ParseError("robustness heat map disagrees with " + std::string(kTidyCsv), 0);
            }
        }
    }
    return cells;
}

std::vector<CurvePoint> read_accuracy_curve(const std::filesystem::path& csv) {
    const auto rows = read_csv(csv);
    const std::string ctx = csv.filename().string();
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "epsilon" || rows[0][1] != "accuracy") {
        throw ParseError(ctx + ": expected an epsilon,accuracy header", 0);
    }
    std::vector<CurvePoint> curve;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 2) throw ParseError(ctx + ": short row", 0);
        curve.push_back({parse_number(rows[r][0], ctx), parse_number(rows[r][1], ctx)});
    }
    return curve;
}

std::vector<GapEntry> robustness_gaps(const ExplorationResult& r,
                                      const std::vector<CurvePoint>& baseline) {
    std::vector<GapEntry> gaps;
    for (std::size_t k = 0; k < r.grid.epsilons.size(); ++k) {
        const double eps = r.grid.epsilons[k];
        const auto base = std::find_if(baseline.begin(), baseline.end(),
                                       [eps](const CurvePoint& p) { return p.epsilon == eps; });
        if (base == baseline.end()) continue;
        const CellResult* best = nullptr;
        for (const CellResult& c : r.cells) {
            if (k < c.robustness.size() &&
                (!best || c.robustness[k].second > best->robustness[k].second)) {
                best = &c;
            }
        }
        if (!best) continue;
        const double rob = best->robustness[k].second;
        gaps.push_back({eps, base->accuracy, rob, best->v_th, best->t, rob - base->accuracy});
    }
    return gaps;
}

std::string summary_text(const ExplorationResult& r, const std::vector<GapEntry>& gaps) {
    std::ostringstream out;
    std::size_t learnable = 0, failed = 0;
    for (const CellResult& c : r.cells) {
        learnable += c.learnable;
        failed += !c.error.empty();
    }
    out << "cells: " << r.cells.size() << " (" << r.grid.v_th_values.size() << " V_th x "
        << r.grid.t_values.size() << " T), learnable: " << learnable << ", failed: " << failed
        << "\n";
    for (const CellResult& c : r.cells) {
        out << "  V_th=" << format_number(c.v_th) << " T=" << c.t
            << " acc=" << fixed4(c.clean_accuracy) << (c.learnable ? "" : " not learnable");
        if (!c.error.empty()) out << " error: " << c.error;
        out << "\n";
    }
    for (std::size_t k = 0; k < r.grid.epsilons.size(); ++k) {
        const CellResult *best = nullptr, *worst = nullptr;
        for (const CellResult& c : r.cells) {
            if (k >= c.robustness.size()) continue;
            if (!best || c.robustness[k].second > best->robustness[k].second) best = &c;
            if (!worst || c.robustness[k].second < worst->robustness[k].second) worst = &c;
        }
        out << "eps=" << format_number(r.grid.epsilons[k]) << ": ";
        if (!best) {
            out << "no learnable cells\n";
            continue;
        }
        out << "best V_th=" << format_number(best->v_th) << " T=" << best->t
            << " robustness=" << fixed4(best->robustness[k].second)
            << ", worst V_th=" << format_number(worst->v_th) << " T=" << worst->t
            << " robustness=" << fixed4(worst->robustness[k].second) << "\n";
    }
    for (const GapEntry& g : gaps) {
        out << "gap at eps=" << format_number(g.epsilon) << ": " << fixed4(g.best_robustness)
            << " (V_th=" << format_number(g.v_th) << ", T=" << g.t << ") vs baseline "
            << fixed4(g.baseline_accuracy) << " -> " << fixed4(g.gap) << "\n";
    }
    return out.str();
}

}  // namespace snnr
