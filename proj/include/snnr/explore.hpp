#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snnr/attacks.hpp"
#include "snnr/data.hpp"
#include "snnr/serialize.hpp"
#include "snnr/snn.hpp"
#include "snnr/training.hpp"

namespace snnr {

/// Learnability gate: accuracy ≥ a_th (inclusive).
bool learnability_gate(double accuracy, double a_th);

inline constexpr double kDefaultAccuracyThreshold = 0.70;

/// Outcome of attacking one sample.
struct AttackOutcome {
    std::size_t clean_pred = 0;
    std::size_t adv_pred = 0;
    double linf = 0.0;  // ‖x* − x‖∞
    bool success = false;
    Tensor adversarial;
};

/// Runs PGD on sample `index` of a dataset with the evaluation encoder seed
/// and a per-(index) random-start seed.
AttackOutcome attack_sample(const Network& net, const Tensor& x, std::size_t y, std::size_t index,
                            const AttackConfig& cfg, std::uint64_t eval_seed);

/// 1 − (successful attacks / |D|). Samples that are misclassified clean count
/// as successes, so robustness at ε = 0 equals evaluate(net, D, eval_seed).
double robustness(const Network& net, const Dataset& data, const AttackConfig& cfg,
                  std::uint64_t eval_seed);

struct GridSpec {
    std::vector<double> v_th_values;
    std::vector<std::size_t> t_values;
    std::vector<double> epsilons;
    double a_th = kDefaultAccuracyThreshold;
    /// Architecture template; v_th and time_window are set per cell.
    NetworkConfig network;
    /// Training template; the seed is replaced by each cell's derived seed.
    TrainConfig train;
    AttackSchedule attack;
    /// Size of the seeded evaluation subset of the test set; 0 uses all of it.
    std::size_t eval_size = 500;
    std::uint64_t seed = 0;

    /// Non-empty ascending lists, a_th in (0, 1), valid templates.
    void validate() const;
};

struct CellResult {
    std::size_t i = 0;  // index into v_th_values
    std::size_t j = 0;  // index into t_values
    double v_th = 0.0;
    std::size_t t = 0;
    double clean_accuracy = 0.0;
    bool learnable = false;
    /// (ε, robustness) in grid order; present iff learnable.
    std::vector<std::pair<double, double>> robustness;
    std::string error;  // empty unless training failed
    double wall_time_s = 0.0;

    bool operator==(const CellResult&) const = default;
};

/// Grid results in (i, j) row-major order.
struct ExplorationResult {
    GridSpec grid;
    std::vector<CellResult> cells;
    std::string version;

    const CellResult& cell(std::size_t i, std::size_t j) const;
};

/// Seed of cell (i, j); each cell is reproducible in isolation.
std::uint64_t cell_seed(std::uint64_t grid_seed, std::size_t i, std::size_t j);

/// Thrown when ExploreOptions::max_new_cells stops a sweep early.
class SweepInterrupted : public Error {
public:
    using Error::Error;
};

struct ExploreOptions {
    /// Worker threads for independent cells; results are assembled by (i, j).
    std::size_t threads = 1;
    /// When set, each finished cell is persisted here (cell JSON + checkpoint)
    /// and existing cell files are reused instead of recomputed.
    std::optional<std::filesystem::path> cell_dir;
    /// Stop with SweepInterrupted after computing this many new cells.
    std::size_t max_new_cells = std::numeric_limits<std::size_t>::max();
    std::function<void(const CellResult&, bool reused)> on_cell;
};

/// The evaluation subset used by explore(): the first `eval_size` items of a
/// seeded stratified subset of `test`, or all of `test` when eval_size is 0
/// or not smaller than the test set.
Dataset evaluation_subset(const Dataset& test, std::size_t eval_size, std::uint64_t seed);

/// For every (V_th, T): train, gate on clean accuracy, and for learnable
/// cells measure robustness at every ε. Training failures are recorded in the
/// cell (accuracy 0, not learnable) and never abort the sweep.
ExplorationResult explore(const GridSpec& grid, const Dataset& train_set, const Dataset& test_set,
                          const ExploreOptions& options = {});

/// Computes one cell (no persistence).
CellResult run_cell(const GridSpec& grid, std::size_t i, std::size_t j, const Dataset& train_set,
                    const Dataset& eval_set, Network* trained = nullptr);

std::string version_string();

Json to_json(const GridSpec& g);
GridSpec grid_spec_from_json(const Json& j);
/// `with_timing` adds wall_time_s (used for per-cell files, not for result.json).
Json to_json(const CellResult& c, bool with_timing = false);
CellResult cell_result_from_json(const Json& j);
Json to_json(const ExplorationResult& r);
ExplorationResult exploration_result_from_json(const Json& j);

// Report files written by write_report(), all under one directory.
inline constexpr const char* kResultJson = "result.json";
inline constexpr const char* kLearnabilityCsv = "learnability_heatmap.csv";
inline constexpr const char* kTidyCsv = "robustness_tidy.csv";

/// Shortest decimal form that parses back to the same double.
std::string format_number(double v);

/// File name of the robustness heat map for grid epsilon number k.
std::string robustness_heatmap_name(std::size_t k, double epsilon);

/// Heat map: header "T\V_th,<v_th...>" ascending, one row per T descending.
/// Learnability cells hold clean accuracy; robustness cells are blank for
/// non-learnable combinations.
std::string learnability_heatmap_csv(const ExplorationResult& r);
std::string robustness_heatmap_csv(const ExplorationResult& r, std::size_t k);
/// Long form: v_th,t,epsilon,robustness for every learnable cell and ε.
std::string tidy_csv(const ExplorationResult& r);

/// Writes result.json, the learnability heat map, one robustness heat map per
/// ε and the tidy CSV. Returns the written paths.
std::vector<std::filesystem::path> write_report(const ExplorationResult& r,
                                                const std::filesystem::path& dir);

/// Rebuilds the cells from the heat-map and tidy CSVs of a report directory,
/// given the grid they were produced from.
std::vector<CellResult> cells_from_report_csvs(const GridSpec& grid,
                                               const std::filesystem::path& dir);

struct CurvePoint {
    double epsilon = 0.0;
    double accuracy = 0.0;
};

/// Accuracy-vs-ε curve as written by the attack command (epsilon,accuracy,...).
std::vector<CurvePoint> read_accuracy_curve(const std::filesystem::path& csv);

struct GapEntry {
    double epsilon = 0.0;
    double baseline_accuracy = 0.0;
    double best_robustness = 0.0;
    double v_th = 0.0;
    std::size_t t = 0;
    double gap = 0.0;  // best_robustness − baseline_accuracy
};

/// For every grid ε also present on the baseline curve, the learnable cell
/// with the highest robustness and its margin over the baseline.
std::vector<GapEntry> robustness_gaps(const ExplorationResult& r,
                                      const std::vector<CurvePoint>& baseline);

/// Human-readable summary: cell count, best and worst learnable cell per ε,
/// and gaps when a baseline is given.
std::string summary_text(const ExplorationResult& r, const std::vector<GapEntry>& gaps = {});

}  // namespace snnr
