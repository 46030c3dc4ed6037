#pragma once

// Run configuration shared by the CLI subcommands. One JSON file holds every
// section; see configs/run_config.schema.json for the accepted keys.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "snnr/data.hpp"
#include "snnr/explore.hpp"
#include "snnr/serialize.hpp"

namespace snnr {

enum class DataSource { blobs, idx };

struct BlobSpec {
    std::size_t n_per_class = 100;
    std::size_t classes = 2;
    std::size_t dim = 16;
    double separation = 0.8;
    std::size_t test_per_class = 50;
};

struct DataSpec {
    DataSource source = DataSource::blobs;
    BlobSpec blobs;
    std::filesystem::path train_images, train_labels, test_images, test_labels;
    std::size_t num_classes = 10;
    /// Optional class filter; kept classes are relabelled 0..k-1 in list order.
    std::vector<std::size_t> classes;
    std::size_t crop = 0;
    std::size_t downscale = 1;
    /// Seeded subset sizes; 0 keeps everything.
    std::size_t train_size = 0;
    std::size_t test_size = 0;
};

enum class AttackMethod { pgd, fgsm };

struct AttackSection {
    std::optional<std::filesystem::path> checkpoint;  // default: <output_dir>/checkpoint.json
    AttackMethod method = AttackMethod::pgd;
    std::vector<double> epsilons{0.0, 0.05, 0.1, 0.2, 0.3};
    AttackSchedule schedule;
    std::size_t eval_size = 0;  // 0: the whole test set
    bool dump_images = false;
};

struct ExploreSection {
    std::vector<double> v_th_values;
    std::vector<std::size_t> t_values;
    std::vector<double> epsilons;
    double a_th = kDefaultAccuracyThreshold;
    std::size_t eval_size = 500;
    AttackSchedule schedule;
};

struct ReportSection {
    std::optional<std::filesystem::path> results_dir;  // default: output_dir
    std::optional<std::filesystem::path> baseline_curve;
    std::optional<std::filesystem::path> baseline_checkpoint;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "snnr_out";
    std::size_t threads = 1;
    DataSpec data;
    NetworkConfig network;
    TrainConfig train;
    AttackSection attack;
    ExploreSection explore;
    ReportSection report;
};

/// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise. Throws ConfigError.
void apply_override(Json& doc, const std::string& assignment);

/// Strict parse: unknown keys and invalid values throw ConfigError.
RunConfig run_config_from_json(const Json& j);
Json to_json(const RunConfig& c);

/// File (optional) + environment (SNNR_OUTPUT_DIR, SNNR_THREADS) + overrides,
/// in that order of precedence, then parsed.
RunConfig load_run_config(const std::optional<std::filesystem::path>& file,
                          const std::vector<std::string>& overrides);

/// The network described by the run config with default small input when no
/// network section is given.
NetworkConfig default_network(const DataSpec& data);

/// Throws ConfigError when an IDX path is missing or unreadable.
void check_data_paths(const DataSpec& d);

/// Train and test sets after class filtering, downscaling and subsetting.
std::pair<Dataset, Dataset> load_datasets(const DataSpec& d, std::uint64_t seed);

/// Grid for the explore command.
GridSpec grid_from_run_config(const RunConfig& c);

}  // namespace snnr
