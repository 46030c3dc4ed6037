// snnr: train, attack, explore and report from one JSON run config.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "snnr/run_config.hpp"

namespace fs = std::filesystem;
using namespace snnr;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct ConfigFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonArgs {
    std::string config;
    std::vector<std::string> overrides;
};

RunConfig load(const CommonArgs& args) {
    try {
        std::optional<fs::path> file;
        if (!args.config.empty()) file = args.config;
        return load_run_config(file, args.overrides);
    } catch (const Error& e) {
        throw ConfigFailure(e.what());
    }
}

void check_paths(const DataSpec& d) {
    try {
        check_data_paths(d);
    } catch (const Error& e) {
        throw ConfigFailure(e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

int cmd_train(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    check_paths(cfg.data);
    auto [train_set, test_set] = load_datasets(cfg.data, cfg.seed);
    ensure_dir(cfg.output_dir);

    Network net = Network::initialize(cfg.network, cfg.train.seed);
    const TrainResult result = train(std::move(net), train_set, cfg.train, &test_set, cfg.seed);
    const double test_acc = evaluate(result.net, test_set, cfg.seed);

    std::string log = "epoch,train_acc,test_acc,loss\n";
    for (const EpochRecord& r : result.history) {
        log += std::to_string(r.epoch) + "," + format_number(r.train_accuracy) + "," +
               format_number(r.test_accuracy) + "," + format_number(r.loss) + "\n";
    }
    write_text(cfg.output_dir / "train_log.csv", log);

    Checkpoint ckpt{result.net, test_acc, cfg.seed,
                    {{"command", "train"},
                     {"mode", std::string(to_string(cfg.network.mode))},
                     {"software", version_string()},
                     {"train", to_json(cfg.train)},
                     {"train_size", train_set.size()},
                     {"test_size", test_set.size()}}};
    save_checkpoint(cfg.output_dir / "checkpoint.json", ckpt);
    std::cout << "trained " << to_string(cfg.network.mode) << " network ("
              << result.net.parameter_count() << " parameters) for " << cfg.train.epochs
              << " epochs; test accuracy " << format_number(test_acc) << "\n"
              << "wrote " << (cfg.output_dir / "checkpoint.json").string() << " and "
              << (cfg.output_dir / "train_log.csv").string() << "\n";
    return 0;
}

int cmd_attack(const CommonArgs& args) {
    const RunConfig cfg = load(args);
    check_paths(cfg.data);
    const fs::path ckpt_path = cfg.attack.checkpoint.value_or(cfg.output_dir / "checkpoint.json");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const Network& net = ckpt.net;

    auto [train_set, test_set] = load_datasets(cfg.data, cfg.seed);
    (void)train_set;
    if (cfg.attack.eval_size > 0) {
        test_set = evaluation_subset(test_set, cfg.attack.eval_size, cfg.seed);
    }
    if (test_set.empty() || test_set.images.front().shape() != net.config.input_shape) {
        throw DimensionError("checkpoint input shape " + shape_string(net.config.input_shape) +
                             " does not match the data");
    }
    if (test_set.num_classes > net.config.num_classes()) {
        throw DimensionError("checkpoint has fewer classes than the data");
    }
    ensure_dir(cfg.output_dir);

    std::string curve = "epsilon,accuracy,successes,samples\n";
    std::string dump = "sample_id,clean_label,clean_pred,adv_pred,epsilon,linf_achieved,success\n";
    for (std::size_t k = 0; k < cfg.attack.epsilons.size(); ++k) {
        const double eps = cfg.attack.epsilons[k];
        AttackConfig ac = cfg.attack.schedule.config(eps);
        if (cfg.attack.method == AttackMethod::fgsm) {
            ac.iterations = 1;
            ac.alpha = eps > 0.0 ? eps : 1.0;
            ac.random_start = false;
        }
        std::size_t successes = 0;
        std::vector<Tensor> adversarial;
        for (std::size_t n = 0; n < test_set.size(); ++n) {
            const AttackOutcome o =
                attack_sample(net, test_set.images[n], test_set.labels[n], n, ac, ckpt.eval_seed);
            successes += o.success;
            dump += std::to_string(n) + "," + std::to_string(test_set.labels[n]) + "," +
                    std::to_string(o.clean_pred) + "," + std::to_string(o.adv_pred) + "," +
                    format_number(eps) + "," + format_number(o.linf) + "," +
                    (o.success ? "1" : "0") + "\n";
            if (cfg.attack.dump_images) adversarial.push_back(o.adversarial);
        }
        const double acc = static_cast<double>(test_set.size() - successes) /
                           static_cast<double>(test_set.size());
        curve += format_number(eps) + "," + format_number(acc) + "," + std::to_string(successes) +
                 "," + std::to_string(test_set.size()) + "\n";
        std::cerr << "eps=" << format_number(eps) << " accuracy=" << format_number(acc) << "\n";
        if (cfg.attack.dump_images) {
            write_file(cfg.output_dir / ("adv_" + std::to_string(k) + "-images-idx3-ubyte"),
                       encode_idx_images(adversarial));
        }
    }
    if (cfg.attack.dump_images) {
        write_file(cfg.output_dir / "adv-labels-idx1-ubyte", encode_idx_labels(test_set.labels));
    }
    write_text(cfg.output_dir / "attack_curve.csv", curve);
    write_text(cfg.output_dir / "attack_dump.csv", dump);
    std::cout << curve;
    return 0;
}

int cmd_explore(const CommonArgs& args, std::optional<std::size_t> max_cells) {
    const RunConfig cfg = load(args);
    GridSpec grid;
    try {
        grid = grid_from_run_config(cfg);
    } catch (const Error& e) {
        throw ConfigFailure(e.what());
    }
    check_paths(cfg.data);
    auto [train_set, test_set] = load_datasets(cfg.data, cfg.seed);
    ensure_dir(cfg.output_dir);

    ExploreOptions options;
    options.threads = cfg.threads;
    options.cell_dir = cfg.output_dir / "cells";
    if (max_cells) options.max_new_cells = *max_cells;
    options.on_cell = [](const CellResult& c, bool reused) {
        std::cerr << (reused ? "reused" : "done") << " cell (" << c.i << "," << c.j
                  << ") V_th=" << format_number(c.v_th) << " T=" << c.t
                  << " acc=" << format_number(c.clean_accuracy)
                  << (c.learnable ? "" : " (not learnable)") << "\n";
    };
    const auto started = std::chrono::steady_clock::now();
    const ExplorationResult result = explore(grid, train_set, test_set, options);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    const auto written = write_report(result, cfg.output_dir);
    write_json_file(cfg.output_dir / "run_info.json",
                    {{"software", version_string()},
                     {"timestamp", utc_timestamp()},
                     {"wall_time_s", wall},
                     {"threads", cfg.threads},
                     {"config", to_json(cfg)}});
    std::cout << summary_text(result);
    for (const auto& p : written) std::cout << "wrote " << p.string() << "\n";
    return 0;
}

std::vector<CurvePoint> baseline_from_checkpoint(const RunConfig& cfg, const GridSpec& grid,
                                                 const fs::path& path, const fs::path& out_dir) {
    check_paths(cfg.data);
    const Checkpoint ckpt = load_checkpoint(path);
    auto [train_set, test_set] = load_datasets(cfg.data, cfg.seed);
    (void)train_set;
    const Dataset eval_set = evaluation_subset(test_set, grid.eval_size, grid.seed);
    if (eval_set.images.front().shape() != ckpt.net.config.input_shape) {
        throw DimensionError("baseline checkpoint input shape does not match the data");
    }
    std::vector<CurvePoint> curve;
    std::string csv = "epsilon,accuracy\n";
    for (double eps : grid.epsilons) {
        const double acc = robustness(ckpt.net, eval_set, grid.attack.config(eps), grid.seed);
        curve.push_back({eps, acc});
        csv += format_number(eps) + "," + format_number(acc) + "\n";
    }
    write_text(out_dir / "baseline_curve.csv", csv);
    return curve;
}

int cmd_report(const CommonArgs& args, const std::string& results_arg) {
    const RunConfig cfg = load(args);
    const fs::path dir = !results_arg.empty() ? fs::path(results_arg)
                                              : cfg.report.results_dir.value_or(cfg.output_dir);
    const ExplorationResult result = exploration_result_from_json(read_json_file(dir / kResultJson));

    std::vector<GapEntry> gaps;
    if (cfg.report.baseline_curve) {
        gaps = robustness_gaps(result, read_accuracy_curve(*cfg.report.baseline_curve));
    } else if (cfg.report.baseline_checkpoint) {
        gaps = robustness_gaps(
            result, baseline_from_checkpoint(cfg, result.grid, *cfg.report.baseline_checkpoint, dir));
    }
    write_report(result, dir);
    const std::string summary = summary_text(result, gaps);
    write_text(dir / "summary.txt", summary);
    std::cout << summary;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking network training, adversarial attacks and (V_th, T) robustness sweeps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    CommonArgs args;
    auto add_common = [&args](CLI::App* sub) {
        sub->add_option("-c,--config", args.config, "JSON run config")->check(CLI::ExistingFile);
        sub->add_option("--set", args.overrides, "Override a config key, e.g. --set train.epochs=5")
            ->allow_extra_args(false);
    };

    auto* train_cmd = app.add_subcommand("train", "Train one network; writes checkpoint.json and train_log.csv");
    add_common(train_cmd);

    auto* attack_cmd = app.add_subcommand(
        "attack", "Attack a checkpoint over an epsilon list; writes attack_curve.csv and attack_dump.csv");
    add_common(attack_cmd);

    auto* explore_cmd = app.add_subcommand(
        "explore", "Run the (V_th, T) grid; resumable from <output_dir>/cells");
    add_common(explore_cmd);
    std::optional<std::size_t> max_cells;
    explore_cmd->add_option("--max-cells", max_cells, "Stop after computing this many new cells");

    auto* report_cmd = app.add_subcommand(
        "report", "Regenerate report files from result.json and print a summary");
    add_common(report_cmd);
    std::string results_dir;
    report_cmd->add_option("results_dir", results_dir, "Directory holding result.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*train_cmd) return cmd_train(args);
        if (*attack_cmd) return cmd_attack(args);
        if (*explore_cmd) return cmd_explore(args, max_cells);
        if (*report_cmd) return cmd_report(args, results_dir);
    } catch (const ConfigFailure& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const SweepInterrupted& e) {
        std::cerr << "incomplete: " << e.what() << "; rerun to resume\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitRuntime;
}
