#include "snnr/explore.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "snnr/rng.hpp"

#ifndef SNNR_VERSION
#define SNNR_VERSION "0.1.0"
#endif

namespace snnr {

bool learnability_gate(double accuracy, double a_th) {
    return accuracy >= a_th;
}

std::string version_string() {
    return std::string("snnr ") + SNNR_VERSION;
}

AttackOutcome attack_sample(const Network& net, const Tensor& x, std::size_t y, std::size_t index,
                            const AttackConfig& cfg, std::uint64_t eval_seed) {
    const std::uint64_t enc = eval_encode_seed(eval_seed, index);
    AttackOutcome out;
    out.clean_pred = predict(net, x, enc);
    out.adversarial =
        pgd(net, x, y, cfg, enc, derive_seed(eval_seed, SeedStream::attack_start, {index}));
    out.adv_pred = predict(net, out.adversarial, enc);
    out.linf = max_abs_diff(out.adversarial, x);
    out.success = out.adv_pred != y;
    return out;
}

double robustness(const Network& net, const Dataset& data, const AttackConfig& cfg,
                  std::uint64_t eval_seed) {
    if (data.empty()) throw DomainError("robustness: empty dataset");
    cfg.validate();
    std::size_t adv = 0;
    for (std::size_t n = 0; n < data.size(); ++n) {
        const std::uint64_t enc = eval_encode_seed(eval_seed, n);
        const Tensor x_adv = pgd(net, data.images[n], data.labels[n], cfg, enc,
                                 derive_seed(eval_seed, SeedStream::attack_start, {n}));
        if (attack_success(net, x_adv, data.labels[n], enc)) ++adv;
    }
    // (|D| − Adv)/|D| rather than 1 − Adv/|D| so ε = 0 matches evaluate() bit for bit.
    return static_cast<double>(data.size() - adv) / static_cast<double>(data.size());
}

void GridSpec::validate() const {
    auto ascending = [](const auto& v, const char* name) {
        if (v.empty()) throw ConfigError(std::string("grid: ") + name + " must not be empty");
        if (!std::is_sorted(v.begin(), v.end()) ||
            std::adjacent_find(v.begin(), v.end()) != v.end()) {
            throw ConfigError(std::string("grid: ") + name + " must be strictly ascending");
        }
    };
    ascending(v_th_values, "v_th_values");
    ascending(t_values, "t_values");
    ascending(epsilons, "epsilons");
    for (double v : v_th_values) {
        if (!(v > 0.0)) throw ConfigError("grid: v_th values must be positive");
    }
    if (t_values.front() == 0) throw ConfigError("grid: time windows must be at least 1");
    if (epsilons.front() < 0.0) throw ConfigError("grid: epsilons must be non-negative");
    if (!(a_th > 0.0 && a_th < 1.0)) throw ConfigError("grid: a_th must lie in (0, 1)");
    if (attack.iterations == 0 || !(attack.alpha_factor > 0.0)) {
        throw ConfigError("grid: attack needs iterations ≥ 1 and alpha_factor > 0");
    }
    try {
        network.validate();
        train.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("grid: ") + e.what());
    }
}

const CellResult& ExplorationResult::cell(std::size_t i, std::size_t j) const {
    return cells.at(i * grid.t_values.size() + j);
}

std::uint64_t cell_seed(std::uint64_t grid_seed, std::size_t i, std::size_t j) {
    return derive_seed(grid_seed, SeedStream::cell, {i, j});
}

Dataset evaluation_subset(const Dataset& test, std::size_t eval_size, std::uint64_t seed) {
    if (eval_size == 0 || eval_size >= test.size()) return test;
    return subset(test, eval_size, seed);
}

CellResult run_cell(const GridSpec& grid, std::size_t i, std::size_t j, const Dataset& train_set,
                    const Dataset& eval_set, Network* trained) {
    const auto started = std::chrono::steady_clock::now();
    CellResult c;
    c.i = i;
    c.j = j;
    c.v_th = grid.v_th_values.at(i);
    c.t = grid.t_values.at(j);

    const std::uint64_t seed = cell_seed(grid.seed, i, j);
    NetworkConfig cfg = grid.network;
    cfg.lif.v_th = c.v_th;
    cfg.time_window = c.t;
    TrainConfig tc = grid.train;
    tc.seed = seed;

    auto finish = [&] {
        c.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        return c;
    };

    Network net;
    try {
        net = train(Network::initialize(cfg, seed), train_set, tc).net;
        c.clean_accuracy = evaluate(net, eval_set, grid.seed);
    } catch (const TrainingError& e) {
        c.clean_accuracy = 0.0;
        c.learnable = false;
        c.error = e.what();
        return finish();
    }
    c.learnable = learnability_gate(c.clean_accuracy, grid.a_th);
    if (c.learnable) {
        for (double eps : grid.epsilons) {
            c.robustness.emplace_back(eps, robustness(net, eval_set, grid.attack.config(eps), grid.seed));
        }
    }
    if (trained) *trained = std::move(net);
    return finish();
}

namespace {

std::filesystem::path cell_json_path(const std::filesystem::path& dir, std::size_t i,
                                     std::size_t j) {
    return dir / ("cell_" + std::to_string(i) + "_" + std::to_string(j) + ".json");
}

std::filesystem::path cell_checkpoint_path(const std::filesystem::path& dir, std::size_t i,
                                           std::size_t j) {
    return dir / ("cell_" + std::to_string(i) + "_" + std::to_string(j) + ".ckpt.json");
}

std::optional<CellResult> load_cell(const std::filesystem::path& path, const GridSpec& grid,
                                    std::size_t i, std::size_t j) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        CellResult c = cell_result_from_json(read_json_file(path));
        if (c.i != i || c.j != j || c.v_th != grid.v_th_values[i] || c.t != grid.t_values[j]) {
            return std::nullopt;
        }
        if (c.learnable && c.robustness.size() != grid.epsilons.size()) return std::nullopt;
        return c;
    } catch (const Error&) {
        return std::nullopt;
    }
}

}  // namespace

ExplorationResult explore(const GridSpec& grid, const Dataset& train_set, const Dataset& test_set,
                          const ExploreOptions& options) {
    grid.validate();
    if (train_set.empty()) throw DomainError("explore: empty training set");
    if (test_set.empty()) throw DomainError("explore: empty test set");
    const Dataset eval_set = evaluation_subset(test_set, grid.eval_size, grid.seed);

    const std::size_t n = grid.v_th_values.size(), m = grid.t_values.size();
    ExplorationResult result;
    result.grid = grid;
    result.version = version_string();
    result.cells.resize(n * m);

    std::vector<std::size_t> pending;
    for (std::size_t idx = 0; idx < n * m; ++idx) {
        const std::size_t i = idx / m, j = idx % m;
        if (options.cell_dir) {
            if (auto c = load_cell(cell_json_path(*options.cell_dir, i, j), grid, i, j)) {
                result.cells[idx] = std::move(*c);
                if (options.on_cell) options.on_cell(result.cells[idx], true);
                continue;
            }
        }
        pending.push_back(idx);
    }
    if (options.cell_dir) std::filesystem::create_directories(*options.cell_dir);

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> started{0};
    std::mutex mu;
    std::exception_ptr failure;
    bool interrupted = false;

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= pending.size()) return;
            if (started.fetch_add(1) >= options.max_new_cells) {
                std::lock_guard lock(mu);
                interrupted = true;
                return;
            }
            const std::size_t idx = pending[k];
            const std::size_t i = idx / m, j = idx % m;
            try {
                Network net;
                CellResult c = run_cell(grid, i, j, train_set, eval_set, &net);
                if (options.cell_dir) {
                    if (!net.params.empty()) {
                        Checkpoint ckpt{net, c.clean_accuracy, grid.seed,
                                        {{"cell", {{"i", i}, {"j", j}}}, {"version", result.version}}};
                        save_checkpoint(cell_checkpoint_path(*options.cell_dir, i, j), ckpt);
                    }
                    write_json_file(cell_json_path(*options.cell_dir, i, j), to_json(c, true));
                }
                std::lock_guard lock(mu);
                result.cells[idx] = std::move(c);
                if (options.on_cell) options.on_cell(result.cells[idx], false);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next.store(pending.size());
                return;
            }
        }
    };

    const std::size_t threads = std::max<std::size_t>(1, std::min(options.threads, pending.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    if (interrupted) {
        throw SweepInterrupted("sweep stopped after " + std::to_string(options.max_new_cells) +
                               " new cells");
    }
    return result;
}

}  // namespace snnr
