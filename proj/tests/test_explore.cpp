#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include <gtest/gtest.h>

#include "snnr/data.hpp"
#include "snnr/error.hpp"
#include "snnr/explore.hpp"
#include "snnr/rng.hpp"

using namespace snnr;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name)
        : path(std::filesystem::temp_directory_path() / ("snnr_test_" + name)) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

GridSpec blob_grid() {
    GridSpec g;
    g.v_th_values = {0.5, 1.0};
    g.t_values = {8, 16};
    g.epsilons = {0.0, 0.1, 0.3};
    g.network.input_shape = {16};
    g.network.layers = {LayerSpec::dense(16), LayerSpec::dense(2)};
    g.train.epochs = 3;
    g.train.learning_rate = 0.01;
    g.attack.iterations = 5;
    g.eval_size = 40;
    g.seed = 21;
    return g;
}

Dataset blob_train() {
    return make_blobs(50, 2, 16, 0.8, 1);
}

Dataset blob_test() {
    return make_blobs(30, 2, 16, 0.8, 2);
}

}  // namespace

TEST(Gate, BoundaryIsInclusive) {
    EXPECT_EQ(kDefaultAccuracyThreshold, 0.70);
    EXPECT_TRUE(learnability_gate(0.70, 0.70));
    EXPECT_FALSE(learnability_gate(std::nextafter(0.70, 0.0), 0.70));
}

TEST(Gate, LowAccuracyCellsAreNotLearnable) {
    EXPECT_FALSE(learnability_gate(0.16, kDefaultAccuracyThreshold));
}

TEST(Gate, HighAccuracyCellsAreLearnable) {
    EXPECT_TRUE(learnability_gate(0.95, kDefaultAccuracyThreshold));
}

TEST(Robustness, ZeroBudgetEqualsCleanAccuracy) {
    const Dataset data = make_blobs(20, 2, 16, 0.3, 3);
    for (std::uint64_t k = 0; k < 10; ++k) {
        NetworkConfig cfg;
        cfg.input_shape = {16};
        cfg.layers = {LayerSpec::dense(8), LayerSpec::dense(2)};
        cfg.time_window = 8 + k;
        cfg.lif.v_th = 0.2 + 0.1 * static_cast<double>(k);
        const Network net = Network::initialize(cfg, k);
        EXPECT_EQ(robustness(net, data, AttackConfig::for_epsilon(0.0), k),
                  evaluate(net, data, k));
    }
}

TEST(Robustness, AllWrongNetScoresZero) {
    NetworkConfig cfg;
    cfg.input_shape = {4};
    cfg.layers = {LayerSpec::dense(2)};
    cfg.mode = NeuronMode::relu_static;
    Network net = Network::initialize(cfg, 0);
    net.params[0].weight = Tensor({2, 4});
    net.params[0].bias = Tensor({2}, {1.0, 0.0});  // always class 0
    Dataset d = make_blobs(10, 2, 4, 0.8, 0);
    for (auto& y : d.labels) y = 1;
    for (double eps : {0.0, 0.1, 0.5}) {
        EXPECT_EQ(robustness(net, d, AttackConfig::for_epsilon(eps, 3), 0), 0.0);
    }
}

TEST(Robustness, HandBuiltFixtureWithThreeSuccesses) {
    // s₀ = 4c + 8 and s₁ = 12 − 4c on a constant image c, so the margin is
    // 8c − 4 and ‖w₀ − w₁‖₁ = 8: the attack flips iff c − 0.5 < ε.
    NetworkConfig cfg;
    cfg.input_shape = {4};
    cfg.layers = {LayerSpec::dense(2)};
    cfg.mode = NeuronMode::relu_static;
    Network net = Network::initialize(cfg, 0);
    net.params[0].weight = Tensor({2, 4}, {1, 1, 1, 1, -1, -1, -1, -1});
    net.params[0].bias = Tensor({2}, {8.0, 12.0});
    Dataset d;
    d.num_classes = 2;
    for (double c : {0.55, 0.58, 0.59, 0.62, 0.65, 0.67, 0.7, 0.72, 0.75, 0.8}) {
        d.images.push_back(Tensor({4}, c));
        d.labels.push_back(0);
    }
    ASSERT_EQ(evaluate(net, d), 1.0);
    EXPECT_DOUBLE_EQ(robustness(net, d, AttackConfig::for_epsilon(0.1), 0), 0.7);
}

TEST(Robustness, EmptyDatasetThrows) {
    NetworkConfig cfg;
    cfg.input_shape = {2};
    cfg.layers = {LayerSpec::dense(2)};
    EXPECT_THROW(robustness(Network::initialize(cfg, 0), Dataset{}, AttackConfig{}, 0), DomainError);
}

TEST(AttackSample, ReportsDistanceAndOutcome) {
    NetworkConfig cfg;
    cfg.input_shape = {16};
    cfg.layers = {LayerSpec::dense(2)};
    cfg.time_window = 8;
    const Network net = Network::initialize(cfg, 4);
    const Dataset d = make_blobs(3, 2, 16, 0.8, 4);
    for (std::size_t n = 0; n < d.size(); ++n) {
        const auto out = attack_sample(net, d.images[n], d.labels[n], n, AttackConfig::for_epsilon(0.2, 4), 5);
        EXPECT_LE(out.linf, 0.2);
        EXPECT_EQ(out.success, out.adv_pred != d.labels[n]);
    }
}

TEST(GridSpec, Validation) {
    EXPECT_NO_THROW(blob_grid().validate());
    auto g = blob_grid();
    g.epsilons.clear();
    EXPECT_THROW(g.validate(), ConfigError);
    g = blob_grid();
    g.t_values = {16, 8};
    EXPECT_THROW(g.validate(), ConfigError);
    g = blob_grid();
    g.v_th_values = {0.0, 1.0};
    EXPECT_THROW(g.validate(), ConfigError);
    g = blob_grid();
    g.a_th = 1.0;
    EXPECT_THROW(g.validate(), ConfigError);
    g = blob_grid();
    g.network.layers.clear();
    EXPECT_THROW(g.validate(), ConfigError);
}

TEST(GridSpec, CellSeedsAreDistinct) {
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < 10; ++i) {
        for (std::size_t j = 0; j < 10; ++j) seeds.insert(cell_seed(7, i, j));
    }
    EXPECT_EQ(seeds.size(), 100u);
    EXPECT_NE(cell_seed(7, 0, 0), cell_seed(8, 0, 0));
}

TEST(Explore, SingleCellZeroEpsilonIsCleanAccuracy) {
    GridSpec g = blob_grid();
    g.v_th_values = {0.5};
    g.t_values = {16};
    g.epsilons = {0.0};
    const auto r = explore(g, blob_train(), blob_test());
    ASSERT_EQ(r.cells.size(), 1u);
    const auto& c = r.cells[0];
    EXPECT_EQ(c.v_th, 0.5);
    EXPECT_EQ(c.t, 16u);
    if (c.learnable) {
        ASSERT_EQ(c.robustness.size(), 1u);
        EXPECT_EQ(c.robustness[0].second, c.clean_accuracy);
    }
    EXPECT_TRUE(c.learnable) << "accuracy " << c.clean_accuracy;
}

TEST(Explore, TwoByTwoGridIsCompleteAndReproducible) {
    const GridSpec g = blob_grid();
    const auto a = explore(g, blob_train(), blob_test());
    ASSERT_EQ(a.cells.size(), 4u);
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            const auto& c = a.cell(i, j);
            EXPECT_EQ(c.i, i);
            EXPECT_EQ(c.j, j);
            EXPECT_EQ(c.v_th, g.v_th_values[i]);
            EXPECT_EQ(c.t, g.t_values[j]);
            EXPECT_GE(c.clean_accuracy, 0.0);
            EXPECT_LE(c.clean_accuracy, 1.0);
            EXPECT_EQ(c.learnable, c.clean_accuracy >= g.a_th);
            EXPECT_EQ(c.robustness.size(), c.learnable ? g.epsilons.size() : 0u);
            EXPECT_GT(c.wall_time_s, 0.0);
            EXPECT_TRUE(c.error.empty());
        }
    }
    const auto b = explore(g, blob_train(), blob_test());
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Explore, ThreadsDoNotChangeResults) {
    const GridSpec g = blob_grid();
    const auto one = explore(g, blob_train(), blob_test());
    ExploreOptions opt;
    opt.threads = 3;
    const auto many = explore(g, blob_train(), blob_test(), opt);
    EXPECT_EQ(to_json(one).dump(), to_json(many).dump());
}

TEST(Explore, ResumedSweepEqualsUninterrupted) {
    const GridSpec g = blob_grid();
    const auto full = explore(g, blob_train(), blob_test());

    TempDir dir("resume");
    ExploreOptions opt;
    opt.cell_dir = dir.path / "cells";
    opt.max_new_cells = 1;
    EXPECT_THROW(explore(g, blob_train(), blob_test(), opt), SweepInterrupted);
    EXPECT_TRUE(std::filesystem::exists(dir.path / "cells" / "cell_0_0.json"));
    EXPECT_FALSE(std::filesystem::exists(dir.path / "cells" / "cell_0_1.json"));

    std::size_t reused = 0, computed = 0;
    opt.max_new_cells = std::numeric_limits<std::size_t>::max();
    opt.on_cell = [&](const CellResult&, bool was_reused) { ++(was_reused ? reused : computed); };
    const auto resumed = explore(g, blob_train(), blob_test(), opt);
    EXPECT_EQ(reused, 1u);
    EXPECT_EQ(computed, 3u);
    EXPECT_EQ(to_json(resumed).dump(), to_json(full).dump());
}

TEST(Explore, TrainingFailureIsRecordedPerCell) {
    GridSpec g = blob_grid();
    g.v_th_values = {0.5, 1.0, 1.5};
    g.t_values = {8, 16, 32};
    g.network.mode = NeuronMode::relu_static;
    // Adam moves every live weight by about ±lr, so the next forward pass
    // overflows. Cells whose relus all die first see a finite loss instead.
    g.train.learning_rate = 1e308;
    const auto r = explore(g, blob_train(), blob_test());
    ASSERT_EQ(r.cells.size(), 9u);
    std::size_t failed = 0;
    for (const auto& c : r.cells) {
        if (c.error.empty()) continue;
        ++failed;
        EXPECT_FALSE(c.learnable);
        EXPECT_EQ(c.clean_accuracy, 0.0);
        EXPECT_TRUE(c.robustness.empty());
    }
    EXPECT_GE(failed, 1u);
}

TEST(Explore, EmptyInputsThrow) {
    EXPECT_THROW(explore(blob_grid(), Dataset{}, blob_test()), DomainError);
    EXPECT_THROW(explore(blob_grid(), blob_train(), Dataset{}), DomainError);
}

TEST(Explore, EvaluationSubsetSizes) {
    const Dataset t = blob_test();
    EXPECT_EQ(evaluation_subset(t, 0, 1), t);
    EXPECT_EQ(evaluation_subset(t, 1000, 1), t);
    EXPECT_EQ(evaluation_subset(t, 10, 1).size(), 10u);
    EXPECT_EQ(evaluation_subset(t, 10, 1), evaluation_subset(t, 10, 1));
}
