#include <cmath>

#include <gtest/gtest.h>

#include "lif_traces.hpp"
#include "oracles.hpp"
#include "snnr/error.hpp"
#include "snnr/rng.hpp"
#include "snnr/simulate.hpp"
#include "snnr/snn.hpp"

using namespace snnr;

namespace {

Network single_dense(double w, double v_th, double leak, std::size_t T) {
    NetworkConfig cfg;
    cfg.input_shape = {1};
    cfg.layers = {LayerSpec::dense(1)};
    cfg.lif = LifParams{v_th, leak, ResetMode::subtract_threshold, 0.0};
    cfg.time_window = T;
    Network net = Network::initialize(cfg, 0);
    net.params[0].weight = Tensor({1, 1}, {w});
    net.params[0].bias = Tensor({1}, {0.0});
    return net;
}

NetworkConfig small_conv_config(NeuronMode mode) {
    NetworkConfig cfg;
    cfg.input_shape = {1, 6, 6};
    cfg.layers = {LayerSpec::conv(3, 3, 1, 1), LayerSpec::pool(2, 2), LayerSpec::dense(5),
                  LayerSpec::dense(3)};
    cfg.mode = mode;
    cfg.time_window = 12;
    cfg.lif.v_th = 0.5;
    return cfg;
}

Tensor random_image(const Shape& shape, std::uint64_t seed) {
    Tensor x(shape);
    Rng rng(seed);
    for (double& v : x.data()) v = uniform01(rng);
    return x;
}

}  // namespace

TEST(LifStep, QuiescentNeuronStaysAtRest) {
    const LifParams p;
    const auto r = lif_step(rest_state({3}, p), Tensor({3}), p);
    EXPECT_EQ(r.spikes, Tensor({3}));
    EXPECT_EQ(r.next.v, Tensor({3}));
}

TEST(LifStep, WeightedSumCrossesThreshold) {
    const LifParams p{1.0, 1.0, ResetMode::to_zero, 0.0};
    // Two presynaptic spikes through weights 0.6 and 0.5.
    const Tensor current = matmul(Tensor({1, 2}, {0.6, 0.5}), Tensor({2, 1}, {1.0, 1.0}));
    const auto r = lif_step(rest_state({1, 1}, p), current, p);
    EXPECT_EQ(r.spikes[0], 1.0);
    EXPECT_EQ(r.next.v[0], 0.0);
}

TEST(LifStep, LeakWithoutSpike) {
    const LifParams p{1.0, 0.5, ResetMode::subtract_threshold, 0.0};
    const auto r = lif_step(LifState{Tensor({1}, {0.9})}, Tensor({1}, {0.1}), p);
    EXPECT_EQ(r.spikes[0], 0.0);
    EXPECT_DOUBLE_EQ(r.next.v[0], 0.55);
}

TEST(LifStep, ShapeMismatchThrows) {
    const LifParams p;
    EXPECT_THROW(lif_step(rest_state({2}, p), Tensor({3}), p), DimensionError);
}

TEST(LifStep, InvalidParamsThrow) {
    EXPECT_THROW((LifParams{0.0, 0.9}.validate()), DomainError);
    EXPECT_THROW((LifParams{1.0, 0.0}.validate()), DomainError);
    EXPECT_THROW((LifParams{1.0, 1.5}.validate()), DomainError);
    EXPECT_NO_THROW((LifParams{1.0, 1.0}.validate()));
}

TEST(LifStep, ToZeroResetPutsSpikersAtRest) {
    const LifParams p{0.7, 0.8, ResetMode::to_zero, 0.1};
    Rng rng(3);
    LifState s = rest_state({64}, p);
    for (int step = 0; step < 20; ++step) {
        Tensor cur({64});
        for (double& c : cur.data()) c = uniform(rng, -0.2, 0.6);
        const auto r = lif_step(s, cur, p);
        for (std::size_t i = 0; i < 64; ++i) {
            EXPECT_TRUE(r.spikes[i] == 0.0 || r.spikes[i] == 1.0);
            if (r.spikes[i] == 1.0) {
                EXPECT_EQ(r.next.v[i], 0.1);
            }
        }
        s = r.next;
    }
}

TEST(LifStep, HandSimulatedTraces) {
    for (const auto& tr : hand_lif_traces()) {
        SCOPED_TRACE(tr.name);
        LifState s = rest_state({1}, tr.params);
        for (std::size_t t = 0; t < 10; ++t) {
            const auto r = lif_step(s, Tensor({1}, {tr.current[t]}), tr.params);
            EXPECT_EQ(r.spikes[0], tr.spikes[t]) << "step " << t;
            EXPECT_EQ(r.next.v[0], tr.membrane[t]) << "step " << t;
            s = r.next;
        }
    }
}

TEST(RateEncode, ZeroImageGivesNoSpikes) {
    const auto train = rate_encode(Tensor({2, 3}), 17, 5);
    ASSERT_EQ(train.window(), 17u);
    for (const auto& s : train.steps) EXPECT_EQ(s, Tensor({2, 3}));
}

TEST(RateEncode, FullImageSpikesEveryStep) {
    const auto train = rate_encode(Tensor({4}, 1.0), 9, 5);
    for (const auto& s : train.steps) EXPECT_EQ(s, Tensor({4}, 1.0));
}

TEST(RateEncode, BinomialMeanAtHalfRate) {
    const std::size_t T = 64, seeds = 1000;
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
        for (const auto& s : rate_encode(Tensor({1}, 0.5), T, seed).steps) total += s[0];
    }
    const double mean = total / static_cast<double>(seeds);
    EXPECT_LE(std::abs(mean - 32.0), 3.0 * std::sqrt(64 * 0.25));
}

TEST(RateEncode, BinaryAndDeterministic) {
    const Tensor img = random_image({1, 4, 4}, 9);
    const auto a = rate_encode(img, 20, 42);
    const auto b = rate_encode(img, 20, 42);
    for (std::size_t t = 0; t < 20; ++t) {
        EXPECT_EQ(a.steps[t], b.steps[t]);
        for (double v : a.steps[t].values()) EXPECT_TRUE(v == 0.0 || v == 1.0);
    }
}

TEST(RateEncode, HigherPixelNeverSpikesLessUnderSameSeed) {
    // With a shared seed a step spikes iff its uniform draw is below p, so
    // raising p can only add spikes; expected counts p·T are monotone too.
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto lo = rate_encode(Tensor({1}, 0.3), 32, seed);
        const auto hi = rate_encode(Tensor({1}, 0.6), 32, seed);
        for (std::size_t t = 0; t < 32; ++t) EXPECT_LE(lo.steps[t][0], hi.steps[t][0]);
    }
}

TEST(RateEncode, RejectsOutOfRangeAndEmptyWindow) {
    EXPECT_THROW(rate_encode(Tensor({2}, {0.5, 1.2}), 4, 0), DomainError);
    EXPECT_THROW(rate_encode(Tensor({2}, {-0.1, 0.2}), 4, 0), DomainError);
    EXPECT_THROW(rate_encode(Tensor({2}, {0.1, std::nan("")}), 4, 0), DomainError);
    EXPECT_THROW(rate_encode(Tensor({2}, 0.5), 0, 0), DomainError);
}

TEST(Forward, ZeroImageGivesZeroScores) {
    const Network net = Network::initialize(small_conv_config(NeuronMode::lif), 1);
    // Biases can drive spikes on their own; silence them for this check.
    Network quiet = net;
    for (auto& p : quiet.params) {
        if (!p.bias.empty()) p.bias = Tensor(p.bias.shape());
    }
    EXPECT_EQ(forward(quiet, Tensor({1, 6, 6}), 3), Tensor({3}));
}

TEST(Forward, ReluStaticHandSetDense) {
    NetworkConfig cfg;
    cfg.input_shape = {2};
    cfg.layers = {LayerSpec::dense(2)};
    cfg.mode = NeuronMode::relu_static;
    Network net = Network::initialize(cfg, 0);
    net.params[0].weight = Tensor({2, 2}, {1, 0, 0, -1});
    net.params[0].bias = Tensor({2});
    EXPECT_EQ(forward(net, Tensor({2}, {1, 2}), 0), Tensor({2}, {1, 0}));
}

TEST(Forward, SingleNeuronTenStepTrace) {
    const Network net = single_dense(0.3, 1.0, 1.0, 10);
    // Cumulative current 0.3·k reaches 1 at k = 4, 7 and 10.
    EXPECT_DOUBLE_EQ(forward(net, Tensor({1}, {1.0}), 0)[0], 0.3);
}

TEST(Forward, ScoresAreRatesInUnitInterval) {
    const Network net = Network::initialize(small_conv_config(NeuronMode::lif), 2);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Tensor scores = forward(net, random_image({1, 6, 6}, s), s);
        for (double v : scores.values()) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
            EXPECT_NEAR(v * 12, std::round(v * 12), 1e-9);
        }
    }
}

TEST(Forward, BitForBitDeterministic) {
    const Network net = Network::initialize(small_conv_config(NeuronMode::lif), 4);
    const Tensor x = random_image({1, 6, 6}, 5);
    EXPECT_EQ(forward(net, x, 11), forward(net, x, 11));
}

TEST(Forward, ShapeMismatchThrows) {
    const Network net = Network::initialize(small_conv_config(NeuronMode::lif), 4);
    EXPECT_THROW(forward(net, Tensor({1, 5, 5}), 0), DimensionError);
}

TEST(Forward, MatchesIndependentResimulation) {
    for (std::uint64_t k = 0; k < 20; ++k) {
        NetworkConfig cfg = small_conv_config(k % 3 == 2 ? NeuronMode::relu_static : NeuronMode::lif);
        cfg.lif.reset = k % 2 ? ResetMode::to_zero : ResetMode::subtract_threshold;
        cfg.encoder = k % 4 == 1 ? EncoderKind::constant_current : EncoderKind::bernoulli;
        const Network net = Network::initialize(cfg, 100 + k);
        const Tensor x = random_image({1, 6, 6}, 200 + k);
        const Tensor ours = forward(net, x, k);
        const Tensor ref = oracle::forward(net, x, k);
        // Spike counts are integers over T; rounding differences in the
        // membrane sums could only flip a spike at the exact threshold.
        EXPECT_LT(max_abs_diff(ours, ref), 1e-12) << "net " << k;
        EXPECT_EQ(predict(net, x, k), argmax(ref)) << "net " << k;
    }
}

TEST(Predict, ArgmaxWithLowestIndexTieBreak) {
    EXPECT_EQ(argmax(Tensor({3}, {0.1, 0.9, 0.3})), 1u);
    EXPECT_EQ(argmax(Tensor({4}, 0.25)), 0u);
    EXPECT_EQ(argmax(Tensor({3}, {0.2, 0.7, 0.7})), 1u);
}

TEST(NetworkConfig, ShapesChain) {
    const NetworkConfig cfg = small_conv_config(NeuronMode::lif);
    const auto shapes = cfg.layer_output_shapes();
    ASSERT_EQ(shapes.size(), 4u);
    EXPECT_EQ(shapes[0], (Shape{3, 6, 6}));
    EXPECT_EQ(shapes[1], (Shape{3, 3, 3}));
    EXPECT_EQ(shapes[3], (Shape{3}));
    EXPECT_EQ(cfg.num_classes(), 3u);
}

TEST(NetworkConfig, InvalidWiringThrows) {
    NetworkConfig cfg;
    cfg.input_shape = {1, 5, 5};
    cfg.layers = {LayerSpec::pool(2, 2), LayerSpec::dense(2)};
    EXPECT_THROW(cfg.validate(), DimensionError);
    cfg.input_shape = {4};
    cfg.layers = {LayerSpec::conv(2, 3), LayerSpec::dense(2)};
    EXPECT_THROW(cfg.validate(), DimensionError);
    cfg.layers = {LayerSpec::dense(3), LayerSpec::conv(2, 1)};
    EXPECT_ANY_THROW(cfg.validate());
}

TEST(NetworkConfig, ReluStaticIgnoresLifSettings) {
    NetworkConfig cfg = small_conv_config(NeuronMode::relu_static);
    const Network a = Network::initialize(cfg, 8);
    Network b = a;
    b.config.lif.v_th = 3.0;
    b.config.time_window = 1;
    const Tensor x = random_image({1, 6, 6}, 1);
    EXPECT_EQ(forward(a, x, 0), forward(b, x, 99));
}

TEST(Initialize, FixedSeedGivesIdenticalWeights) {
    const NetworkConfig cfg = small_conv_config(NeuronMode::lif);
    const Network a = Network::initialize(cfg, 77);
    const Network b = Network::initialize(cfg, 77);
    const Network c = Network::initialize(cfg, 78);
    EXPECT_EQ(a.params, b.params);
    EXPECT_NE(a.params, c.params);
    for (std::size_t l = 0; l < a.params.size(); ++l) {
        if (a.params[l].weight.empty()) continue;
        const double fan_in = static_cast<double>(a.params[l].weight.size() / a.params[l].bias.size());
        EXPECT_LE(max_abs(a.params[l].weight), std::sqrt(1.0 / fan_in));
    }
}

TEST(Names, RoundTrip) {
    EXPECT_EQ(parse_reset_mode(to_string(ResetMode::to_zero)), ResetMode::to_zero);
    EXPECT_EQ(parse_neuron_mode("relu-static"), NeuronMode::relu_static);
    EXPECT_EQ(parse_encoder_kind("constant-current"), EncoderKind::constant_current);
    EXPECT_THROW(parse_layer_kind("maxpool"), DomainError);
}
