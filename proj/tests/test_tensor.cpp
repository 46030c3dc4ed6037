#include <gtest/gtest.h>

#include "oracles.hpp"
#include "snnr/error.hpp"
#include "snnr/rng.hpp"
#include "snnr/tensor.hpp"

using namespace snnr;

namespace {

Tensor random_tensor(Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    Rng rng(seed);
    for (double& v : t.data()) v = uniform(rng, lo, hi);
    return t;
}

}  // namespace

TEST(Tensor, ConstructionChecksSize) {
    EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
    EXPECT_THROW(Tensor({2, 0}), DimensionError);
    Tensor t({2, 3}, 1.5);
    EXPECT_EQ(t.size(), 6u);
    EXPECT_EQ(t(1, 2), 1.5);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    const Tensor eye({2, 2}, {1, 0, 0, 1});
    const Tensor m({2, 2}, {1, 2, 3, 4});
    EXPECT_EQ(matmul(eye, m), m);
    EXPECT_EQ(matmul(m, eye), m);
}

TEST(Matmul, SelectorRow) {
    const Tensor sel({2, 2}, {1, 0, 0, 0});
    const Tensor m({2, 2}, {5, 6, 7, 8});
    EXPECT_EQ(matmul(sel, m), Tensor({2, 2}, {5, 6, 0, 0}));
}

TEST(Matmul, MatchesTripleLoopExactly) {
    const Tensor a = random_tensor({4, 3}, 1);
    const Tensor b = random_tensor({3, 2}, 2);
    EXPECT_EQ(matmul(a, b), oracle::matmul(a, b));
}

TEST(Matmul, TransposedVariantsAgree) {
    const Tensor a = random_tensor({3, 4}, 3);
    const Tensor b = random_tensor({3, 5}, 4);
    EXPECT_EQ(matmul_tn(a, b), oracle::matmul(transpose(a), b));
    const Tensor c = random_tensor({5, 4}, 5);
    EXPECT_EQ(matmul_nt(a, c), oracle::matmul(a, transpose(c)));
}

TEST(Matmul, ShapeMismatchThrows) {
    EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), DimensionError);
    EXPECT_THROW(matmul(Tensor({6}), Tensor({6, 1})), DimensionError);
}

TEST(Conv2d, UnitKernelIsIdentity) {
    const Tensor x = random_tensor({1, 3, 3}, 6);
    EXPECT_EQ(conv2d(x, Tensor({1, 1, 1, 1}, 1.0), {1, 0}), x);
}

TEST(Conv2d, ZeroKernelGivesZeros) {
    const Tensor x = random_tensor({2, 5, 5}, 7);
    EXPECT_EQ(conv2d(x, Tensor({3, 2, 3, 3}), {1, 1}), Tensor({3, 5, 5}));
}

TEST(Conv2d, RampWithOnesKernelMatchesSlidingSum) {
    Tensor x({1, 4, 4});
    for (std::size_t i = 0; i < 16; ++i) x[i] = static_cast<double>(i);
    const Tensor y = conv2d(x, Tensor({1, 1, 2, 2}, 1.0), {1, 0});
    EXPECT_EQ(y, oracle::conv2d(x, Tensor({1, 1, 2, 2}, 1.0), 1, 0));
    // First window: 0 + 1 + 4 + 5.
    EXPECT_EQ(y(0, 0, 0), 10.0);
}

TEST(Conv2d, RandomGeometriesMatchNaiveOracle) {
    struct Case {
        Shape in, k;
        std::size_t stride, pad;
    };
    const Case cases[] = {{{2, 7, 7}, {3, 2, 3, 3}, 2, 1},
                          {{1, 6, 6}, {2, 1, 3, 3}, 1, 0},
                          {{3, 5, 5}, {4, 3, 1, 1}, 1, 2},
                          {{2, 8, 8}, {1, 2, 4, 4}, 4, 0}};
    std::uint64_t seed = 10;
    for (const auto& c : cases) {
        const Tensor x = random_tensor(c.in, seed++);
        const Tensor k = random_tensor(c.k, seed++);
        const Tensor b = random_tensor({c.k[0]}, seed++);
        const Tensor got = conv2d(x, k, {c.stride, c.pad}, b);
        const Tensor want = oracle::conv2d(x, k, c.stride, c.pad, b);
        ASSERT_EQ(got.shape(), want.shape());
        EXPECT_LT(max_abs_diff(got, want), 1e-12);
    }
}

TEST(Conv2d, IsLinear) {
    const Tensor x = random_tensor({2, 6, 6}, 20);
    const Tensor y = random_tensor({2, 6, 6}, 21);
    const Tensor k = random_tensor({3, 2, 3, 3}, 22);
    const double a = 0.7, b = -1.3;
    const Tensor lhs = conv2d(add(scale(x, a), scale(y, b)), k, {1, 1});
    const Tensor rhs = add(scale(conv2d(x, k, {1, 1}), a), scale(conv2d(y, k, {1, 1}), b));
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        EXPECT_LE(std::abs(lhs[i] - rhs[i]), 1e-10 * std::max(1.0, std::abs(rhs[i])));
    }
}

TEST(Conv2d, NonIntegralOutputThrows) {
    EXPECT_THROW(conv2d(Tensor({1, 5, 5}), Tensor({1, 1, 2, 2}), {2, 0}), DimensionError);
    EXPECT_THROW(conv2d(Tensor({1, 2, 2}), Tensor({1, 1, 3, 3}), {1, 0}), DimensionError);
    EXPECT_THROW(conv2d(Tensor({2, 4, 4}), Tensor({1, 1, 3, 3}), {1, 0}), DimensionError);
}

TEST(Conv2d, BackwardPassesMatchFiniteDifferences) {
    const Tensor x = random_tensor({2, 5, 5}, 30);
    const Tensor k = random_tensor({3, 2, 3, 3}, 31);
    const Conv2dGeometry g{2, 1};
    const Tensor w_out = random_tensor(conv2d(x, k, g).shape(), 32);
    auto objective = [&](const Tensor& xx, const Tensor& kk) {
        const Tensor y = conv2d(xx, kk, g);
        double s = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w_out[i];
        return s;
    };
    // The objective is linear in each argument, so central differences are exact up to rounding.
    const Tensor dx = conv2d_backward_input(w_out, k, x.shape(), g);
    Tensor dk(k.shape());
    conv2d_accumulate_kernel_grad(w_out, x, g, dk);
    const double h = 1e-3;
    for (std::size_t i = 0; i < x.size(); ++i) {
        Tensor xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        EXPECT_NEAR(dx[i], (objective(xp, k) - objective(xm, k)) / (2 * h), 1e-9);
    }
    for (std::size_t i = 0; i < k.size(); ++i) {
        Tensor kp = k, km = k;
        kp[i] += h;
        km[i] -= h;
        EXPECT_NEAR(dk[i], (objective(x, kp) - objective(x, km)) / (2 * h), 1e-9);
    }
}

TEST(AvgPool, ConstantInputStaysConstant) {
    EXPECT_EQ(avgpool2d(Tensor({2, 4, 4}, 0.25), 2, 2), Tensor({2, 2, 2}, 0.25));
}

TEST(AvgPool, TwoByTwoMean) {
    EXPECT_EQ(avgpool2d(Tensor({1, 2, 2}, {1, 2, 3, 4}), 2, 2), Tensor({1, 1, 1}, {2.5}));
}

TEST(AvgPool, MatchesNaiveOracle) {
    const Tensor x = random_tensor({1, 6, 6}, 40);
    EXPECT_LT(max_abs_diff(avgpool2d(x, 2, 2), oracle::avgpool(x, 2, 2)), 1e-12);
    const Tensor y = random_tensor({3, 7, 7}, 41);
    EXPECT_LT(max_abs_diff(avgpool2d(y, 3, 2), oracle::avgpool(y, 3, 2)), 1e-12);
}

TEST(AvgPool, WindowLargerThanInputThrows) {
    EXPECT_THROW(avgpool2d(Tensor({1, 2, 2}), 3, 1), DimensionError);
}

TEST(AvgPool, BackwardSpreadsGradientEvenly) {
    const Tensor g = avgpool2d_backward(Tensor({1, 1, 1}, {1.0}), {1, 2, 2}, 2, 2);
    EXPECT_EQ(g, Tensor({1, 2, 2}, 0.25));
}

TEST(Elementwise, ClampExample) {
    EXPECT_EQ(clamp(Tensor({3}, {-1, 0.5, 2}), 0, 1), Tensor({3}, {0, 0.5, 1}));
}

TEST(Elementwise, SignExample) {
    EXPECT_EQ(sign(Tensor({3}, {-3, 0, 7})), Tensor({3}, {-1, 0, 1}));
}

TEST(Elementwise, ReluSumIsAbs) {
    const Tensor x = random_tensor({50}, 50, -5, 5);
    EXPECT_EQ(add(relu(x), relu(scale(x, -1.0))), oracle::abs(x));
}

TEST(Elementwise, ClampBoundsAndIdempotence) {
    const Tensor x = random_tensor({200}, 51, -3, 3);
    const Tensor c = clamp(x, -0.5, 0.75);
    for (double v : c.values()) {
        EXPECT_GE(v, -0.5);
        EXPECT_LE(v, 0.75);
    }
    EXPECT_EQ(clamp(c, -0.5, 0.75), c);
    EXPECT_THROW(clamp(x, 1.0, 0.0), DomainError);
}

TEST(Elementwise, ShapeMismatchThrows) {
    EXPECT_THROW(add(Tensor({2}), Tensor({3})), DimensionError);
    EXPECT_THROW(sub(Tensor({2, 2}), Tensor({4})), DimensionError);
    EXPECT_THROW(hadamard(Tensor({1}), Tensor({2})), DimensionError);
}

TEST(Elementwise, ScalarForms) {
    EXPECT_EQ(add(Tensor({2}, {1, 2}), 0.5), Tensor({2}, {1.5, 2.5}));
    EXPECT_EQ(scale(Tensor({2}, {1, -2}), 3.0), Tensor({2}, {3, -6}));
}

TEST(Elementwise, FiniteInputsGiveFiniteOutputs) {
    const Tensor x = random_tensor({100}, 52, -1e3, 1e3);
    for (const Tensor& t : {relu(x), sign(x), clamp(x, 0, 1), scale(x, 2), add(x, x)}) {
        EXPECT_TRUE(t.all_finite());
    }
}
