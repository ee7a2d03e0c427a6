#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "aesc/nn/network.hpp"
#include "support/oracles.hpp"

using namespace aesc;
using namespace aesc::nn;

namespace {

Network<float> single_layer(const Shape& in, const LayerSpec& spec, std::vector<float> w, std::vector<float> b) {
    Architecture arch{"probe", in, {spec}};
    auto ps = empty_params<float>(arch);
    ps.entries[0].tensor.storage() = std::move(w);
    ps.entries[1].tensor.storage() = std::move(b);
    return Network<float>(arch, ps);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

} // namespace

TEST(Conv2d, IdentityKernelReproducesInput) {
    auto net = single_layer({1, 3, 3}, conv2d(1, 1, 1, 1, 0, Activation::none), {1.0f}, {0.0f});
    const Tensor out = net.forward(Tensor({1, 3, 3}, 1.0f));
    EXPECT_EQ(out, Tensor({1, 3, 3}, 1.0f));
}

TEST(Conv2d, MnistStrideTwoShape) {
    EXPECT_EQ(infer_output_shape(conv2d(1, 16, 3, 2, 0, Activation::relu), {1, 28, 28}, "l"), (Shape{16, 13, 13}));
}

TEST(Conv2d, StrideTwoMatchesDirectSummation) {
    std::vector<double> in(16);
    for (int i = 0; i < 16; ++i) in[i] = i + 1;
    std::size_t ho = 0, wo = 0;
    const auto expected = oracle::conv2d(in, 1, 4, 4, {1, 0, 0, -1}, {0}, 1, 2, 2, 0, ho, wo);
    ASSERT_EQ(ho, 2u);
    ASSERT_EQ(wo, 2u);
    // x(0,0)-x(1,1) = 1-6 and the same offset holds at every stride-2 position.
    for (double v : expected) EXPECT_DOUBLE_EQ(v, -5.0);

    auto net = single_layer({1, 4, 4}, conv2d(1, 1, 2, 2, 0, Activation::none), {1, 0, 0, -1}, {0});
    std::vector<float> inf(in.begin(), in.end());
    const Tensor out = net.forward(Tensor({1, 4, 4}, inf));
    ASSERT_EQ(out.shape(), (Shape{1, 2, 2}));
    for (std::size_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(out[i], static_cast<float>(expected[i]));
}

TEST(Conv2d, RandomInstancesMatchOracleWithPadding) {
    std::mt19937_64 rng(7);
    for (std::size_t p : {0u, 1u}) {
        for (std::size_t s : {1u, 2u}) {
            const std::size_t C = 3, K = 4, k = 3, H = 7, W = 6;
            auto in = random_vector(C * H * W, rng), w = random_vector(K * C * k * k, rng), b = random_vector(K, rng);
            std::size_t ho = 0, wo = 0;
            const auto expected = oracle::conv2d(in, C, H, W, w, b, K, k, s, p, ho, wo);
            Architecture arch{"probe", {C, H, W}, {conv2d(C, K, k, s, p, Activation::none)}};
            auto ps = empty_params<double>(arch);
            ps.entries[0].tensor.storage() = w;
            ps.entries[1].tensor.storage() = b;
            Network<double> net(arch, ps);
            const Tensor64 out = net.forward(Tensor64({C, H, W}, in));
            ASSERT_EQ(out.shape(), (Shape{K, ho, wo}));
            for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-12);
        }
    }
}

TEST(Conv2d, RejectsChannelMismatchNamingLayer) {
    Architecture arch{"encoder", {2, 8, 8}, {conv2d(3, 4, 3, 1, 0, Activation::none)}};
    try {
        arch.shapes();
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("encoder layer 0"), std::string::npos);
    }
}

TEST(Conv2d, RejectsNonPositiveOutputExtent) {
    EXPECT_THROW(infer_output_shape(conv2d(1, 1, 5, 1, 0, Activation::none), {1, 3, 3}, "l"), ShapeError);
}

TEST(ConvTranspose2d, ShapeFormula) {
    EXPECT_EQ(infer_output_shape(convtranspose2d(1, 1, 3, 2, 0, 1, Activation::none), {1, 2, 2}, "l"),
              (Shape{1, 6, 6}));
}

TEST(ConvTranspose2d, RejectsOutputPaddingNotBelowStride) {
    EXPECT_THROW(infer_output_shape(convtranspose2d(1, 1, 3, 2, 0, 2, Activation::none), {1, 2, 2}, "l"), ShapeError);
}

TEST(ConvTranspose2d, MatchesScatterOracle) {
    std::mt19937_64 rng(11);
    for (std::size_t op : {0u, 1u}) {
        const std::size_t C = 3, K = 2, k = 3, s = 2, p = 1, H = 4, W = 5;
        auto in = random_vector(C * H * W, rng), w = random_vector(C * K * k * k, rng), b = random_vector(K, rng);
        std::size_t ho = 0, wo = 0;
        const auto expected = oracle::convtranspose2d(in, C, H, W, w, b, K, k, s, p, op, ho, wo);
        Architecture arch{"probe", {C, H, W}, {convtranspose2d(C, K, k, s, p, op, Activation::none)}};
        auto ps = empty_params<double>(arch);
        ps.entries[0].tensor.storage() = w;
        ps.entries[1].tensor.storage() = b;
        const Tensor64 out = Network<double>(arch, ps).forward(Tensor64({C, H, W}, in));
        ASSERT_EQ(out.shape(), (Shape{K, ho, wo}));
        for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], expected[i], 1e-12);
    }
}

// <conv(x), y> == <x, convT(y)> with the same weights and geometry.
TEST(ConvTranspose2d, IsAdjointOfConv2d) {
    std::mt19937_64 rng(3);
    std::normal_distribution<float> g;
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t s = 1 + trial % 2, p = trial % 3 == 0 ? 1 : 0;
        Architecture fwd{"conv", {1, 5, 5}, {conv2d(1, 1, 3, s, p, Activation::none)}};
        const Shape mid = fwd.output_shape();
        const std::size_t op = (5 + 2 * p - 3) % s;
        Architecture adj{"convT", mid, {convtranspose2d(1, 1, 3, s, p, op, Activation::none)}};
        ASSERT_EQ(adj.output_shape(), (Shape{1, 5, 5}));

        auto pc = empty_params<float>(fwd);
        for (float& v : pc.entries[0].tensor.storage()) v = g(rng);
        auto pt = empty_params<float>(adj);
        pt.entries[0].tensor.storage() = pc.entries[0].tensor.storage();

        Tensor x({1, 5, 5}), y(mid);
        for (float& v : x.storage()) v = g(rng);
        for (float& v : y.storage()) v = g(rng);
        const Tensor cx = Network<float>(fwd, pc).forward(x);
        const Tensor ty = Network<float>(adj, pt).forward(y);
        double lhs = 0, rhs = 0;
        for (std::size_t i = 0; i < y.size(); ++i) lhs += double(cx[i]) * y[i];
        for (std::size_t i = 0; i < x.size(); ++i) rhs += double(x[i]) * ty[i];
        EXPECT_NEAR(lhs, rhs, 1e-5) << "trial " << trial;
    }
}

TEST(ConvTranspose2d, MnistDecoderChainInvertsEncoderChain) {
    Shape s{16, 2, 2};
    const std::size_t ops[] = {1, 0, 1};
    const std::size_t expect[] = {6, 13, 28};
    for (int i = 0; i < 3; ++i) {
        s = infer_output_shape(convtranspose2d(16, 16, 3, 2, 0, ops[i], Activation::none), s, "l");
        EXPECT_EQ(s[1], expect[i]);
        EXPECT_EQ(s[2], expect[i]);
    }
}

TEST(Linear, IdentityAndSum) {
    auto id = single_layer({3}, linear(3, 3, Activation::none), {1, 0, 0, 0, 1, 0, 0, 0, 1}, {0, 0, 0});
    const Tensor x({3}, std::vector<float>{0.5f, -2.0f, 7.0f});
    EXPECT_EQ(id.forward(x), x);

    auto sum = single_layer({3}, linear(3, 1, Activation::none), {1, 1, 1}, {0});
    EXPECT_FLOAT_EQ(sum.forward(Tensor({3}, std::vector<float>{1, 2, 3}))[0], 6.0f);
}

TEST(Linear, RejectsLengthMismatch) {
    EXPECT_THROW((Architecture{"lin", {5}, {linear(4, 2, Activation::none)}}.shapes()), ShapeError);
}

TEST(Activations, ReluAndSigmoidValues) {
    EXPECT_EQ(relu(-2.0), 0.0);
    EXPECT_EQ(relu(3.0), 3.0);
    EXPECT_EQ(sigmoid(0.0), 0.5);
    EXPECT_NEAR(sigmoid(40.0), 1.0, 1e-12);
    EXPECT_NEAR(sigmoid(-40.0), 0.0, 1e-12);
    EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
    EXPECT_TRUE(std::isfinite(sigmoid(1000.0f)));
}

TEST(Activations, ReluSubgradientAtZeroIsZero) {
    std::vector<double> out{0.0, 2.0}, grad{1.0, 1.0};
    activation_backward<double>(Activation::relu, out, grad);
    EXPECT_EQ(grad[0], 0.0);
    EXPECT_EQ(grad[1], 1.0);
}

TEST(MaxPool, PicksWindowMaximum) {
    Architecture arch{"pool", {1, 4, 4}, {maxpool2d(2)}};
    std::vector<float> v(16);
    for (int i = 0; i < 16; ++i) v[i] = static_cast<float>(i);
    const Tensor out = Network<float>(arch, {}).forward(Tensor({1, 4, 4}, v));
    EXPECT_EQ(out.storage(), (std::vector<float>{5, 7, 13, 15}));
}
