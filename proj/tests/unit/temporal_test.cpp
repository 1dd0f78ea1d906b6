#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../common/gradcheck.hpp"
#include "galmad/error.hpp"
#include "galmad/temporal.hpp"

using namespace galmad;
using namespace galmad::testing;

namespace {

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(LstmCell, ForgetBiasStartsAtOne) {
    Rng rng(1);
    LstmCell cell("c", 3, 4, rng);
    const Tensor& b = cell.bias().value();
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(b[i], i >= 4 && i < 8 ? 1.0 : 0.0);
}

TEST(LstmCell, StepMatchesGateEquations) {
    Rng init(2);
    std::mt19937_64 rng(3);
    LstmCell cell("c", 2, 3, init);
    cell.bias().value() = random_tensor({12}, rng);
    const Tensor x = random_tensor({1, 2}, rng), h = random_tensor({1, 3}, rng), c = random_tensor({1, 3}, rng);
    const auto [h1, c1] = lstm_step(cell, x, h, c);
    const Tensor& wi = cell.w_input().value();
    const Tensor& wh = cell.w_hidden().value();
    const Tensor& b = cell.bias().value();
    for (std::size_t u = 0; u < 3; ++u) {
        double pre[4];
        for (std::size_t g = 0; g < 4; ++g) {
            const std::size_t col = g * 3 + u;
            pre[g] = b[col];
            for (std::size_t p = 0; p < 2; ++p) pre[g] += x[p] * wi.at(p, col);
            for (std::size_t p = 0; p < 3; ++p) pre[g] += h[p] * wh.at(p, col);
        }
        const double cn = sig(pre[1]) * c[u] + sig(pre[0]) * std::tanh(pre[2]);
        EXPECT_NEAR(c1[u], cn, 1e-14);
        EXPECT_NEAR(h1[u], sig(pre[3]) * std::tanh(cn), 1e-14);
    }
}

TEST(LstmCell, WrongWidthThrows) {
    Rng init(4);
    LstmCell cell("c", 2, 3, init);
    EXPECT_THROW(lstm_step(cell, Tensor({1, 3}), Tensor({1, 3}), Tensor({1, 3})), DimensionError);
    EXPECT_THROW(lstm_step(cell, Tensor({1, 2}), Tensor({1, 2}), Tensor({1, 3})), DimensionError);
}

TEST(BiLstm, EncodesToLatentAndDependsOnOrder) {
    Rng init(5);
    std::mt19937_64 rng(6);
    BiLstm bi("b", 3, 4, 2, init);
    const Tensor seq = random_tensor({5, 3}, rng);
    const Tensor z = bilstm_encode(bi, seq);
    EXPECT_EQ(z.shape(), (Shape{2}));
    Tensor reversed({5, 3});
    for (std::size_t s = 0; s < 5; ++s)
        for (std::size_t c = 0; c < 3; ++c) reversed.at(s, c) = seq.at(4 - s, c);
    const Tensor zr = bilstm_encode(bi, reversed);
    EXPECT_NE(z, zr);
    EXPECT_THROW(bilstm_encode(bi, Tensor({0, 3})), EmptyInputError);
}

TEST(BiLstm, RowsAreIndependentSequences) {
    Rng init(7);
    std::mt19937_64 rng(8);
    BiLstm bi("b", 2, 3, 1, init);
    const Tensor a = random_tensor({4, 2}, rng), b = random_tensor({4, 2}, rng);
    ad::Tape tape(ad::GradMode::Disabled);
    std::vector<ad::Var> seq;
    for (std::size_t s = 0; s < 4; ++s) {
        seq.push_back(tape.constant(Tensor({2, 2}, {a.at(s, 0), a.at(s, 1), b.at(s, 0), b.at(s, 1)})));
    }
    const Tensor both = bilstm_encode(bi, seq).value();
    EXPECT_NEAR(both[0], bilstm_encode(bi, a)[0], 1e-14);
    EXPECT_NEAR(both[1], bilstm_encode(bi, b)[0], 1e-14);
}

TEST(LstmDecoder, ProducesRequestedLength) {
    Rng init(9);
    LstmDecoder dec("d", 1, 4, 3, init);
    const Tensor out = one_to_many_decode(dec, Tensor({1}, {0.3}), 7);
    EXPECT_EQ(out.shape(), (Shape{7, 3}));
    EXPECT_THROW(one_to_many_decode(dec, Tensor({1}, {0.3}), 0), EmptyInputError);
    // Prefixes agree: decoding is causal in the step index.
    const Tensor shorter = one_to_many_decode(dec, Tensor({1}, {0.3}), 4);
    for (std::size_t i = 0; i < shorter.size(); ++i) EXPECT_EQ(shorter[i], out[i]);
}

TEST(Temporal, GradientsMatchFiniteDifferences) {
    Rng init(10);
    std::mt19937_64 rng(11);
    BiLstm bi("b", 2, 3, 2, init);
    LstmDecoder dec("d", 2, 3, 2, init);
    std::vector<Tensor> xs;
    for (int s = 0; s < 3; ++s) xs.push_back(random_tensor({2, 2}, rng));
    const Tensor target = random_tensor({2, 2}, rng);
    std::vector<ad::Parameter*> params = bi.parameters();
    for (ad::Parameter* p : dec.parameters()) params.push_back(p);
    auto r = check_parameter_gradients(params, [&](ad::Tape& t) {
        std::vector<ad::Var> seq;
        for (const Tensor& x : xs) seq.push_back(t.constant(x));
        ad::Var z = bilstm_encode(bi, seq);
        std::vector<ad::Var> out = dec.decode(z, 3);
        ad::Var loss = ad::mse(out[0], t.constant(target));
        for (std::size_t s = 1; s < out.size(); ++s) loss = ad::add(loss, ad::mse(out[s], t.constant(xs[s])));
        return loss;
    });
    EXPECT_LT(r.worst_relative, 1e-4);
}
