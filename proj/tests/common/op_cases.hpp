#pragma once
// One finite-difference case per differentiable op, shared by the unit and acceptance suites.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gradcheck.hpp"

namespace galmad::testing {

struct OpCase {
    std::string name;
    LossBuilder build;
    std::vector<Tensor> inputs;
};

// Weighted sum so every output element carries a distinct upstream gradient.
inline ad::Var weighted_sum(ad::Tape& tape, ad::Var y, std::uint64_t seed = 99) {
    std::mt19937_64 rng(seed);
    return ad::sum(ad::mul(y, tape.constant(random_tensor(y.shape(), rng))));
}

inline std::vector<OpCase> op_cases() {
    std::mt19937_64 rng(1);
    std::vector<OpCase> c;
    c.push_back({"matmul", [](ad::Tape& t, const auto& v) { return weighted_sum(t, ad::matmul(v[0], v[1])); },
                 {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)}});
    // The 0.3 keeps v0's two contributions from cancelling.
    c.push_back({"add_sub_broadcast",
                 [](ad::Tape& t, const auto& v) {
                     return weighted_sum(t, ad::sub(ad::add(v[0], v[1]), ad::add(ad::scale(v[0], 0.3), v[2])));
                 },
                 {random_tensor({3, 4}, rng), random_tensor({4}, rng), random_tensor({}, rng)}});
    c.push_back({"add_row_vector", [](ad::Tape& t, const auto& v) { return weighted_sum(t, ad::add(v[0], v[1])); },
                 {random_tensor({3, 4}, rng), random_tensor({1, 4}, rng)}});
    c.push_back({"mul_scale",
                 [](ad::Tape& t, const auto& v) {
                     return weighted_sum(t, ad::scale(ad::mul(ad::mul(v[0], v[1]), v[2]), -1.7));
                 },
                 {random_tensor({2, 5}, rng), random_tensor({2, 5}, rng), random_tensor({}, rng)}});
    c.push_back({"sigmoid", [](ad::Tape& t, const auto& v) { return weighted_sum(t, ad::sigmoid(v[0])); },
                 {random_tensor({4, 6}, rng, 2.0)}});
    c.push_back({"tanh", [](ad::Tape& t, const auto& v) { return weighted_sum(t, ad::tanh(v[0])); },
                 {random_tensor({4, 6}, rng, 2.0)}});
    c.push_back({"leaky_relu", [](ad::Tape& t, const auto& v) { return weighted_sum(t, ad::leaky_relu(v[0], 0.2)); },
                 {random_tensor({4, 6}, rng, 2.0)}});
    c.push_back({"elu", [](ad::Tape& t, const auto& v) { return weighted_sum(t, ad::elu(v[0], 1.0)); },
                 {random_tensor({4, 6}, rng, 2.0)}});
    c.push_back({"masked_softmax_shared",
                 [](ad::Tape& t, const auto& v) {
                     return weighted_sum(t, ad::masked_softmax(v[0], std::vector<std::uint8_t>{1, 0, 1, 1}));
                 },
                 {random_tensor({3, 4}, rng)}});
    c.push_back({"masked_softmax_block",
                 [](ad::Tape& t, const auto& v) {
                     return weighted_sum(t,
                                         ad::masked_softmax(v[0], std::vector<std::uint8_t>{1, 1, 0, 0, 1, 1, 1, 0, 1}));
                 },
                 {random_tensor({6, 3}, rng)}});
    c.push_back({"mse_sum_mean",
                 [](ad::Tape&, const auto& v) { return ad::add(ad::mse(v[0], v[1]), ad::mean(ad::mul(v[0], v[0]))); },
                 {random_tensor({5, 3}, rng), random_tensor({5, 3}, rng)}});
    c.push_back({"reshape_slice_concat",
                 [](ad::Tape& t, const auto& v) {
                     ad::Var a = ad::reshape(v[0], {4, 3});
                     ad::Var rows = ad::concat_rows({ad::slice_rows(a, 2, 4), ad::slice_rows(a, 0, 1)});
                     ad::Var cols = ad::concat_cols({ad::slice_cols(rows, 1, 3), ad::slice_cols(rows, 0, 1)});
                     return weighted_sum(t, cols);
                 },
                 {random_tensor({2, 6}, rng)}});
    c.push_back({"pair_sum_batched_matmul",
                 [](ad::Tape& t, const auto& v) {
                     return weighted_sum(t, ad::batched_matmul(ad::tanh(ad::pair_sum(v[0], v[1], 3)), v[2]));
                 },
                 {random_tensor({6, 1}, rng), random_tensor({6}, rng), random_tensor({6, 4}, rng)}});
    return c;
}

}  // namespace galmad::testing
