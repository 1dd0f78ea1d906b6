#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "galmad/autodiff.hpp"
#include "galmad/init.hpp"

namespace galmad {

/// LSTM cell with gates packed as [input | forget | candidate | output].
///
/// w_input [input_dim x 4H], w_hidden [H x 4H], bias [4H]. The forget-gate
/// bias starts at 1.
class LstmCell {
public:
    LstmCell(std::string name, std::size_t input_dim, std::size_t hidden_size, Rng& rng);

    std::size_t input_dim() const { return input_dim_; }
    std::size_t hidden_size() const { return hidden_; }

    ad::Parameter& w_input() { return w_input_; }
    ad::Parameter& w_hidden() { return w_hidden_; }
    ad::Parameter& bias() { return bias_; }
    std::vector<ad::Parameter*> parameters() { return {&w_input_, &w_hidden_, &bias_}; }

private:
    std::size_t input_dim_;
    std::size_t hidden_;
    ad::Parameter w_input_;
    ad::Parameter w_hidden_;
    ad::Parameter bias_;
};

struct LstmState {
    ad::Var h;
    ad::Var c;
};

// Rows are independent sequences: x [rows x input_dim], h/c [rows x H].
LstmState lstm_step(LstmCell& cell, ad::Var x, ad::Var h_prev, ad::Var c_prev);
std::pair<Tensor, Tensor> lstm_step(LstmCell& cell, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev);

/// Bidirectional encoder: final forward and backward hidden states are
/// concatenated and projected to d_z.
class BiLstm {
public:
    BiLstm(std::string name, std::size_t input_dim, std::size_t hidden_size, std::size_t output_dim, Rng& rng);

    LstmCell& forward_cell() { return forward_; }
    LstmCell& backward_cell() { return backward_; }
    ad::Parameter& projection() { return projection_; }
    ad::Parameter& projection_bias() { return projection_bias_; }
    std::size_t output_dim() const { return output_dim_; }
    std::vector<ad::Parameter*> parameters();

private:
    LstmCell forward_;
    LstmCell backward_;
    std::size_t output_dim_;
    ad::Parameter projection_;       // [2H x d_z]
    ad::Parameter projection_bias_;  // [d_z]
};

// seq: one [rows x input_dim] Var per time step. Returns [rows x d_z].
ad::Var bilstm_encode(BiLstm& bi, const std::vector<ad::Var>& seq);
// Single sequence seq [t x input_dim] -> [d_z]. Throws EmptyInputError for t = 0.
Tensor bilstm_encode(BiLstm& bi, const Tensor& seq);

/// One-to-many decoder: z is lifted linearly to (h0, c0) and to the first
/// input; each step's projected output is fed back as the next input.
class LstmDecoder {
public:
    LstmDecoder(std::string name, std::size_t latent_dim, std::size_t hidden_size, std::size_t output_dim, Rng& rng);

    LstmCell& cell() { return cell_; }
    std::size_t latent_dim() const { return latent_dim_; }
    std::size_t output_dim() const { return output_dim_; }
    std::vector<ad::Parameter*> parameters();

    // z [rows x latent_dim] -> t outputs of [rows x output_dim].
    std::vector<ad::Var> decode(ad::Var z, std::size_t t);

private:
    std::size_t latent_dim_;
    std::size_t output_dim_;
    LstmCell cell_;
    ad::Parameter lift_h_, lift_h_bias_;
    ad::Parameter lift_c_, lift_c_bias_;
    ad::Parameter lift_x_, lift_x_bias_;
    ad::Parameter out_, out_bias_;
};

std::vector<ad::Var> one_to_many_decode(LstmDecoder& decoder, ad::Var z, std::size_t t);
// z [latent_dim] -> [t x output_dim]. Throws EmptyInputError for t = 0.
Tensor one_to_many_decode(LstmDecoder& decoder, const Tensor& z, std::size_t t);

}  // namespace galmad
