#include "galmad/temporal.hpp"

#include "galmad/error.hpp"

namespace galmad {

LstmCell::LstmCell(std::string name, std::size_t input_dim, std::size_t hidden_size, Rng& rng)
    : input_dim_(input_dim), hidden_(hidden_size) {
    if (input_dim == 0 || hidden_size == 0) throw ConfigError("LSTM '" + name + "': dimensions must be positive");
    const std::size_t g = 4 * hidden_size;
    w_input_ = ad::Parameter(name + ".w_input", glorot_uniform({input_dim, g}, input_dim, hidden_size, rng));
    w_hidden_ = ad::Parameter(name + ".w_hidden", glorot_uniform({hidden_size, g}, hidden_size, hidden_size, rng));
    Tensor b({g}, 0.0);
    for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) b[i] = 1.0;
    bias_ = ad::Parameter(name + ".bias", std::move(b));
}

LstmState lstm_step(LstmCell& cell, ad::Var x, ad::Var h_prev, ad::Var c_prev) {
    const std::size_t H = cell.hidden_size();
    const Tensor& xv = x.value();
    if (xv.rank() != 2 || xv.dim(1) != cell.input_dim()) {
        throw DimensionError("lstm_step: input " + to_string(xv.shape()) + ", cell expects width " +
                             std::to_string(cell.input_dim()));
    }
    const Shape state{xv.dim(0), H};
    if (h_prev.shape() != state || c_prev.shape() != state) {
        throw DimensionError("lstm_step: state shapes " + to_string(h_prev.shape()) + "/" +
                             to_string(c_prev.shape()) + ", expected " + to_string(state));
    }
    ad::Tape& tape = x.tape();
    ad::Var gates = ad::add(ad::add(ad::matmul(x, tape.param(cell.w_input())),
                                    ad::matmul(h_prev, tape.param(cell.w_hidden()))),
                            tape.param(cell.bias()));
    ad::Var i = ad::sigmoid(ad::slice_cols(gates, 0, H));
    ad::Var f = ad::sigmoid(ad::slice_cols(gates, H, 2 * H));
    ad::Var g = ad::tanh(ad::slice_cols(gates, 2 * H, 3 * H));
    ad::Var o = ad::sigmoid(ad::slice_cols(gates, 3 * H, 4 * H));
    ad::Var c = ad::add(ad::mul(f, c_prev), ad::mul(i, g));
    ad::Var h = ad::mul(o, ad::tanh(c));
    return {h, c};
}

std::pair<Tensor, Tensor> lstm_step(LstmCell& cell, const Tensor& x, const Tensor& h_prev, const Tensor& c_prev) {
    auto as_row = [](const Tensor& v) { return v.rank() == 1 ? v.reshaped({1, v.size()}) : v; };
    ad::Tape tape(ad::GradMode::Disabled);
    LstmState s = lstm_step(cell, tape.constant(as_row(x)), tape.constant(as_row(h_prev)), tape.constant(as_row(c_prev)));
    return {s.h.value(), s.c.value()};
}

BiLstm::BiLstm(std::string name, std::size_t input_dim, std::size_t hidden_size, std::size_t output_dim, Rng& rng)
    : forward_(name + ".fwd", input_dim, hidden_size, rng),
      backward_(name + ".bwd", input_dim, hidden_size, rng),
      output_dim_(output_dim) {
    if (output_dim == 0) throw ConfigError("BiLSTM '" + name + "': output dimension must be positive");
    projection_ = ad::Parameter(name + ".projection",
                                glorot_uniform({2 * hidden_size, output_dim}, 2 * hidden_size, output_dim, rng));
    projection_bias_ = ad::Parameter(name + ".projection_bias", Tensor({output_dim}, 0.0));
}

std::vector<ad::Parameter*> BiLstm::parameters() {
    std::vector<ad::Parameter*> out = forward_.parameters();
    for (ad::Parameter* p : backward_.parameters()) out.push_back(p);
    out.push_back(&projection_);
    out.push_back(&projection_bias_);
    return out;
}

ad::Var bilstm_encode(BiLstm& bi, const std::vector<ad::Var>& seq) {
    if (seq.empty()) throw EmptyInputError("bilstm_encode: empty sequence");
    ad::Tape& tape = seq.front().tape();
    const std::size_t rows = seq.front().value().rows();
    const std::size_t H = bi.forward_cell().hidden_size();
    const Tensor zeros({rows, H}, 0.0);

    LstmState fwd{tape.constant(zeros), tape.constant(zeros)};
    for (const ad::Var& x : seq) fwd = lstm_step(bi.forward_cell(), x, fwd.h, fwd.c);
    LstmState bwd{tape.constant(zeros), tape.constant(zeros)};
    for (auto it = seq.rbegin(); it != seq.rend(); ++it) bwd = lstm_step(bi.backward_cell(), *it, bwd.h, bwd.c);

    ad::Var joined = ad::concat_cols({fwd.h, bwd.h});
    return ad::add(ad::matmul(joined, tape.param(bi.projection())), tape.param(bi.projection_bias()));
}

Tensor bilstm_encode(BiLstm& bi, const Tensor& seq) {
    if (seq.rank() != 2) throw DimensionError("bilstm_encode: expected [t x d], got " + to_string(seq.shape()));
    if (seq.dim(0) == 0) throw EmptyInputError("bilstm_encode: empty sequence");
    ad::Tape tape(ad::GradMode::Disabled);
    ad::Var all = tape.constant(seq);
    std::vector<ad::Var> steps;
    for (std::size_t s = 0; s < seq.dim(0); ++s) steps.push_back(ad::slice_rows(all, s, s + 1));
    return bilstm_encode(bi, steps).value().reshaped({bi.output_dim()});
}

LstmDecoder::LstmDecoder(std::string name, std::size_t latent_dim, std::size_t hidden_size, std::size_t output_dim,
                         Rng& rng)
    : latent_dim_(latent_dim), output_dim_(output_dim), cell_(name + ".cell", output_dim, hidden_size, rng) {
    if (latent_dim == 0) throw ConfigError("decoder '" + name + "': latent dimension must be positive");
    const std::size_t H = hidden_size;
    lift_h_ = ad::Parameter(name + ".lift_h", glorot_uniform({latent_dim, H}, latent_dim, H, rng));
    lift_h_bias_ = ad::Parameter(name + ".lift_h_bias", Tensor({H}, 0.0));
    lift_c_ = ad::Parameter(name + ".lift_c", glorot_uniform({latent_dim, H}, latent_dim, H, rng));
    lift_c_bias_ = ad::Parameter(name + ".lift_c_bias", Tensor({H}, 0.0));
    lift_x_ = ad::Parameter(name + ".lift_x", glorot_uniform({latent_dim, output_dim}, latent_dim, output_dim, rng));
    lift_x_bias_ = ad::Parameter(name + ".lift_x_bias", Tensor({output_dim}, 0.0));
    out_ = ad::Parameter(name + ".out", glorot_uniform({H, output_dim}, H, output_dim, rng));
    out_bias_ = ad::Parameter(name + ".out_bias", Tensor({output_dim}, 0.0));
}

std::vector<ad::Parameter*> LstmDecoder::parameters() {
    std::vector<ad::Parameter*> out = cell_.parameters();
    for (ad::Parameter* p : {&lift_h_, &lift_h_bias_, &lift_c_, &lift_c_bias_, &lift_x_, &lift_x_bias_, &out_,
                             &out_bias_}) {
        out.push_back(p);
    }
    return out;
}

std::vector<ad::Var> LstmDecoder::decode(ad::Var z, std::size_t t) {
    if (t == 0) throw EmptyInputError("one_to_many_decode: requested zero output steps");
    if (z.value().rank() != 2 || z.value().cols() != latent_dim_) {
        throw DimensionError("one_to_many_decode: latent " + to_string(z.shape()) + ", expected width " +
                             std::to_string(latent_dim_));
    }
    ad::Tape& tape = z.tape();
    auto affine = [&](ad::Var in, ad::Parameter& w, ad::Parameter& b) {
        return ad::add(ad::matmul(in, tape.param(w)), tape.param(b));
    };
    LstmState state{affine(z, lift_h_, lift_h_bias_), affine(z, lift_c_, lift_c_bias_)};
    ad::Var input = affine(z, lift_x_, lift_x_bias_);
    std::vector<ad::Var> outputs;
    outputs.reserve(t);
    for (std::size_t s = 0; s < t; ++s) {
        state = lstm_step(cell_, input, state.h, state.c);
        ad::Var y = affine(state.h, out_, out_bias_);
        outputs.push_back(y);
        input = y;
    }
    return outputs;
}

std::vector<ad::Var> one_to_many_decode(LstmDecoder& decoder, ad::Var z, std::size_t t) { return decoder.decode(z, t); }

Tensor one_to_many_decode(LstmDecoder& decoder, const Tensor& z, std::size_t t) {
    if (t == 0) throw EmptyInputError("one_to_many_decode: requested zero output steps");
    ad::Tape tape(ad::GradMode::Disabled);
    std::vector<ad::Var> steps = decoder.decode(tape.constant(z.reshaped({1, z.size()})), t);
    return ad::concat_rows(steps).value();
}

}  // namespace galmad
