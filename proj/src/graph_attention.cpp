#include "galmad/graph_attention.hpp"

#include "galmad/error.hpp"

namespace galmad {

GatLayer::GatLayer(std::string name, GatOptions options, Rng& rng) : name_(std::move(name)), options_(options) {
    if (options_.in_dim == 0 || options_.out_dim == 0 || options_.num_heads == 0) {
        throw ConfigError("GAT layer '" + name_ + "': dimensions and head count must be positive");
    }
    if (options_.head_merge == HeadMerge::Concat && options_.out_dim % options_.num_heads != 0) {
        throw ConfigError("GAT layer '" + name_ + "': out_dim " + std::to_string(options_.out_dim) +
                          " not divisible by " + std::to_string(options_.num_heads) + " heads");
    }
    const std::size_t hd = head_dim();
    const std::size_t width = options_.num_heads * hd;
    weight_ = ad::Parameter(name_ + ".weight",
                            glorot_uniform({options_.in_dim, width}, options_.in_dim, width, rng));
    attention_ = ad::Parameter(name_ + ".attention",
                               glorot_uniform({options_.num_heads, 2 * hd}, 2 * hd, 1, rng));
}

std::size_t GatLayer::head_dim() const {
    return options_.head_merge == HeadMerge::Concat ? options_.out_dim / options_.num_heads : options_.out_dim;
}

ad::Var GatLayer::forward(ad::Var x, const Topology& topo) {
    const Tensor& xv = x.value();
    const std::size_t n = topo.size();
    if (xv.rank() != 2 || xv.dim(1) != options_.in_dim || n == 0 || xv.dim(0) % n != 0) {
        throw DimensionError("GAT layer '" + name_ + "': input " + to_string(xv.shape()) + " does not match " +
                             std::to_string(n) + " nodes x " + std::to_string(options_.in_dim) + " features");
    }
    ad::Tape& tape = x.tape();
    const std::size_t heads = options_.num_heads;
    const std::size_t hd = head_dim();

    ad::Var projected = ad::matmul(x, tape.param(weight_));
    ad::Var att = ad::reshape(tape.param(attention_), {heads * 2 * hd, 1});

    std::vector<ad::Var> outputs;
    outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        ad::Var wh = heads == 1 ? projected : ad::slice_cols(projected, h * hd, (h + 1) * hd);
        ad::Var a_left = ad::slice_rows(att, h * 2 * hd, h * 2 * hd + hd);
        ad::Var a_right = ad::slice_rows(att, h * 2 * hd + hd, (h + 1) * 2 * hd);
        ad::Var scores = ad::pair_sum(ad::matmul(wh, a_left), ad::matmul(wh, a_right), n);
        ad::Var alpha = ad::masked_softmax(ad::leaky_relu(scores, options_.negative_slope), topo.adjacency());
        outputs.push_back(ad::batched_matmul(alpha, wh));
    }

    ad::Var merged = outputs[0];
    if (heads > 1) {
        if (options_.head_merge == HeadMerge::Concat) {
            merged = ad::concat_cols(outputs);
        } else {
            for (std::size_t h = 1; h < heads; ++h) merged = ad::add(merged, outputs[h]);
            merged = ad::scale(merged, 1.0 / static_cast<double>(heads));
        }
    }
    return options_.activation == Activation::Elu ? ad::elu(merged) : merged;
}

Tensor GatLayer::attention_weights(const Tensor& x, const Topology& topo) {
    ad::Tape tape(ad::GradMode::Disabled);
    const std::size_t hd = head_dim();
    ad::Var xv = tape.constant(x);
    ad::Var wh = ad::matmul(xv, tape.param(weight_));
    if (options_.num_heads > 1) wh = ad::slice_cols(wh, 0, hd);
    ad::Var att = ad::reshape(tape.param(attention_), {options_.num_heads * 2 * hd, 1});
    ad::Var scores =
        ad::pair_sum(ad::matmul(wh, ad::slice_rows(att, 0, hd)), ad::matmul(wh, ad::slice_rows(att, hd, 2 * hd)),
                     topo.size());
    ad::Var alpha = ad::masked_softmax(ad::leaky_relu(scores, options_.negative_slope), topo.adjacency());
    return alpha.value().reshaped({topo.size(), topo.size()});
}

Tensor gat_forward(GatLayer& layer, const Tensor& x, const Topology& topo) {
    if (x.rank() != 2 || x.dim(0) != topo.size()) {
        throw DimensionError("gat_forward: input " + to_string(x.shape()) + " for " + std::to_string(topo.size()) +
                             " services");
    }
    ad::Tape tape(ad::GradMode::Disabled);
    return layer.forward(tape.constant(x), topo).value();
}

Tensor gat_forward_sequence(GatLayer& layer, const Tensor& x, const Topology& topo) {
    if (x.rank() != 3 || x.dim(1) != topo.size()) {
        throw DimensionError("gat_forward_sequence: input " + to_string(x.shape()) + " for " +
                             std::to_string(topo.size()) + " services");
    }
    const std::size_t t = x.dim(0), n = x.dim(1), k = x.dim(2);
    ad::Tape tape(ad::GradMode::Disabled);
    Tensor out = layer.forward(tape.constant(x.reshaped({t * n, k})), topo).value();
    return std::move(out).reshaped({t, n, layer.options().out_dim});
}

}  // namespace galmad
