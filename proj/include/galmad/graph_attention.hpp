#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "galmad/autodiff.hpp"
#include "galmad/init.hpp"
#include "galmad/topology.hpp"

namespace galmad {

enum class HeadMerge { Concat, Average };
enum class Activation { Identity, Elu };

struct GatOptions {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::size_t num_heads = 1;
    HeadMerge head_merge = HeadMerge::Concat;
    double negative_slope = 0.2;
    Activation activation = Activation::Elu;
};

/// One graph attention layer.
///
/// Per head: e_ij = LeakyReLU(a^T [W h_i || W h_j]) over the adjacency mask
/// (self included), alpha_i = softmax_j(e_ij), h'_i = sum_j alpha_ij W h_j.
/// Heads are concatenated or averaged, then the activation is applied.
///
/// Parameters: weight [in_dim x heads*head_dim] and attention
/// [heads x 2*head_dim], where head_dim = out_dim / heads for Concat and
/// out_dim for Average.
class GatLayer {
public:
    GatLayer(std::string name, GatOptions options, Rng& rng);

    const GatOptions& options() const { return options_; }
    std::size_t head_dim() const;

    ad::Parameter& weight() { return weight_; }
    ad::Parameter& attention() { return attention_; }
    std::vector<ad::Parameter*> parameters() { return {&weight_, &attention_}; }

    /// x: [g*n x in_dim], the node features of g independent graphs sharing
    /// this topology. Returns [g*n x out_dim].
    ad::Var forward(ad::Var x, const Topology& topo);

    // Attention coefficients of the first head for a single graph x [n x in_dim].
    Tensor attention_weights(const Tensor& x, const Topology& topo);

private:
    std::string name_;
    GatOptions options_;
    ad::Parameter weight_;
    ad::Parameter attention_;
};

// Single time slice: x [n x in_dim] -> [n x out_dim].
Tensor gat_forward(GatLayer& layer, const Tensor& x, const Topology& topo);
// Independent application to every slice of x [t x n x in_dim] -> [t x n x out_dim].
Tensor gat_forward_sequence(GatLayer& layer, const Tensor& x, const Topology& topo);

}  // namespace galmad
