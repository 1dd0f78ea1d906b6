#pragma once

#include <random>
#include <vector>

#include "gradcheck.hpp"
#include "galmad/model.hpp"
#include "galmad/topology.hpp"

namespace galmad::testing {

inline Topology tiny_topology() { return Topology({"a", "b", "c"}, {{"a", "b"}, {"b", "c"}}); }

// n = 3, k = 2, t = 3 with small layers.
inline GalMadConfig tiny_config() {
    GalMadConfig c;
    c.n_services = 3;
    c.n_features = 2;
    c.window_len = 3;
    c.d1 = 4;
    c.d2 = 3;
    c.d_z = 2;
    c.encoder_hidden = 3;
    c.decoder_hidden = 3;
    c.batch_size = 4;
    c.micro_batch = 2;
    c.epochs = 2;
    return c;
}

inline std::vector<Tensor> random_windows(std::size_t count, const GalMadConfig& c, std::mt19937_64& rng) {
    std::vector<Tensor> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(random_tensor({c.window_len, c.n_services, c.n_features}, rng));
    return out;
}

// Unit-scale weights. At the small initial scale an untrained encoder maps
// every service to nearly the same code, so the decoder's attention
// gradients sit below finite-difference resolution.
inline void redraw_parameters(GalMad& model, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    for (ad::Parameter* p : model.parameters())
        for (double& v : p->value().data()) v = d(rng);
}

// Worst relative error of the parameter gradients of mean MSE over a batch.
inline double model_gradient_error(GalMad& model, const std::vector<Tensor>& windows) {
    const Tensor packed = pack_windows(windows);
    auto r = check_parameter_gradients(model.parameters(), [&](ad::Tape& t) {
        ad::Var x = t.constant(packed);
        return ad::mse(model.reconstruct(x, windows.size()), x);
    });
    return r.worst_relative;
}

}  // namespace galmad::testing
