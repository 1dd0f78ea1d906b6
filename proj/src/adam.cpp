#include "galmad/adam.hpp"

#include <cmath>

#include "galmad/error.hpp"
#include "galmad/kernels.hpp"

namespace galmad::ad {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options), lr_(options.learning_rate) {
    if (!(options_.learning_rate > 0.0)) throw ConfigError("Adam learning rate must be positive");
    if (!(options_.beta1 > 0.0 && options_.beta1 < 1.0) || !(options_.beta2 > 0.0 && options_.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in (0, 1)");
    }
    if (!(options_.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
    if (!(options_.epoch_decay_factor > 0.0 && options_.epoch_decay_factor <= 1.0)) {
        throw ConfigError("epoch decay factor must lie in (0, 1]");
    }
    for (const Parameter* p : params_) {
        m_.emplace_back(p->shape(), 0.0);
        v_.emplace_back(p->shape(), 0.0);
    }
}

void Adam::step() {
    for (const Parameter* p : params_) {
        if (!p->has_grad()) throw GradientStateError("Adam step: parameter '" + p->name() + "' has no gradient");
    }
    ++step_;
    const kernels::AdamCoeffs k{lr_,
                                options_.beta1,
                                options_.beta2,
                                options_.epsilon,
                                1.0 - std::pow(options_.beta1, static_cast<double>(step_)),
                                1.0 - std::pow(options_.beta2, static_cast<double>(step_))};
    const auto& table = kernels::active();
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Parameter& p = *params_[i];
        const Tensor& g = p.grad();
        if (g.shape() != p.shape()) {
            throw DimensionError("Adam step: gradient shape " + to_string(g.shape()) + " for parameter '" +
                                 p.name() + "' of shape " + to_string(p.shape()));
        }
        table.adam(g.size(), p.value().data().data(), g.data().data(), m_[i].data().data(), v_[i].data().data(), k);
    }
}

void Adam::zero_grad() {
    for (Parameter* p : params_) p->zero_grad();
}

void Adam::end_epoch() {
    ++epochs_;
    lr_ = options_.learning_rate * std::pow(options_.epoch_decay_factor, static_cast<double>(epochs_));
}

}  // namespace galmad::ad
