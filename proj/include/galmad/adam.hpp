#pragma once

#include <cstddef>
#include <vector>

#include "galmad/autodiff.hpp"

namespace galmad::ad {

struct AdamOptions {
    double learning_rate = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    // Multiplies the learning rate at every end_epoch().
    double epoch_decay_factor = 0.5;
};

/// Adam with bias correction and a per-epoch multiplicative learning-rate decay.
///
/// The optimizer is bound to a fixed, ordered parameter list; moment buffers
/// are allocated to match at construction.
class Adam {
public:
    Adam(std::vector<Parameter*> params, AdamOptions options);

    // Applies one update from the parameters' current gradients. Throws
    // GradientStateError naming the first parameter without a gradient.
    void step();
    // Clears every parameter's gradient.
    void zero_grad();
    void end_epoch();

    double learning_rate() const { return lr_; }
    std::size_t steps() const { return step_; }
    std::size_t epochs() const { return epochs_; }
    const AdamOptions& options() const { return options_; }
    const std::vector<Tensor>& first_moments() const { return m_; }
    const std::vector<Tensor>& second_moments() const { return v_; }

private:
    std::vector<Parameter*> params_;
    AdamOptions options_;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
    double lr_;
    std::size_t step_ = 0;
    std::size_t epochs_ = 0;
};

}  // namespace galmad::ad
