#pragma once

#include <cmath>
#include <random>

#include "galmad/tensor.hpp"

namespace galmad {

using Rng = std::mt19937_64;

// Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)).
inline Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Tensor t(std::move(shape));
    for (double& v : t.data()) v = dist(rng);
    return t;
}

}  // namespace galmad
