#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "galmad/preprocess.hpp"
#include "galmad/tensor.hpp"

namespace galmad {

class GalMad;

// Scalar model output for count windows stored back to back in data; writes count values to out.
using BatchModelFn = std::function<void(const double* data, std::size_t count, double* out)>;

// Reconstruction loss of each window under a model.
BatchModelFn loss_function(GalMad& model);

struct ShapleyOptions {
    std::size_t samples = 2;  // permutations per time step; odd counts round up to antithetic pairs
    std::uint64_t seed = 0;
};

/// Per-step permutation-sampling Shapley values of f at window [t x n x k].
///
/// For step s the players are that step's n*k entries; absent players take
/// the background value and every other step keeps its actual value.
/// Permutations are drawn in antithetic pairs (a permutation and its
/// reverse). Per step the values sum to f(window) - f(window with step s at
/// background) exactly. Throws EmptyInputError for an empty background and
/// ConfigError for samples == 0.
Tensor shapley_per_step(const BatchModelFn& f, const Tensor& window, const Tensor& background,
                        const ShapleyOptions& options = {});

/// Exact Shapley values over m players by enumerating all 2^m coalitions.
/// value receives one coalition mask per call. Throws ConfigError for m > 20.
std::vector<double> shapley_exact(const std::function<double(const std::vector<std::uint8_t>&)>& value,
                                  std::size_t m);

/// Exact values with players grouped per (service, feature) column across
/// all steps of the window: result [n x k]. Evaluates 2^(n*k) windows in
/// batches; throws ConfigError for n*k > 20.
Tensor shapley_grouped_exact(const BatchModelFn& f, const Tensor& window, const Tensor& background);

// Elementwise mean of count windows drawn without replacement under seed.
Tensor background_window(const std::vector<LabeledWindow>& windows, std::size_t count = 100, std::uint64_t seed = 0);

}  // namespace galmad
