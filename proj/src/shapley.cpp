#include "galmad/shapley.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "galmad/error.hpp"
#include "galmad/model.hpp"

namespace galmad {

BatchModelFn loss_function(GalMad& model) {
    return [&model](const double* data, std::size_t count, double* out) {
        const std::vector<double> losses = model.window_losses(data, count);
        std::copy(losses.begin(), losses.end(), out);
    };
}

namespace {

void check_pair(const Tensor& window, const Tensor& background) {
    if (background.size() == 0) throw EmptyInputError("shapley: empty background");
    if (window.rank() != 3) throw RankError("shapley: window must be [t x n x k], got " + to_string(window.shape()));
    if (background.shape() != window.shape()) {
        throw DimensionError("shapley: background " + to_string(background.shape()) + " does not match window " +
                             to_string(window.shape()));
    }
}

}  // namespace

Tensor shapley_per_step(const BatchModelFn& f, const Tensor& window, const Tensor& background,
                        const ShapleyOptions& options) {
    check_pair(window, background);
    if (options.samples == 0) throw ConfigError("shapley: samples must be at least 1");
    const std::size_t t = window.dim(0);
    const std::size_t m = window.dim(1) * window.dim(2);
    const std::size_t per = window.size();
    const std::size_t pairs = (options.samples + 1) / 2;
    const double weight = 1.0 / static_cast<double>(2 * pairs);
    const double* x = window.data().data();
    const double* bg = background.data().data();

    Tensor phi({t, window.dim(1), window.dim(2)}, 0.0);
    std::mt19937_64 rng(options.seed);
    std::vector<std::size_t> perm(m);
    std::vector<double> chain(m * per);
    std::vector<double> values(m);
    std::vector<double> base(per);
    for (std::size_t s = 0; s < t; ++s) {
        std::copy(x, x + per, base.begin());
        std::copy(bg + s * m, bg + (s + 1) * m, base.begin() + s * m);
        double empty = 0.0;
        f(base.data(), 1, &empty);
        double* out = phi.data().data() + s * m;
        for (std::size_t p = 0; p < pairs; ++p) {
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            for (int direction = 0; direction < 2; ++direction) {
                // chain[r] = base with the first r+1 players of the ordering set to their actual values.
                std::copy(base.begin(), base.end(), chain.begin());
                for (std::size_t r = 0; r < m; ++r) {
                    double* w = chain.data() + r * per;
                    if (r > 0) std::copy(w - per, w, w);
                    const std::size_t player = direction == 0 ? perm[r] : perm[m - 1 - r];
                    w[s * m + player] = x[s * m + player];
                }
                f(chain.data(), m, values.data());
                double prev = empty;
                for (std::size_t r = 0; r < m; ++r) {
                    const std::size_t player = direction == 0 ? perm[r] : perm[m - 1 - r];
                    out[player] += weight * (values[r] - prev);
                    prev = values[r];
                }
            }
        }
    }
    return phi;
}

std::vector<double> shapley_exact(const std::function<double(const std::vector<std::uint8_t>&)>& value,
                                  std::size_t m) {
    if (m > 20) throw ConfigError("shapley_exact: " + std::to_string(m) + " players is too many to enumerate");
    const std::size_t subsets = std::size_t{1} << m;
    std::vector<double> v(subsets);
    std::vector<std::uint8_t> mask(m);
    for (std::size_t s = 0; s < subsets; ++s) {
        for (std::size_t i = 0; i < m; ++i) mask[i] = (s >> i) & 1U;
        v[s] = value(mask);
    }
    // weight[c] = c! (m - c - 1)! / m!
    std::vector<double> weight(m, 0.0);
    for (std::size_t c = 0; c < m; ++c) {
        double w = 1.0 / static_cast<double>(m);
        for (std::size_t i = 1; i <= c; ++i) w *= static_cast<double>(i) / static_cast<double>(m - i);
        weight[c] = w;
    }
    std::vector<double> phi(m, 0.0);
    for (std::size_t s = 0; s < subsets; ++s) {
        const auto size = static_cast<std::size_t>(__builtin_popcountll(s));
        for (std::size_t i = 0; i < m; ++i) {
            if (s & (std::size_t{1} << i)) continue;
            phi[i] += weight[size] * (v[s | (std::size_t{1} << i)] - v[s]);
        }
    }
    return phi;
}

Tensor shapley_grouped_exact(const BatchModelFn& f, const Tensor& window, const Tensor& background) {
    check_pair(window, background);
    const std::size_t t = window.dim(0), n = window.dim(1), k = window.dim(2);
    const std::size_t m = n * k;
    if (m > 20) throw ConfigError("shapley_grouped_exact: " + std::to_string(m) + " grouped players is too many");
    const std::size_t subsets = std::size_t{1} << m;
    const std::size_t per = window.size();
    std::vector<double> values(subsets);
    const std::size_t chunk = 256;
    std::vector<double> batch(chunk * per);
    for (std::size_t s0 = 0; s0 < subsets; s0 += chunk) {
        const std::size_t count = std::min(chunk, subsets - s0);
        for (std::size_t c = 0; c < count; ++c) {
            const std::size_t s = s0 + c;
            double* w = batch.data() + c * per;
            for (std::size_t step = 0; step < t; ++step) {
                for (std::size_t p = 0; p < m; ++p) {
                    const std::size_t idx = step * m + p;
                    w[idx] = (s >> p) & 1U ? window.data()[idx] : background.data()[idx];
                }
            }
        }
        f(batch.data(), count, values.data() + s0);
    }
    const std::vector<double> phi = shapley_exact(
        [&values](const std::vector<std::uint8_t>& mask) {
            std::size_t s = 0;
            for (std::size_t i = 0; i < mask.size(); ++i) s |= static_cast<std::size_t>(mask[i] != 0) << i;
            return values[s];
        },
        m);
    return Tensor({n, k}, phi);
}

Tensor background_window(const std::vector<LabeledWindow>& windows, std::size_t count, std::uint64_t seed) {
    if (windows.empty() || count == 0) throw EmptyInputError("background_window: no windows to average");
    std::vector<std::size_t> idx(windows.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min(count, idx.size()));
    std::sort(idx.begin(), idx.end());
    Tensor mean(windows[idx[0]].tensor.shape(), 0.0);
    for (std::size_t i : idx) {
        const Tensor& w = windows[i].tensor;
        if (w.shape() != mean.shape()) throw DimensionError("background_window: windows differ in shape");
        for (std::size_t e = 0; e < w.size(); ++e) mean[e] += w[e];
    }
    for (double& v : mean.data()) v /= static_cast<double>(idx.size());
    return mean;
}

}  // namespace galmad
