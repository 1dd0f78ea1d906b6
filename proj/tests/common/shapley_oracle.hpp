#pragma once
// Shapley values by enumerating all m! orderings: independent of the
// coalition-weight formula used by the library's exact mode.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace galmad::testing {

inline std::vector<double> shapley_by_permutations(const std::function<double(const std::vector<double>&)>& f,
                                                   const std::vector<double>& x, const std::vector<double>& bg) {
    const std::size_t m = x.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> phi(m, 0.0);
    double count = 0.0;
    do {
        std::vector<double> z = bg;
        double prev = f(z);
        for (std::size_t p : order) {
            z[p] = x[p];
            const double cur = f(z);
            phi[p] += cur - prev;
            prev = cur;
        }
        count += 1.0;
    } while (std::next_permutation(order.begin(), order.end()));
    for (double& v : phi) v /= count;
    return phi;
}

// Nonlinear toy: pairwise interactions, a saturating term and a product.
inline double toy_model(const std::vector<double>& z) {
    double s = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        s += (0.5 + 0.1 * static_cast<double>(i)) * z[i] * z[i];
        if (i + 1 < z.size()) s += 0.8 * z[i] * z[i + 1];
    }
    s += std::tanh(z.front() - z.back());
    double prod = 1.0;
    for (double v : z) prod *= 1.0 + 0.2 * v;
    return s + prod;
}

}  // namespace galmad::testing
