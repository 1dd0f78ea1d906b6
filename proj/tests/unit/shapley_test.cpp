#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "../common/fixtures.hpp"
#include "../common/shapley_oracle.hpp"
#include "galmad/error.hpp"
#include "galmad/shapley.hpp"

using namespace galmad;
using namespace galmad::testing;

namespace {

// Wraps a per-vector function as a batch model over [1 x 1 x m] windows.
BatchModelFn batch_of(std::function<double(const std::vector<double>&)> f, std::size_t m) {
    return [f, m](const double* data, std::size_t count, double* out) {
        for (std::size_t b = 0; b < count; ++b) out[b] = f(std::vector<double>(data + b * m, data + (b + 1) * m));
    };
}

}  // namespace

TEST(ShapleyOracle, PermutationEnumerationAgreesWithExactMode) {
    std::mt19937_64 rng(1);
    for (std::size_t m = 3; m <= 7; ++m) {
        const std::vector<double> x = random_tensor({m}, rng).buffer(), bg = random_tensor({m}, rng).buffer();
        const auto want = shapley_by_permutations(toy_model, x, bg);
        const auto got = shapley_exact(
            [&](const std::vector<std::uint8_t>& mask) {
                std::vector<double> z = bg;
                for (std::size_t i = 0; i < m; ++i)
                    if (mask[i]) z[i] = x[i];
                return toy_model(z);
            },
            m);
        for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(got[i], want[i], 1e-12);
    }
}

TEST(ShapleySampling, AdditiveModelIsExact) {
    std::mt19937_64 rng(2);
    const Tensor w = random_tensor({3, 2, 4}, rng), bg = random_tensor({3, 2, 4}, rng);
    auto sum = [](const double* data, std::size_t count, double* out) {
        for (std::size_t b = 0; b < count; ++b) {
            out[b] = 0.0;
            for (std::size_t i = 0; i < 24; ++i) out[b] += data[b * 24 + i];
        }
    };
    const Tensor phi = shapley_per_step(sum, w, bg, {.samples = 1});
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(phi[i], w[i] - bg[i], 1e-12);
}

TEST(ShapleySampling, ConvergesToEnumeration) {
    std::mt19937_64 rng(3);
    for (std::size_t m : {3u, 5u, 8u}) {
        const Tensor x = random_tensor({1, 1, m}, rng), bg = random_tensor({1, 1, m}, rng);
        const auto want = shapley_by_permutations(toy_model, x.buffer(), bg.buffer());
        const Tensor phi = shapley_per_step(batch_of(toy_model, m), x, bg, {.samples = 2000, .seed = 4});
        for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(phi[i], want[i], 1e-2) << "m=" << m << " i=" << i;
    }
}

TEST(ShapleySampling, PerStepEfficiencyTelescopes) {
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({3, 1, 3}, rng), bg = random_tensor({3, 1, 3}, rng);
    const auto f = batch_of(toy_model, 9);
    const Tensor phi = shapley_per_step(f, x, bg, {.samples = 3, .seed = 1});
    double fx = 0.0;
    f(x.buffer().data(), 1, &fx);
    for (std::size_t s = 0; s < 3; ++s) {
        Tensor partial = x;
        for (std::size_t i = 0; i < 3; ++i) partial[s * 3 + i] = bg[s * 3 + i];
        double fp = 0.0;
        f(partial.buffer().data(), 1, &fp);
        double total = 0.0;
        for (std::size_t i = 0; i < 3; ++i) total += phi[s * 3 + i];
        EXPECT_NEAR(total, fx - fp, 1e-12);
    }
}

TEST(ShapleySampling, IgnoredFeatureGetsZero) {
    std::mt19937_64 rng(6);
    auto ignores_second = [](const std::vector<double>& z) {
        std::vector<double> y = z;
        y[1] = 0.0;
        return toy_model(y);
    };
    const Tensor x = random_tensor({1, 1, 5}, rng), bg = random_tensor({1, 1, 5}, rng);
    const Tensor phi = shapley_per_step(batch_of(ignores_second, 5), x, bg, {.samples = 10, .seed = 2});
    EXPECT_NEAR(phi[1], 0.0, 1e-12);
}

TEST(ShapleySampling, DeterministicUnderSeed) {
    std::mt19937_64 rng(7);
    const Tensor x = random_tensor({2, 1, 4}, rng), bg = random_tensor({2, 1, 4}, rng);
    const auto f = batch_of(toy_model, 8);
    EXPECT_EQ(shapley_per_step(f, x, bg, {.samples = 4, .seed = 9}), shapley_per_step(f, x, bg, {.samples = 4, .seed = 9}));
    EXPECT_NE(shapley_per_step(f, x, bg, {.samples = 4, .seed = 9}), shapley_per_step(f, x, bg, {.samples = 4, .seed = 10}));
}

TEST(ShapleySampling, RejectsBadArguments) {
    const auto f = batch_of(toy_model, 3);
    const Tensor x({1, 1, 3});
    EXPECT_THROW(shapley_per_step(f, x, Tensor({0}), {}), EmptyInputError);
    EXPECT_THROW(shapley_per_step(f, x, Tensor({1, 1, 4}), {}), DimensionError);
    EXPECT_THROW(shapley_per_step(f, x, x, {.samples = 0}), ConfigError);
    EXPECT_THROW(shapley_exact([](const auto&) { return 0.0; }, 21), ConfigError);
}

TEST(ShapleyExact, EfficiencyAndNullPlayer) {
    std::mt19937_64 rng(8);
    const std::size_t m = 10;
    const std::vector<double> x = random_tensor({m}, rng).buffer(), bg = random_tensor({m}, rng).buffer();
    auto value = [&](const std::vector<std::uint8_t>& mask) {
        std::vector<double> z = bg;
        for (std::size_t i = 0; i < m; ++i)
            if (mask[i] && i != 4) z[i] = x[i];  // player 4 never matters
        return toy_model(z);
    };
    const auto phi = shapley_exact(value, m);
    double total = 0.0;
    for (double v : phi) total += v;
    std::vector<std::uint8_t> all(m, 1), none(m, 0);
    EXPECT_NEAR(total, value(all) - value(none), 1e-9);
    EXPECT_NEAR(phi[4], 0.0, 1e-9);
}

TEST(ShapleyExact, GroupedOverModelMatchesEfficiency) {
    std::mt19937_64 rng(9);
    GalMadConfig c = tiny_config();
    GalMad model(c, Variant::GalMad, tiny_topology());
    const Tensor w = random_windows(1, c, rng)[0], bg = random_windows(1, c, rng)[0];
    const Tensor phi = shapley_grouped_exact(loss_function(model), w, bg);
    ASSERT_EQ(phi.shape(), (Shape{3, 2}));
    double total = 0.0;
    for (double v : phi.buffer()) total += v;
    EXPECT_NEAR(total, model.reconstruction_loss(w) - model.reconstruction_loss(bg), 1e-9);
}

TEST(Background, MeanOfSeededSample) {
    std::vector<LabeledWindow> ws;
    for (int i = 0; i < 5; ++i) ws.push_back({Tensor({1, 1, 1}, static_cast<double>(i))});
    EXPECT_DOUBLE_EQ(background_window(ws, 100, 0)[0], 2.0);  // count above size uses every window
    const Tensor a = background_window(ws, 2, 3), b = background_window(ws, 2, 3);
    EXPECT_EQ(a, b);
    EXPECT_THROW(background_window({}, 10, 0), EmptyInputError);
}
