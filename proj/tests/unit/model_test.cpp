#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "../common/fixtures.hpp"
#include "galmad/error.hpp"
#include "galmad/model.hpp"

using namespace galmad;
using namespace galmad::testing;

namespace {

const Variant kVariants[] = {Variant::GalMad, Variant::GatAe, Variant::LstmAe, Variant::LinearAe};

}  // namespace

TEST(Config, DefaultsFollowPublishedHyperparameters) {
    const GalMadConfig c;
    EXPECT_EQ(c.n_services, 12u);
    EXPECT_EQ(c.n_features, 22u);
    EXPECT_EQ(c.window_len, 24u);
    EXPECT_EQ(c.d_z, 1u);
    EXPECT_EQ(c.batch_size, 360u);
    EXPECT_DOUBLE_EQ(c.learning_rate, 0.001);
    EXPECT_DOUBLE_EQ(c.lr_decay_per_epoch, 0.5);
    EXPECT_DOUBLE_EQ(c.threshold, 2.0);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, ValidateRejectsBadValues) {
    GalMadConfig c;
    c.window_len = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.learning_rate = -1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.threshold = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(GalMad(GalMadConfig{}, Variant::GalMad, tiny_topology()), ConfigError);
}

TEST(Variant, NamesRoundTrip) {
    for (Variant v : kVariants) EXPECT_EQ(parse_variant(variant_name(v)), v);
    EXPECT_EQ(variant_name(Variant::LinearAe), "linear-ae");
    EXPECT_THROW(parse_variant("transformer"), ConfigError);
}

TEST(Score, ThresholdIsStrict) {
    EXPECT_FALSE(score(2.0, 2.0).is_anomaly);
    EXPECT_TRUE(score(std::nextafter(2.0, 3.0), 2.0).is_anomaly);
    EXPECT_DOUBLE_EQ(score(2.0, 2.0).y, 0.5);
    EXPECT_NEAR(score(0.0, 2.0).y, 1.0 / (1.0 + std::exp(2.0)), 1e-15);
    EXPECT_TRUE(score(40366.418, 2.0).is_anomaly);
    EXPECT_DOUBLE_EQ(score(40366.418, 2.0).y, 1.0);
}

TEST(Packing, RoundTripAndLayout) {
    std::mt19937_64 rng(1);
    const GalMadConfig c = tiny_config();
    const auto windows = random_windows(3, c, rng);
    const Tensor packed = pack_windows(windows);
    ASSERT_EQ(packed.shape(), (Shape{3 * 3 * 3, 2}));
    // Row (s*B + b)*n + j holds window b, step s, service j.
    EXPECT_EQ(packed.at((2 * 3 + 1) * 3 + 2, 1), windows[1].at(2, 2, 1));
    const auto back = unpack_windows(packed, 3, 3, 3);
    for (std::size_t b = 0; b < 3; ++b) EXPECT_EQ(back[b], windows[b]);
}

TEST(GalMadModel, ShapesForEveryVariant) {
    std::mt19937_64 rng(2);
    const GalMadConfig c = tiny_config();
    const Tensor w = random_windows(1, c, rng)[0];
    for (Variant v : kVariants) {
        GalMad m(c, v, tiny_topology());
        EXPECT_EQ(m.reconstruct(w).shape(), w.shape()) << variant_name(v);
        EXPECT_EQ(m.encode(w).shape(), (Shape{3, 2})) << variant_name(v);
        EXPECT_EQ(m.decode(m.encode(w), 3).shape(), w.shape()) << variant_name(v);
        EXPECT_THROW(m.reconstruct(Tensor({3, 3, 5})), DimensionError);
        std::set<std::string> names;
        for (ad::Parameter* p : m.parameters()) names.insert(p->name());
        EXPECT_EQ(names.size(), m.parameters().size());
    }
}

TEST(GalMadModel, ParameterNamesReflectArchitecture) {
    GalMad full(tiny_config(), Variant::GalMad, tiny_topology());
    EXPECT_NO_THROW(full.parameter("encoder.gat1.weight"));
    EXPECT_NO_THROW(full.parameter("encoder.gat2.attention"));
    EXPECT_THROW(full.parameter("encoder.linear"), ConfigError);
    GalMad lstm(tiny_config(), Variant::LstmAe, tiny_topology());
    EXPECT_THROW(lstm.parameter("encoder.gat1.weight"), ConfigError);
    GalMad lin(tiny_config(), Variant::LinearAe, tiny_topology());
    EXPECT_EQ(lin.parameter("encoder.linear").shape(), (Shape{6, 2}));
}

TEST(GalMadModel, SameSeedSameWeights) {
    GalMad a(tiny_config(), Variant::GalMad, tiny_topology());
    GalMad b(tiny_config(), Variant::GalMad, tiny_topology());
    auto pa = a.parameters(), pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value(), pb[i]->value());
}

TEST(GalMadModel, EndToEndGradientsForEveryVariant) {
    std::mt19937_64 rng(3);
    const GalMadConfig c = tiny_config();
    const auto windows = random_windows(2, c, rng);
    for (Variant v : kVariants) {
        GalMad m(c, v, tiny_topology());
        redraw_parameters(m, rng);
        EXPECT_LT(model_gradient_error(m, windows), 1e-3) << variant_name(v);
    }
}

TEST(GalMadModel, BatchedLossesMatchSingleWindow) {
    std::mt19937_64 rng(4);
    GalMadConfig c = tiny_config();
    c.micro_batch = 3;
    const auto windows = random_windows(7, c, rng);
    for (Variant v : kVariants) {
        GalMad m(c, v, tiny_topology());
        const auto losses = m.window_losses(windows);
        ASSERT_EQ(losses.size(), 7u);
        for (std::size_t i = 0; i < 7; ++i) {
            EXPECT_NEAR(losses[i], m.reconstruction_loss(windows[i]), 1e-12) << variant_name(v);
        }
    }
}

TEST(GalMadModel, GatVariantsArePermutationEquivariantOverServices) {
    // Relabelling services (with the topology) permutes the reconstruction of
    // the graph-only path. LSTM weights are shared across services, so the full model is too.
    std::mt19937_64 rng(5);
    const GalMadConfig c = tiny_config();
    const Tensor w = random_windows(1, c, rng)[0];
    const std::vector<std::size_t> perm{2, 0, 1};
    const Topology topo = tiny_topology();
    std::vector<std::string> names(3);
    std::vector<std::uint8_t> adj(9);
    for (std::size_t i = 0; i < 3; ++i) {
        names[perm[i]] = topo.services()[i];
        for (std::size_t j = 0; j < 3; ++j) adj[perm[i] * 3 + perm[j]] = topo.adjacency()[i * 3 + j];
    }
    GalMad a(c, Variant::GalMad, topo);
    GalMad b(c, Variant::GalMad, Topology::from_adjacency(names, adj));
    Tensor pw(w.shape());
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t f = 0; f < 2; ++f) pw.at(s, perm[j], f) = w.at(s, j, f);
    const Tensor ra = a.reconstruct(w), rb = b.reconstruct(pw);
    for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t f = 0; f < 2; ++f) EXPECT_NEAR(rb.at(s, perm[j], f), ra.at(s, j, f), 1e-12);
}

TEST(Training, OverfitsTinySetWithoutDecay) {
    std::mt19937_64 rng(6);
    GalMadConfig c = tiny_config();
    c.lr_decay_per_epoch = 1.0;
    c.learning_rate = 0.01;
    c.epochs = 300;
    c.batch_size = 4;
    const auto windows = random_windows(4, c, rng);
    GalMad m(c, Variant::GalMad, tiny_topology());
    const TrainingLog log = train(m, windows);
    ASSERT_EQ(log.epochs.size(), 300u);
    EXPECT_LT(log.epochs.back().mean_loss, 0.6 * log.epochs.front().mean_loss);
}

TEST(Training, LearningRateHalvesEachEpoch) {
    std::mt19937_64 rng(7);
    GalMadConfig c = tiny_config();
    c.epochs = 4;
    const auto windows = random_windows(5, c, rng);
    GalMad m(c, Variant::LinearAe, tiny_topology());
    const TrainingLog log = train(m, windows);
    for (std::size_t e = 0; e < 4; ++e) {
        EXPECT_DOUBLE_EQ(log.epochs[e].learning_rate, 0.001 * std::pow(0.5, static_cast<double>(e)));
        EXPECT_EQ(log.epochs[e].batches, 2u);
    }
}

TEST(Training, DeterministicGivenSeed) {
    std::mt19937_64 rng(8);
    const GalMadConfig c = tiny_config();
    const auto windows = random_windows(6, c, rng);
    GalMad a(c, Variant::GalMad, tiny_topology()), b(c, Variant::GalMad, tiny_topology());
    train(a, windows);
    train(b, windows);
    auto pa = a.parameters(), pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value(), pb[i]->value());
}

TEST(Training, MicroBatchSizeDoesNotChangeTheResult) {
    std::mt19937_64 rng(9);
    GalMadConfig c = tiny_config();
    const auto windows = random_windows(8, c, rng);
    c.micro_batch = 1;
    GalMad a(c, Variant::GalMad, tiny_topology());
    c.micro_batch = 4;
    GalMad b(c, Variant::GalMad, tiny_topology());
    train(a, windows);
    train(b, windows);
    auto pa = a.parameters(), pb = b.parameters();
    for (std::size_t i = 0; i < pa.size(); ++i)
        for (std::size_t e = 0; e < pa[i]->value().size(); ++e) EXPECT_NEAR(pa[i]->value()[e], pb[i]->value()[e], 1e-12);
}

TEST(Training, ErrorsOnEmptyOrDivergentInput) {
    GalMad m(tiny_config(), Variant::GalMad, tiny_topology());
    EXPECT_THROW(train(m, {}), InsufficientDataError);
    std::mt19937_64 rng(10);
    auto windows = random_windows(2, tiny_config(), rng);
    windows[1][0] = std::numeric_limits<double>::infinity();
    EXPECT_THROW(train(m, windows), DivergenceError);
}

TEST(Detect, NonOverlappingWindowsWithExclusiveEnd) {
    std::mt19937_64 rng(11);
    const GalMadConfig c = tiny_config();
    GalMad m(c, Variant::GalMad, tiny_topology());
    const Tensor stream = random_tensor({10, 3, 2}, rng);
    std::vector<std::int64_t> ts;
    for (int i = 0; i < 10; ++i) ts.push_back(1000 + 5 * i);
    const auto out = detect(m, stream, ts);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[1].window_start, 1015);
    EXPECT_EQ(out[1].window_end, 1030);
    Tensor second({3, 3, 2});
    std::copy_n(stream.buffer().begin() + 18, 18, second.buffer().begin());
    EXPECT_NEAR(out[1].loss, m.reconstruction_loss(second), 1e-12);
    for (const auto& r : out) EXPECT_EQ(r.is_anomaly, r.loss > c.threshold);
    EXPECT_THROW(detect(m, random_tensor({2, 3, 2}, rng)), InsufficientDataError);
}
