#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "../common/gradcheck.hpp"
#include "galmad/error.hpp"
#include "galmad/localization.hpp"
#include "json.hpp"

using namespace galmad;
using namespace galmad::testing;

namespace {

AttributionMatrix zero_matrix(const FeatureSchema& s) {
    return AttributionMatrix{Tensor({s.n(), s.k()}), false, s.services(), s.features()};
}

}  // namespace

TEST(Aggregate, SumsSelectedStepsThenWeights) {
    const FeatureSchema s = FeatureSchema::standard();
    std::mt19937_64 rng(1);
    const Tensor steps = random_tensor({3, 12, 22}, rng);
    const AttributionMatrix one = aggregate(steps, {0, 1, 0}, s, {.weighting = false});
    for (std::size_t i = 0; i < 264; ++i) EXPECT_EQ(one.values[i], steps[264 + i]);
    const AttributionMatrix w = aggregate(steps, {0, 1, 0}, s);
    EXPECT_TRUE(w.weighted);
    for (std::size_t j = 0; j < 12; ++j) {
        for (std::size_t f = 0; f < 22; ++f) {
            const bool weighted = f == metric::fs_usage || f >= metric::response_time;
            EXPECT_EQ(w.values.at(j, f), (weighted ? 4.0 : 1.0) * one.values.at(j, f));
        }
    }
    Tensor twice({2, 12, 22});
    for (std::size_t i = 0; i < 264; ++i) twice[i] = twice[264 + i] = steps[i];
    const AttributionMatrix doubled = aggregate(twice, {1, 1}, s, {.weighting = false});
    for (std::size_t i = 0; i < 264; ++i) EXPECT_EQ(doubled.values[i], 2.0 * steps[i]);
    EXPECT_THROW(aggregate(steps, {0, 0, 0}, s), InsufficientDataError);
    EXPECT_THROW(aggregate(steps, {1, 1}, s), DimensionError);
}

TEST(Localize, SingleNonzeroEntry) {
    const FeatureSchema s = FeatureSchema::standard();
    AttributionMatrix m = zero_matrix(s);
    m.values.at(s.service_index("mongodb"), metric::response_time) = -0.7;
    const LocalizationVerdict v = localize(m);
    ASSERT_TRUE(v.conclusive);
    EXPECT_EQ(v.service, "mongodb");
    EXPECT_EQ(v.feature, "response_time");
    EXPECT_DOUBLE_EQ(v.service_score, 0.7);
    EXPECT_DOUBLE_EQ(v.feature_value, -0.7);
}

TEST(Localize, WeightingFlipsTheArgmax) {
    const FeatureSchema s = FeatureSchema::standard();
    Tensor step({1, 12, 22});
    const std::size_t dispatch = s.service_index("dispatch"), web = s.service_index("web");
    step[dispatch * 22 + metric::cpu_usage] = 1.0;
    step[web * 22 + metric::response_time] = 0.5;
    EXPECT_EQ(localize(aggregate(step, {1}, s, {.weighting = false})).service, "dispatch");
    const LocalizationVerdict v = localize(aggregate(step, {1}, s));
    EXPECT_EQ(v.service, "web");
    EXPECT_EQ(v.feature, "response_time");
}

TEST(Localize, TiesLowestIndexAndScaleInvariance) {
    const FeatureSchema s = FeatureSchema::standard();
    AttributionMatrix m = zero_matrix(s);
    m.values.at(3, 5) = 1.0;
    m.values.at(7, 2) = -1.0;
    m.values.at(7, 1) = 1.0;
    m.values.at(3, 6) = 1.0;
    const LocalizationVerdict v = localize(m);
    EXPECT_EQ(v.service_index, 3u);
    EXPECT_EQ(v.feature_index, 5u);
    std::mt19937_64 rng(2);
    AttributionMatrix r = zero_matrix(s);
    r.values = random_tensor({12, 22}, rng);
    const LocalizationVerdict before = localize(r);
    for (double& x : r.values.data()) x *= 37.5;
    const LocalizationVerdict after = localize(r);
    EXPECT_EQ(before.service, after.service);
    EXPECT_EQ(before.feature, after.feature);
}

TEST(Localize, AllZeroIsInconclusive) {
    const LocalizationVerdict v = localize(zero_matrix(FeatureSchema::standard()));
    EXPECT_FALSE(v.conclusive);
    const auto j = nlohmann::json::parse(verdict_json(v, zero_matrix(FeatureSchema::standard())));
    EXPECT_FALSE(j.at("conclusive").get<bool>());
}

TEST(Heatmap, CsvRoundTripAndAxes) {
    const FeatureSchema s = FeatureSchema::standard();
    std::mt19937_64 rng(3);
    AttributionMatrix m = zero_matrix(s);
    m.values = random_tensor({12, 22}, rng);
    m.values[5] = 1.0 / 3.0;
    const std::string csv = heatmap_csv(m);
    const AttributionMatrix back = parse_heatmap_csv(csv);
    EXPECT_EQ(back.values, m.values);
    EXPECT_EQ(back.services, s.services());
    EXPECT_EQ(back.features, s.features());
    std::istringstream in(csv);
    std::string first, second;
    std::getline(in, first);
    std::getline(in, second);
    EXPECT_EQ(first.rfind("feature_index,0,1,2", 0), 0u);
    EXPECT_NE(first.find(",21"), std::string::npos);
    EXPECT_EQ(second.rfind("service,container_memory_rss", 0), 0u);
    std::size_t lines = 2;
    for (std::string line; std::getline(in, line);) ++lines;
    EXPECT_EQ(lines, 14u);
    EXPECT_THROW(parse_heatmap_csv("junk\n"), IngestionError);
}

TEST(Heatmap, ExportWritesCsvAndSvg) {
    const FeatureSchema s = FeatureSchema::standard();
    AttributionMatrix m = zero_matrix(s);
    m.values.at(0, 0) = 2.0;
    const auto stem = std::filesystem::temp_directory_path() / "galmad_heatmap_test";
    export_heatmap(m, stem);
    std::ifstream svg(stem.string() + ".svg");
    std::string head;
    std::getline(svg, head);
    EXPECT_NE(head.find("<svg"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(stem.string() + ".csv"));
    std::filesystem::remove(stem.string() + ".svg");
    std::filesystem::remove(stem.string() + ".csv");
}
