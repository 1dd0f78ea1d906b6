#include <gtest/gtest.h>

#include <random>

#include "../common/fixtures.hpp"
#include "galmad/error.hpp"
#include "galmad/evaluation.hpp"
#include "json.hpp"

using namespace galmad;
using namespace galmad::testing;

namespace {

std::vector<LabeledWindow> labelled(const std::vector<std::string>& labels) {
    std::vector<LabeledWindow> out;
    for (const auto& l : labels) {
        LabeledWindow w;
        w.label = l;
        out.push_back(w);
    }
    return out;
}

}  // namespace

TEST(Metrics, PerfectAndArithmetic) {
    const Metrics p = metrics({.tp = 4, .fp = 0, .tn = 6, .fn = 0});
    EXPECT_EQ(p.accuracy, 1.0);
    EXPECT_EQ(p.recall, 1.0);
    EXPECT_EQ(p.specificity, 1.0);
    const Metrics m = metrics({.tp = 9, .fp = 5, .tn = 85, .fn = 1});
    EXPECT_DOUBLE_EQ(m.accuracy, 0.94);
    EXPECT_DOUBLE_EQ(m.recall, 0.9);
    EXPECT_NEAR(m.specificity, 0.9444, 1e-4);
}

TEST(Metrics, UndefinedRatesAreFlagged) {
    const Metrics m = metrics({.tp = 0, .fp = 1, .tn = 3, .fn = 0});
    EXPECT_FALSE(m.recall_defined);
    EXPECT_EQ(m.recall, 0.0);
    EXPECT_TRUE(m.specificity_defined);
    EXPECT_THROW(metrics({}), InsufficientDataError);
}

TEST(Confusion, StrictThresholdAndSubsetIdentities) {
    const auto ws = labelled({"normal", "normal", "rt-delay", "high-cpu", "normal"});
    const std::vector<double> losses{0.5, 2.0, 2.5, 1.0, 3.0};
    const ConfusionCounts c = confusion(ws, losses, 2.0);
    EXPECT_EQ(c.tp, 1u);
    EXPECT_EQ(c.fn, 1u);
    EXPECT_EQ(c.tn, 2u);
    EXPECT_EQ(c.fp, 1u);
    EXPECT_EQ(c.total(), 5u);
    // Recall from the anomalous-only subset equals the mixed-run value.
    std::vector<LabeledWindow> anomalous;
    std::vector<double> anomalous_losses;
    for (std::size_t i = 0; i < ws.size(); ++i) {
        if (ws[i].anomalous()) {
            anomalous.push_back(ws[i]);
            anomalous_losses.push_back(losses[i]);
        }
    }
    EXPECT_EQ(metrics(confusion(anomalous, anomalous_losses, 2.0)).recall, metrics(c).recall);
    EXPECT_THROW(confusion(ws, {1.0}, 2.0), DimensionError);
}

TEST(ExpectedFamilies, MatchFaultMechanisms) {
    EXPECT_EQ(expected_families(AnomalyType::HighCpu), std::vector<FeatureFamily>{FeatureFamily::Cpu});
    EXPECT_EQ(expected_families(AnomalyType::RtDelay), std::vector<FeatureFamily>{FeatureFamily::ResponseTime});
    EXPECT_EQ(expected_families(AnomalyType::HighFileIo), std::vector<FeatureFamily>{FeatureFamily::Filesystem});
    for (AnomalyType t : all_anomaly_types()) EXPECT_FALSE(expected_families(t).empty());
}

TEST(Report, JsonCarriesConfigAndOptionalRuntime) {
    ExperimentReport r;
    r.variant = "gal-mad";
    r.ratio = "90:10";
    r.seed = 3;
    r.counts = {.tp = 1, .fp = 0, .tn = 9, .fn = 0};
    r.metrics = metrics(r.counts);
    r.runtime_s = 12.5;
    r.per_type["rt-delay"] = {.tp = 1};
    const auto with = nlohmann::json::parse(report_json(r));
    for (const char* key : {"variant", "ratio", "seed", "counts", "metrics", "runtime_s", "fingerprint", "config"}) {
        EXPECT_TRUE(with.contains(key)) << key;
    }
    EXPECT_EQ(with["config"]["batch_size"], 360);
    EXPECT_FALSE(nlohmann::json::parse(report_json(r, false)).contains("runtime_s"));
}

TEST(Report, FingerprintIgnoresVariantButNotBudget) {
    const FeatureSchema s = FeatureSchema::standard();
    GalMadConfig c;
    const std::string a = config_fingerprint(c, "90:10", "normal-train:10:ff", s);
    EXPECT_EQ(a, config_fingerprint(c, "90:10", "normal-train:10:ff", s));
    c.epochs = 5;
    EXPECT_NE(a, config_fingerprint(c, "90:10", "normal-train:10:ff", s));
    EXPECT_NE(a, config_fingerprint(GalMadConfig{}, "60:40", "normal-train:10:ff", s));
    EXPECT_NE(a, config_fingerprint(GalMadConfig{}, "90:10", "normal-train:11:ff", s));
}

TEST(Experiment, SmallRunIsDeterministicAndMixesRatio) {
    const Dataset d = scenario(Scenario::from_json_text(
        R"({"seed": 5, "normal_duration_s": 14400, "warmup_s": 600, "fault_duration_s": 1800})"));
    const PreparedData p = prepare_data(d, FeatureSchema::standard());
    GalMadConfig c;
    c.epochs = 1;
    ExperimentOutcome a = run_experiment(p, c, Variant::LinearAe, Ratio::parse("60:40"), 4);
    ExperimentOutcome b = run_experiment(p, c, Variant::LinearAe, Ratio::parse("60:40"), 4);
    EXPECT_EQ(report_json(a.report, false), report_json(b.report, false));
    const double frac = static_cast<double>(a.splits.test_anomalous) / static_cast<double>(a.splits.test.size());
    EXPECT_NEAR(frac, 0.4, 1.0 / static_cast<double>(a.splits.test.size()));
    EXPECT_EQ(a.report.counts.total(), a.splits.test.size());
    ExperimentOutcome g = run_experiment(p, c, Variant::GatAe, Ratio::parse("60:40"), 4);
    EXPECT_EQ(g.report.fingerprint, a.report.fingerprint);
}
