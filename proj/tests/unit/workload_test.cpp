#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "galmad/error.hpp"
#include "galmad/preprocess.hpp"
#include "galmad/workload.hpp"

using namespace galmad;

namespace {

constexpr std::int64_t kStart = 1700000000;

double mean_of(const std::vector<double>& v, std::size_t a, std::size_t b) {
    return std::accumulate(v.begin() + static_cast<long>(a), v.begin() + static_cast<long>(b), 0.0) /
           static_cast<double>(b - a);
}

FaultSpec fault_at(AnomalyType type, const std::string& target, std::size_t a, std::size_t b, bool weak = false) {
    FaultSpec f = FaultSpec::defaults(type, target, weak);
    f.start_ts = kStart + static_cast<std::int64_t>(a) * kStepSeconds;
    f.end_ts = kStart + static_cast<std::int64_t>(b) * kStepSeconds;
    return f;
}

}  // namespace

TEST(Workload, FlatNoiselessLoadGivesConstantRates) {
    WorkloadModel m = WorkloadModel::robot_shop(1);
    m.noise = 0.0;
    m.load_jitter = 0.0;
    m.drop_rate = 0.0;
    m.peak_ratio = 1.0;
    const Trace t = generate_trace(m, kStart, 50);
    for (const ServiceTrace& s : t.services) {
        for (const auto& series : s.metrics)
            for (double v : series) EXPECT_DOUBLE_EQ(v, series.front());
        for (const auto& series : s.rt)
            for (double v : series) EXPECT_DOUBLE_EQ(v, series.front());
    }
}

TEST(Workload, HigherLoadRaisesCpuAndResponseTime) {
    WorkloadModel m = WorkloadModel::robot_shop(2);
    const Trace base = generate_trace(m, kStart, 200);
    m.load_multiplier = 2.0;
    const Trace doubled = generate_trace(m, kStart, 200);
    const std::size_t web = m.topology.index_of("web");
    EXPECT_GT(mean_of(doubled.services[web].metrics[metric::cpu_usage], 0, 200),
              1.2 * mean_of(base.services[web].metrics[metric::cpu_usage], 0, 200));
    for (std::size_t l = 0; l < base.services[web].rt.size(); ++l) {
        EXPECT_GT(mean_of(doubled.services[web].rt[l], 0, 200), mean_of(base.services[web].rt[l], 0, 200));
    }
}

TEST(Workload, DeterministicPerSeedAndStream) {
    const WorkloadModel m = WorkloadModel::robot_shop(3);
    EXPECT_EQ(generate_trace(m, kStart, 30, 1), generate_trace(m, kStart, 30, 1));
    EXPECT_NE(generate_trace(m, kStart, 30, 1), generate_trace(m, kStart, 30, 2));
    EXPECT_NE(generate_trace(WorkloadModel::robot_shop(4), kStart, 30, 1), generate_trace(m, kStart, 30, 1));
}

TEST(Workload, CorpusCountersAreMonotone) {
    const WorkloadModel m = WorkloadModel::robot_shop(5);
    Trace t = generate_trace(m, kStart, 300);
    inject(t, m, fault_at(AnomalyType::ServiceDown, "cart", 100, 200));
    const Corpus c = to_corpus(t, m);
    for (const ServiceTelemetry& s : c.services) {
        EXPECT_NO_THROW(s.validate());
        for (std::size_t k = 0; k < kMetricCount; ++k) {
            if (!is_cumulative(k)) continue;
            for (std::size_t i = 1; i < s.length(); ++i) ASSERT_GE(s.metrics[k][i], s.metrics[k][i - 1]) << s.service;
        }
        for (const auto& series : s.response_times)
            for (std::size_t i = 1; i < series.size(); ++i) ASSERT_GE(series[i], series[i - 1]);
        EXPECT_EQ(s.timestamps[1] - s.timestamps[0], kStepSeconds);
    }
}

TEST(Inject, HighCpuSlopeScalesByStrength) {
    const WorkloadModel m = WorkloadModel::robot_shop(6);
    Trace t = generate_trace(m, kStart, 240);
    const FaultLabel label = inject(t, m, fault_at(AnomalyType::HighCpu, "dispatch", 120, 240));
    EXPECT_EQ(label.anomaly_type, "high-cpu");
    EXPECT_EQ(label.target_service, "dispatch");
    // Fit the slope of the cumulative series on each side.
    const Corpus c = to_corpus(t, m);
    const auto& cpu = c.at("dispatch").metrics[metric::cpu_usage];
    const double before = (cpu[119] - cpu[0]) / 119.0;
    const double during = (cpu[239] - cpu[120]) / 119.0;
    EXPECT_NEAR(during / before, 10.0, 2.0);
}

TEST(Inject, ResponseTimeDelayAddsPerCallLatency) {
    const WorkloadModel m = WorkloadModel::robot_shop(7);
    Trace t = generate_trace(m, kStart, 240);
    FaultSpec f = fault_at(AnomalyType::RtDelay, "catalogue", 120, 240);
    f.peer = "mongodb";
    inject(t, m, f);
    const ServiceTrace& s = t.services[m.topology.index_of("catalogue")];
    std::size_t link = 0;
    while (s.peers[link] != m.topology.index_of("mongodb")) ++link;
    auto per_call = [&](std::size_t a, std::size_t b) {
        double rt = 0.0, calls = 0.0;
        for (std::size_t i = a; i < b; ++i) {
            rt += s.rt[link][i];
            calls += s.calls[link][i];
        }
        return rt / calls;
    };
    EXPECT_NEAR(per_call(120, 240) - per_call(0, 120), 0.4, 0.04);
    // Other links of the target are untouched.
    Trace clean = generate_trace(m, kStart, 240);
    for (std::size_t l = 0; l < s.peers.size(); ++l) {
        if (l != link) EXPECT_EQ(s.rt[l], clean.services[m.topology.index_of("catalogue")].rt[l]);
    }
}

TEST(Inject, OutsideTheIntervalTraceIsBitwiseUnchanged) {
    const WorkloadModel m = WorkloadModel::robot_shop(8);
    const Trace clean = generate_trace(m, kStart, 300);
    for (AnomalyType type : all_anomaly_types()) {
        Trace t = clean;
        inject(t, m, fault_at(type, "web", 100, 200));
        for (std::size_t j = 0; j < t.services.size(); ++j) {
            const ServiceTrace& a = t.services[j];
            const ServiceTrace& b = clean.services[j];
            for (std::size_t k = 0; k < kMetricCount; ++k) {
                for (std::size_t i = 0; i < 300; ++i) {
                    if (i >= 100 && i < 200) continue;
                    ASSERT_EQ(a.metrics[k][i], b.metrics[k][i]) << anomaly_name(type) << " service " << j;
                }
            }
            for (std::size_t l = 0; l < a.rt.size(); ++l) {
                for (std::size_t i = 0; i < 300; ++i) {
                    if (i >= 100 && i < 200) continue;
                    ASSERT_EQ(a.rt[l][i], b.rt[l][i]) << anomaly_name(type);
                    ASSERT_EQ(a.calls[l][i], b.calls[l][i]) << anomaly_name(type);
                }
            }
        }
    }
}

TEST(Inject, StrongFaultsSeparateByThreeSigma) {
    const WorkloadModel m = WorkloadModel::robot_shop(9);
    const FeatureSchema schema = FeatureSchema::standard();
    for (AnomalyType type : all_anomaly_types()) {
        const std::string target = type == AnomalyType::HighUserLoad ? "web" : "catalogue";
        Trace t = generate_trace(m, kStart, 720, 40 + static_cast<std::uint64_t>(type));
        inject(t, m, fault_at(type, target, 360, 720));
        const FeatureStream fs = build_features(to_corpus(t, m), schema);
        double best = 0.0;
        for (std::size_t j = 0; j < schema.n(); ++j) {
            for (std::size_t f = 0; f < schema.k(); ++f) {
                double mb = 0, sb = 0, mf = 0;
                // Skip the first step (no rate yet) and the response-time averages' warm-up.
                for (std::size_t i = 1; i < 360; ++i) mb += fs.values.at(i, j, f);
                mb /= 359.0;
                for (std::size_t i = 1; i < 360; ++i) sb += std::pow(fs.values.at(i, j, f) - mb, 2);
                sb = std::sqrt(sb / 359.0);
                for (std::size_t i = 360; i < 720; ++i) mf += fs.values.at(i, j, f);
                mf /= 360.0;
                if (sb > 0) best = std::max(best, std::abs(mf - mb) / sb);
            }
        }
        EXPECT_GE(best, 3.0) << anomaly_name(type);
    }
}

TEST(Inject, RejectsBadFaults) {
    const WorkloadModel m = WorkloadModel::robot_shop(10);
    Trace t = generate_trace(m, kStart, 50);
    EXPECT_THROW(inject(t, m, fault_at(AnomalyType::HighCpu, "nosuch", 10, 20)), ConfigError);
    EXPECT_THROW(inject(t, m, fault_at(AnomalyType::HighCpu, "web", 40, 60)), ConfigError);
    FaultSpec f = fault_at(AnomalyType::HighCpu, "web", 10, 20);
    f.multiplier = -1.0;
    EXPECT_THROW(inject(t, m, f), ConfigError);
    EXPECT_THROW(parse_anomaly("disk-full"), ConfigError);
    for (AnomalyType type : all_anomaly_types()) EXPECT_EQ(parse_anomaly(anomaly_name(type)), type);
}

TEST(Scenario, DefaultHasTenSegmentsWithRequestedDurations) {
    const Scenario s = Scenario::standard(11, 7200.0);
    const Dataset d = scenario(s);
    EXPECT_EQ(d.anomalous.size(), 10u);
    EXPECT_EQ(d.labels.size(), 10u);
    EXPECT_EQ(d.normal.services.front().length(), 7200u / 5u);
    for (const FaultLabel& l : d.labels) {
        EXPECT_EQ(l.end_ts - l.start_ts, 5400);
        const auto& seg = d.anomalous.at(l.anomaly_type).services.front();
        EXPECT_EQ(seg.length(), (1800u + 5400u) / 5u);
        EXPECT_EQ(l.start_ts - seg.timestamps.front(), 1800);
        EXPECT_GT(seg.timestamps.front(), d.normal.services.front().timestamps.back());
    }
}

TEST(Scenario, EmptyFaultListIsPureNormal) {
    Scenario s = Scenario::standard(12, 3600.0);
    s.faults.clear();
    const Dataset d = scenario(s);
    EXPECT_TRUE(d.anomalous.empty());
    EXPECT_TRUE(d.labels.empty());
    EXPECT_EQ(d.normal, generate_normal(s.model, 3600.0).normal);
}

TEST(Scenario, OverlappingFaultsOnOneServiceRejected) {
    Scenario s = Scenario::standard(13, 3600.0);
    FaultSpec a = s.placed(AnomalyType::HighCpu, "web");
    FaultSpec b = a;
    b.type = AnomalyType::HighFileIo;
    b.start_ts += 60;
    b.end_ts += 60;
    s.faults = {a, b};
    EXPECT_THROW(scenario(s), ConfigError);
    b.target = "cart";
    s.faults = {a, b};
    EXPECT_NO_THROW(scenario(s));
}

TEST(Scenario, JsonRoundTripAndDiagnostics) {
    const Scenario s = Scenario::standard(14, 3600.0);
    const Scenario back = Scenario::from_json_text(s.to_json_text());
    EXPECT_EQ(back.to_json_text(), s.to_json_text());
    EXPECT_EQ(scenario(back), scenario(s));
    try {
        Scenario::from_json_text("{\n  \"seed\": 3,\n  \"faults\": [ }\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
        EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
    }
    EXPECT_THROW(Scenario::from_json_text(R"({"faults": [{"type": "nope", "target": "web"}]})"), ConfigError);
}
