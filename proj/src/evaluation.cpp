#include "galmad/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>
#include <sstream>

#include "galmad/checkpoint.hpp"
#include "galmad/error.hpp"
#include "galmad/shapley.hpp"
#include "json.hpp"

namespace galmad {

using json = nlohmann::ordered_json;

Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw InsufficientDataError("metrics: no evaluated windows");
    Metrics m;
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.recall_defined = c.tp + c.fn > 0;
    m.recall = m.recall_defined ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    m.specificity_defined = c.tn + c.fp > 0;
    m.specificity = m.specificity_defined ? static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp) : 0.0;
    return m;
}

ConfusionCounts confusion(const std::vector<LabeledWindow>& windows, const std::vector<double>& losses, double c) {
    if (windows.size() != losses.size()) throw DimensionError("confusion: one loss per window required");
    ConfusionCounts out;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const bool flagged = score(losses[i], c).is_anomaly;
        if (windows[i].anomalous()) {
            (flagged ? out.tp : out.fn)++;
        } else {
            (flagged ? out.fp : out.tn)++;
        }
    }
    return out;
}

PreparedData prepare_data(const Dataset& data, const FeatureSchema& schema, const FeatureOptions& features,
                          std::size_t window_len) {
    PreparedData p{data.topology, schema, features, window_len, {}, {}};
    p.normal = make_windows(build_features(data.normal, schema, features), {}, window_len);
    for (const auto& [type, corpus] : data.anomalous) {
        std::vector<FaultLabel> labels;
        for (const FaultLabel& l : data.labels) {
            if (l.anomaly_type == type) labels.push_back(l);
        }
        p.anomalous[type] = make_windows(build_features(corpus, schema, features), labels, window_len);
    }
    return p;
}

namespace {

json counts_json(const ConfusionCounts& c) { return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}}; }

std::string fnv_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace

std::string report_json(const ExperimentReport& r, bool include_runtime) {
    json j;
    j["variant"] = r.variant;
    j["ratio"] = r.ratio;
    j["seed"] = r.seed;
    j["counts"] = counts_json(r.counts);
    j["metrics"] = {{"accuracy", r.metrics.accuracy},
                    {"recall", r.metrics.recall},
                    {"specificity", r.metrics.specificity},
                    {"recall_defined", r.metrics.recall_defined},
                    {"specificity_defined", r.metrics.specificity_defined}};
    if (include_runtime) j["runtime_s"] = r.runtime_s;
    j["fingerprint"] = r.fingerprint;
    j["config"] = json::parse(config_json(r.config));
    json per_type = json::object();
    for (const auto& [type, c] : r.per_type) per_type[type] = counts_json(c);
    j["per_type"] = per_type;
    j["mean_normal_loss"] = r.mean_normal_loss;
    j["mean_anomalous_loss"] = r.mean_anomalous_loss;
    json epochs = json::array();
    for (const EpochRecord& e : r.log.epochs) {
        epochs.push_back({{"epoch", e.epoch}, {"mean_loss", e.mean_loss}, {"learning_rate", e.learning_rate}});
    }
    j["training"] = epochs;
    return j.dump();
}

std::string config_fingerprint(const GalMadConfig& config, const std::string& ratio, const std::string& data_provenance,
                               const FeatureSchema& schema) {
    std::string text = config_json(config) + "|" + ratio + "|" + data_provenance + "|";
    for (const std::string& s : schema.services()) text += s + ",";
    for (const std::string& f : schema.features()) text += f + ",";
    return fnv_hex(text);
}

ExperimentReport evaluate_model(GalMad& model, const std::vector<LabeledWindow>& scaled_test) {
    std::vector<Tensor> tensors;
    tensors.reserve(scaled_test.size());
    for (const LabeledWindow& w : scaled_test) tensors.push_back(w.tensor);
    const std::vector<double> losses = model.window_losses(tensors);
    ExperimentReport r;
    r.variant = variant_name(model.variant());
    r.config = model.config();
    r.counts = confusion(scaled_test, losses, model.config().threshold);
    r.metrics = metrics(r.counts);
    double normal = 0.0, anomalous = 0.0;
    std::size_t n_normal = 0, n_anomalous = 0;
    for (std::size_t i = 0; i < scaled_test.size(); ++i) {
        if (scaled_test[i].anomalous()) {
            ConfusionCounts& c = r.per_type[scaled_test[i].label];
            (score(losses[i], model.config().threshold).is_anomaly ? c.tp : c.fn)++;
            anomalous += losses[i];
            ++n_anomalous;
        } else {
            normal += losses[i];
            ++n_normal;
        }
    }
    r.mean_normal_loss = n_normal ? normal / static_cast<double>(n_normal) : 0.0;
    r.mean_anomalous_loss = n_anomalous ? anomalous / static_cast<double>(n_anomalous) : 0.0;
    return r;
}

ExperimentOutcome run_experiment(const PreparedData& data, GalMadConfig config, Variant variant, const Ratio& ratio,
                                 std::uint64_t seed) {
    const auto started = std::chrono::steady_clock::now();
    config.seed = seed;
    config.n_services = data.schema.n();
    config.n_features = data.schema.k();
    config.window_len = data.window_len;
    Splits splits = build_splits(data.normal, data.anomalous, ratio, seed);
    Scaler scaler = fit_scaler(splits.train);
    // Scaling a copy keeps the TrainSet provenance intact.
    std::vector<Tensor> train;
    train.reserve(splits.train.windows().size());
    for (const LabeledWindow& w : splits.train.windows()) train.push_back(scaler.applied(w.tensor));
    scaler.apply(splits.test);

    if (data.topology.services() != data.schema.services()) {
        throw ConfigError("run_experiment: schema services must match the topology order");
    }
    GalMad model(config, variant, data.topology);
    TrainingLog log = galmad::train(model, train);
    train.clear();
    ExperimentReport report = evaluate_model(model, splits.test);
    report.seed = seed;
    report.ratio = ratio.to_string();
    report.log = std::move(log);
    report.config = config;
    report.fingerprint = config_fingerprint(config, report.ratio, scaler.provenance(), data.schema);
    report.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return ExperimentOutcome{std::move(report), std::move(model), std::move(scaler), std::move(splits)};
}

std::vector<FeatureFamily> expected_families(AnomalyType type) {
    using F = FeatureFamily;
    switch (type) {
        case AnomalyType::RtDelay:
        case AnomalyType::HighLatency: return {F::ResponseTime};
        case AnomalyType::HighCpu: return {F::Cpu};
        case AnomalyType::HighFileIo: return {F::Filesystem};
        case AnomalyType::MemoryLeak: return {F::Memory};
        case AnomalyType::PacketLoss:
        case AnomalyType::OutOfOrder:
        case AnomalyType::LowBandwidth: return {F::Network, F::ResponseTime};
        case AnomalyType::HighUserLoad: return {F::Cpu, F::Network, F::ResponseTime};
        case AnomalyType::ServiceDown: return {F::Cpu, F::Memory, F::Network, F::Filesystem, F::ResponseTime};
    }
    return {};
}

LocalizationReport run_localization_eval(GalMad& model, const Scaler& scaler, const FeatureSchema& schema,
                                         const FeatureOptions& features, const WorkloadModel& workload,
                                         const Tensor& background, const std::vector<AnomalyType>& types,
                                         const LocalizationOptions& options) {
    const std::size_t t = model.config().window_len;
    const auto step = static_cast<double>(kStepSeconds);
    const auto warm_steps = static_cast<std::size_t>(options.warmup_s / step);
    const auto fault_steps = static_cast<std::size_t>(options.fault_s / step);
    if (fault_steps == 0) throw ConfigError("localization eval: fault_s shorter than one step");
    const BatchModelFn f = loss_function(model);
    LocalizationReport report;
    std::mt19937_64 rng(options.seed);
    for (AnomalyType type : types) {
        LocalizationRow row;
        row.type = anomaly_name(type);
        const std::vector<FeatureFamily> families = expected_families(type);
        for (std::size_t trial = 0; trial < options.trials; ++trial) {
            LocalizationTrial result;
            result.type = row.type;
            const std::size_t target = std::uniform_int_distribution<std::size_t>(0, workload.topology.size() - 1)(rng);
            const auto offset = std::uniform_int_distribution<std::int64_t>(0, 17279)(rng);
            result.target = workload.topology.services()[target];
            const std::int64_t start = workload.start_ts + offset * kStepSeconds;
            Trace trace = generate_trace(workload, start, warm_steps + fault_steps,
                                         100000 + 1000 * static_cast<std::uint64_t>(type) + trial + options.seed * 7);
            FaultSpec fault = FaultSpec::defaults(type, result.target, options.weak);
            fault.start_ts = start + static_cast<std::int64_t>(warm_steps) * kStepSeconds;
            fault.end_ts = fault.start_ts + static_cast<std::int64_t>(fault_steps) * kStepSeconds;
            fault.seed = options.seed * 1000 + trial;
            const FaultLabel label = inject(trace, workload, fault);
            FeatureStream stream = build_features(to_corpus(trace, workload), schema, features);
            scaler.apply(stream.values);
            std::vector<LabeledWindow> windows = make_windows(stream, {label}, t);
            std::vector<Tensor> tensors;
            for (const LabeledWindow& w : windows) tensors.push_back(w.tensor);
            const std::vector<double> losses = model.window_losses(tensors);
            for (std::size_t w = 0; w < windows.size(); ++w) {
                if (!windows[w].anomalous() || !score(losses[w], model.config().threshold).is_anomaly) continue;
                result.detected = true;
                ShapleyOptions so;
                so.samples = options.samples;
                so.seed = options.seed + trial;
                const Tensor phi = shapley_per_step(f, windows[w].tensor, background, so);
                AggregateOptions ao;
                ao.weighting = options.weighting;
                const AttributionMatrix attr = aggregate(phi, std::vector<std::uint8_t>(t, 1), schema, ao);
                result.verdict = localize(attr);
                result.service_hit = result.verdict.conclusive && result.verdict.service == result.target;
                result.feature_hit =
                    result.service_hit && std::find(families.begin(), families.end(),
                                                    family_of(result.verdict.feature_index)) != families.end();
                break;
            }
            ++row.trials;
            row.detected += result.detected;
            row.service_hits += result.service_hit;
            row.feature_hits += result.feature_hit;
            report.trials.push_back(std::move(result));
        }
        report.rows.push_back(row);
    }
    return report;
}

std::string localization_json(const LocalizationReport& r) {
    json rows = json::array();
    for (const LocalizationRow& row : r.rows) {
        rows.push_back({{"type", row.type},
                        {"trials", row.trials},
                        {"detected", row.detected},
                        {"service_hits", row.service_hits},
                        {"feature_hits", row.feature_hits}});
    }
    json trials = json::array();
    for (const LocalizationTrial& t : r.trials) {
        trials.push_back({{"type", t.type},
                          {"target", t.target},
                          {"detected", t.detected},
                          {"service", t.verdict.conclusive ? json(t.verdict.service) : json(nullptr)},
                          {"feature", t.verdict.conclusive ? json(t.verdict.feature) : json(nullptr)},
                          {"service_hit", t.service_hit},
                          {"feature_hit", t.feature_hit}});
    }
    return json{{"rows", rows}, {"trials", trials}}.dump();
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string fixed(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

}  // namespace

std::string format_detection_table(const std::vector<ExperimentReport>& reports) {
    std::vector<std::string> variants, ratios;
    for (const ExperimentReport& r : reports) {
        if (std::find(variants.begin(), variants.end(), r.variant) == variants.end()) variants.push_back(r.variant);
        if (std::find(ratios.begin(), ratios.end(), r.ratio) == ratios.end()) ratios.push_back(r.ratio);
    }
    std::ostringstream out;
    for (const std::string& v : variants) {
        out << pad(v, 12);
        for (const std::string& ratio : ratios) out << pad(ratio, 10);
        out << '\n';
        for (const char* metric : {"A", "R", "S"}) {
            out << pad(std::string("  ") + metric, 12);
            for (const std::string& ratio : ratios) {
                std::string cell = "-";
                for (const ExperimentReport& r : reports) {
                    if (r.variant != v || r.ratio != ratio) continue;
                    const double value = metric[0] == 'A'   ? r.metrics.accuracy
                                         : metric[0] == 'R' ? r.metrics.recall
                                                            : r.metrics.specificity;
                    cell = fixed(value);
                }
                out << pad(cell, 10);
            }
            out << '\n';
        }
    }
    return out.str();
}

std::string format_localization_table(const LocalizationReport& r) {
    std::ostringstream out;
    out << pad("anomaly", 16) << pad("trials", 8) << pad("detected", 10) << pad("service", 9) << "feature\n";
    for (const LocalizationRow& row : r.rows) {
        out << pad(row.type, 16) << pad(std::to_string(row.trials), 8) << pad(std::to_string(row.detected), 10)
            << pad(std::to_string(row.service_hits) + "/" + std::to_string(row.trials), 9)
            << std::to_string(row.feature_hits) + "/" + std::to_string(row.trials) << '\n';
    }
    return out.str();
}

}  // namespace galmad
