#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "galmad/localization.hpp"
#include "galmad/model.hpp"
#include "galmad/preprocess.hpp"
#include "galmad/workload.hpp"

namespace galmad {

// Anomaly is the positive class.
struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
    double accuracy = 0.0;
    double recall = 0.0;       // 0 when there are no positives
    double specificity = 0.0;  // 0 when there are no negatives
    bool recall_defined = true;
    bool specificity_defined = true;
};

// Throws InsufficientDataError for zero windows.
Metrics metrics(const ConfusionCounts& c);

ConfusionCounts confusion(const std::vector<LabeledWindow>& windows, const std::vector<double>& losses, double c);

/// Raw (unscaled) windows of a dataset. Anomalous corpora keep their
/// normal-labeled warm-up windows; build_splits ignores them.
struct PreparedData {
    Topology topology;
    FeatureSchema schema;
    FeatureOptions features;
    std::size_t window_len = 24;
    std::vector<LabeledWindow> normal;
    std::map<std::string, std::vector<LabeledWindow>> anomalous;
};

PreparedData prepare_data(const Dataset& data, const FeatureSchema& schema, const FeatureOptions& features = {},
                          std::size_t window_len = 24);

struct ExperimentReport {
    std::string variant;
    std::string ratio;
    std::uint64_t seed = 0;
    ConfusionCounts counts;
    Metrics metrics;
    double runtime_s = 0.0;
    // Identical across variants trained on the same data, seed and budget.
    std::string fingerprint;
    GalMadConfig config;
    std::map<std::string, ConfusionCounts> per_type;
    double mean_normal_loss = 0.0;
    double mean_anomalous_loss = 0.0;
    TrainingLog log;
};

// Keys: variant, ratio, seed, counts, metrics, runtime_s, fingerprint, config, per_type, mean losses, training.
std::string report_json(const ExperimentReport& r, bool include_runtime = true);

std::string config_fingerprint(const GalMadConfig& config, const std::string& ratio, const std::string& data_provenance,
                               const FeatureSchema& schema);

struct ExperimentOutcome {
    ExperimentReport report;
    GalMad model;
    Scaler scaler;
    Splits splits;  // scaled
};

/// Splits the data at ratio, fits the scaler on the training split, trains
/// the variant with config.seed = seed and scores the mixed test set.
ExperimentOutcome run_experiment(const PreparedData& data, GalMadConfig config, Variant variant, const Ratio& ratio,
                                 std::uint64_t seed);

// Scores already scaled test windows with a trained model.
ExperimentReport evaluate_model(GalMad& model, const std::vector<LabeledWindow>& scaled_test);

// Feature families counted as a correct feature verdict for each anomaly type.
std::vector<FeatureFamily> expected_families(AnomalyType type);

struct LocalizationOptions {
    std::size_t trials = 10;
    std::uint64_t seed = 0;
    std::size_t samples = 2;  // Shapley permutations per step
    bool weighting = true;
    bool weak = false;
    double warmup_s = 1800.0;
    double fault_s = 600.0;
};

struct LocalizationTrial {
    std::string type;
    std::string target;
    bool detected = false;
    bool service_hit = false;
    bool feature_hit = false;
    LocalizationVerdict verdict;
};

struct LocalizationRow {
    std::string type;
    std::size_t trials = 0, detected = 0, service_hits = 0, feature_hits = 0;
};

struct LocalizationReport {
    std::vector<LocalizationRow> rows;
    std::vector<LocalizationTrial> trials;
};

/// For each type, injects the fault into a fresh segment with a seeded
/// random target, runs detection and localizes the first flagged window
/// overlapping the fault. A feature hit needs the service hit and a verdict
/// feature in expected_families(type). Undetected trials count as misses.
LocalizationReport run_localization_eval(GalMad& model, const Scaler& scaler, const FeatureSchema& schema,
                                         const FeatureOptions& features, const WorkloadModel& workload,
                                         const Tensor& background, const std::vector<AnomalyType>& types,
                                         const LocalizationOptions& options = {});

std::string localization_json(const LocalizationReport& r);

// Aligned text tables: metric rows by ratio columns per variant, and one row per anomaly type.
std::string format_detection_table(const std::vector<ExperimentReport>& reports);
std::string format_localization_table(const LocalizationReport& r);

}  // namespace galmad
