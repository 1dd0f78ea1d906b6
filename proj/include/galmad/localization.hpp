#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "galmad/schema.hpp"
#include "galmad/tensor.hpp"

namespace galmad {

struct AttributionMatrix {
    Tensor values;  // [n x k]
    bool weighted = false;
    std::vector<std::string> services;
    std::vector<std::string> features;
    friend bool operator==(const AttributionMatrix&, const AttributionMatrix&) = default;
};

struct AggregateOptions {
    bool weighting = true;
    double factor = 4.0;
};

/// Sums per_step [t x n x k] over the steps flagged in anomalous_steps, then
/// scales the schema's weighted columns by options.factor when weighting is
/// on. Throws InsufficientDataError when no step is flagged.
AttributionMatrix aggregate(const Tensor& per_step, const std::vector<std::uint8_t>& anomalous_steps,
                            const FeatureSchema& schema, const AggregateOptions& options = {});

struct LocalizationVerdict {
    bool conclusive = false;  // false for an all-zero matrix
    std::string service;
    std::string feature;
    std::size_t service_index = 0;
    std::size_t feature_index = 0;
    double service_score = 0.0;   // sum of |value| over the service's features
    double feature_value = 0.0;   // signed value at (service, feature)
    std::vector<double> service_scores;
};

// Service = argmax of row |value| sums, feature = argmax |value| in that row; lowest index wins ties.
LocalizationVerdict localize(const AttributionMatrix& attr);

// {"service":..., "feature":..., "conclusive":..., "scores":{service: score}}
std::string verdict_json(const LocalizationVerdict& v, const AttributionMatrix& attr);

// Two header rows (feature index, feature name) then one row per service.
std::string heatmap_csv(const AttributionMatrix& attr);
AttributionMatrix parse_heatmap_csv(const std::string& text);
std::string heatmap_svg(const AttributionMatrix& attr);
// Writes <stem>.csv and <stem>.svg.
void export_heatmap(const AttributionMatrix& attr, const std::filesystem::path& stem);

}  // namespace galmad
