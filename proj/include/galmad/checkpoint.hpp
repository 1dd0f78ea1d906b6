#pragma once

#include <filesystem>
#include <string>

#include "galmad/model.hpp"
#include "galmad/preprocess.hpp"
#include "galmad/schema.hpp"

namespace galmad {

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to score new telemetry: model, feature schema, the
/// preprocessing switches and the fitted scaler.
struct Checkpoint {
    GalMad model;
    FeatureSchema schema;
    FeatureOptions features;
    Scaler scaler;
};

std::string checkpoint_json(GalMad& model, const FeatureSchema& schema, const FeatureOptions& features,
                            const Scaler& scaler);
// Throws ConfigError for an unknown format, a version mismatch or inconsistent shapes.
Checkpoint parse_checkpoint(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, GalMad& model, const FeatureSchema& schema,
                     const FeatureOptions& features, const Scaler& scaler);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// JSON object of every GalMadConfig field.
std::string config_json(const GalMadConfig& c);
GalMadConfig parse_config_json(const std::string& text);

}  // namespace galmad
