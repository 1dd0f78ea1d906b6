#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "galmad/schema.hpp"
#include "galmad/topology.hpp"

namespace galmad {

inline constexpr std::int64_t kStepSeconds = 5;

/// Raw telemetry of one service: the 19 metrics as scraped (counters
/// cumulative) plus per-peer cumulative response time and call count.
struct ServiceTelemetry {
    std::string service;
    std::vector<std::int64_t> timestamps;
    std::array<std::vector<double>, kMetricCount> metrics;
    std::vector<std::string> peers;
    std::vector<std::vector<double>> response_times;  // per peer, seconds
    std::vector<std::vector<double>> calls;           // per peer

    std::size_t length() const { return timestamps.size(); }
    // Throws IngestionError when series lengths disagree or timestamps do not increase.
    void validate() const;
    friend bool operator==(const ServiceTelemetry&, const ServiceTelemetry&) = default;
};

// Services in topology order, all sharing one timestamp axis.
struct Corpus {
    std::vector<ServiceTelemetry> services;
    const ServiceTelemetry& at(const std::string& service) const;
    friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Fault interval [start_ts, end_ts).
struct FaultLabel {
    std::string anomaly_type;
    std::string target_service;
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    bool contains(std::int64_t ts) const { return ts >= start_ts && ts < end_ts; }
    friend bool operator==(const FaultLabel&, const FaultLabel&) = default;
};

struct Dataset {
    Topology topology;
    Corpus normal;
    std::map<std::string, Corpus> anomalous;  // keyed by anomaly type
    std::vector<FaultLabel> labels;
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Canonical CSV files. cAdvisor: timestamp + metric columns.
// response_times: timestamp + rt_<peer>... + calls_<peer>...
std::string cadvisor_csv(const ServiceTelemetry& s);
std::string response_times_csv(const ServiceTelemetry& s);

// Parses both files of one service; rt_text may be empty for a service without links.
// source names the files in error messages.
ServiceTelemetry parse_service(const std::string& service, const std::string& cadvisor_text,
                               const std::string& rt_text, const std::string& source = "");

std::string labels_csv(const std::vector<FaultLabel>& labels);
std::vector<FaultLabel> parse_labels(const std::string& text, const std::string& source = "");

/// Reads normal/{cAdvisor,response_times}/<svc>.csv,
/// anomalous/<type>/{cAdvisor,response_times}/<svc>.csv, labels.csv and
/// topology.json (RobotShop when absent). Throws IngestionError naming the
/// offending path.
Dataset load_dataset(const std::filesystem::path& root);
void write_dataset(const Dataset& data, const std::filesystem::path& root);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace galmad
