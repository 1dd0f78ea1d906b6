#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace galmad {

inline constexpr std::size_t kMetricCount = 19;

// cAdvisor metric names in table order.
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "container_memory_rss",
    "container_memory_usage_bytes",
    "container_memory_failures_total",
    "container_memory_working_set_bytes",
    "container_memory_failcnt",
    "container_cpu_usage_seconds_total",
    "container_cpu_user_seconds_total",
    "container_cpu_system_seconds_total",
    "container_network_receive_bytes_total",
    "container_network_receive_errors_total",
    "container_network_receive_packets_dropped_total",
    "container_network_receive_packets_total",
    "container_network_transmit_bytes_total",
    "container_network_transmit_errors_total",
    "container_network_transmit_packets_dropped_total",
    "container_network_transmit_packets_total",
    "container_fs_usage_bytes",
    "container_fs_io_time_seconds_total",
    "container_fs_write_seconds_total",
};

namespace metric {
inline constexpr std::size_t memory_rss = 0;
inline constexpr std::size_t memory_usage = 1;
inline constexpr std::size_t memory_failures = 2;
inline constexpr std::size_t memory_working_set = 3;
inline constexpr std::size_t memory_failcnt = 4;
inline constexpr std::size_t cpu_usage = 5;
inline constexpr std::size_t cpu_user = 6;
inline constexpr std::size_t cpu_system = 7;
inline constexpr std::size_t rx_bytes = 8;
inline constexpr std::size_t rx_errors = 9;
inline constexpr std::size_t rx_dropped = 10;
inline constexpr std::size_t rx_packets = 11;
inline constexpr std::size_t tx_bytes = 12;
inline constexpr std::size_t tx_errors = 13;
inline constexpr std::size_t tx_dropped = 14;
inline constexpr std::size_t tx_packets = 15;
inline constexpr std::size_t fs_usage = 16;
inline constexpr std::size_t fs_io_time = 17;
inline constexpr std::size_t fs_write = 18;
// Derived columns appended after the metrics.
inline constexpr std::size_t response_time = 19;
inline constexpr std::size_t response_time_ma_short = 20;
inline constexpr std::size_t response_time_ma_long = 21;
}  // namespace metric

// Gauges are sampled levels; every other metric is a monotone counter.
bool is_cumulative(std::size_t metric_index);

enum class FeatureFamily { Memory, Cpu, Network, Filesystem, ResponseTime };

std::string family_name(FeatureFamily f);
FeatureFamily parse_family(const std::string& name);
FeatureFamily family_of(std::size_t feature_index);

// payment, shipping, redis, mongodb, dispatch, rabbitmq, user, mysql, catalogue, ratings, web, cart
const std::vector<std::string>& canonical_services();

/// Ordered per-service feature list: the 19 metrics, then (optionally) the
/// unified response time and its short and long moving averages.
class FeatureSchema {
public:
    FeatureSchema(std::vector<std::string> services, bool include_response_times);
    static FeatureSchema standard(bool include_response_times = true);

    const std::vector<std::string>& services() const { return services_; }
    const std::vector<std::string>& features() const { return features_; }
    bool include_response_times() const { return include_rt_; }
    std::size_t n() const { return services_.size(); }
    std::size_t k() const { return features_.size(); }
    std::size_t flat_dim() const { return n() * k(); }

    // Throws ConfigError for an unknown name.
    std::size_t feature_index(const std::string& name) const;
    std::size_t service_index(const std::string& name) const;

    // Columns scaled by the localization weighting: the three response-time columns and fs usage.
    std::vector<std::size_t> weighted_features() const;

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

private:
    std::vector<std::string> services_;
    std::vector<std::string> features_;
    bool include_rt_;
};

}  // namespace galmad
