#include "galmad/schema.hpp"

#include <algorithm>

#include "galmad/error.hpp"

namespace galmad {

bool is_cumulative(std::size_t m) {
    if (m >= kMetricCount) throw ConfigError("metric index " + std::to_string(m) + " out of range");
    return m != metric::memory_rss && m != metric::memory_usage && m != metric::memory_working_set &&
           m != metric::fs_usage;
}

std::string family_name(FeatureFamily f) {
    switch (f) {
        case FeatureFamily::Memory: return "memory";
        case FeatureFamily::Cpu: return "cpu";
        case FeatureFamily::Network: return "network";
        case FeatureFamily::Filesystem: return "fs";
        case FeatureFamily::ResponseTime: return "rt";
    }
    return "unknown";
}

FeatureFamily parse_family(const std::string& name) {
    for (FeatureFamily f : {FeatureFamily::Memory, FeatureFamily::Cpu, FeatureFamily::Network,
                            FeatureFamily::Filesystem, FeatureFamily::ResponseTime}) {
        if (family_name(f) == name) return f;
    }
    throw ConfigError("unknown feature family '" + name + "'");
}

FeatureFamily family_of(std::size_t f) {
    if (f <= metric::memory_failcnt) return FeatureFamily::Memory;
    if (f <= metric::cpu_system) return FeatureFamily::Cpu;
    if (f <= metric::tx_packets) return FeatureFamily::Network;
    if (f <= metric::fs_write) return FeatureFamily::Filesystem;
    if (f <= metric::response_time_ma_long) return FeatureFamily::ResponseTime;
    throw ConfigError("feature index " + std::to_string(f) + " out of range");
}

const std::vector<std::string>& canonical_services() {
    static const std::vector<std::string> services = {"payment",  "shipping", "redis",     "mongodb",
                                                      "dispatch", "rabbitmq", "user",      "mysql",
                                                      "catalogue", "ratings", "web",       "cart"};
    return services;
}

FeatureSchema::FeatureSchema(std::vector<std::string> services, bool include_response_times)
    : services_(std::move(services)), include_rt_(include_response_times) {
    if (services_.empty()) throw ConfigError("feature schema needs at least one service");
    for (std::string_view m : kMetricNames) features_.emplace_back(m);
    if (include_rt_) {
        features_.emplace_back("response_time");
        features_.emplace_back("response_time_ma_5min");
        features_.emplace_back("response_time_ma_30min");
    }
}

FeatureSchema FeatureSchema::standard(bool include_response_times) {
    return FeatureSchema(canonical_services(), include_response_times);
}

std::size_t FeatureSchema::feature_index(const std::string& name) const {
    auto it = std::find(features_.begin(), features_.end(), name);
    if (it == features_.end()) throw ConfigError("schema has no feature '" + name + "'");
    return static_cast<std::size_t>(it - features_.begin());
}

std::size_t FeatureSchema::service_index(const std::string& name) const {
    auto it = std::find(services_.begin(), services_.end(), name);
    if (it == services_.end()) throw ConfigError("schema has no service '" + name + "'");
    return static_cast<std::size_t>(it - services_.begin());
}

std::vector<std::size_t> FeatureSchema::weighted_features() const {
    std::vector<std::size_t> out{metric::fs_usage};
    if (include_rt_) {
        out.push_back(metric::response_time);
        out.push_back(metric::response_time_ma_short);
        out.push_back(metric::response_time_ma_long);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace galmad
