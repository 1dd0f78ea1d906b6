#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "galmad/schema.hpp"
#include "galmad/telemetry.hpp"
#include "galmad/topology.hpp"

namespace galmad {

enum class AnomalyType {
    ServiceDown,
    HighUserLoad,
    HighCpu,
    HighFileIo,
    MemoryLeak,
    PacketLoss,
    RtDelay,
    OutOfOrder,
    LowBandwidth,
    HighLatency,
};

// service-down, high-user-load, high-cpu, high-fileIO, memory-leak, packet-loss,
// rt-delay, out-of-order, low-bandwidth, high-latency
std::string anomaly_name(AnomalyType t);
// Throws ConfigError for an unknown name.
AnomalyType parse_anomaly(const std::string& name);
const std::array<AnomalyType, 10>& all_anomaly_types();

struct ServiceProfile {
    double cpu_seconds = 0.1;      // CPU seconds per interval at unit load
    double memory_bytes = 80e6;    // resident set size
    double fs_bytes = 10e6;        // file system usage
    double fs_io_seconds = 0.001;  // file I/O seconds per interval at unit load
    double utilization = 0.25;     // server utilization at unit load
    double latency_s = 0.015;      // per-call service time when called
    double bytes_per_call = 2000;  // bytes received per call
};

/// Generator parameters. Load follows 1 + a*sin(2*pi*t/period) with
/// a = (peak_ratio - 1) / (peak_ratio + 1), scaled by load_multiplier.
struct WorkloadModel {
    Topology topology;
    std::vector<ServiceProfile> services;
    std::vector<double> link_calls;  // n x n calls per interval at unit load, row = caller, column = callee
    double period_s = 86400.0;
    double peak_ratio = 1.5;
    double load_multiplier = 1.0;
    double noise = 0.05;        // relative standard deviation of multiplicative noise
    double load_jitter = 0.02;  // relative standard deviation of the shared per-step load noise
    double drop_rate = 0.4;     // dropped packets per interval, Poisson mean
    double rho_cap = 0.95;
    std::int64_t start_ts = 1700000000;
    std::uint64_t seed = 7;

    static WorkloadModel robot_shop(std::uint64_t seed = 7);
    // Throws ConfigError.
    void validate() const;
};

/// A fault on one target service over [start_ts, end_ts). Only the strength
/// field that matches the type is read.
struct FaultSpec {
    AnomalyType type = AnomalyType::HighCpu;
    std::string target;
    std::int64_t start_ts = 0;
    std::int64_t end_ts = 0;
    double multiplier = 10.0;          // high-cpu, high-user-load, high-fileIO
    double latency_s = 0.4;            // rt-delay, high-latency
    double fraction = 0.8;             // packet-loss, out-of-order
    double bandwidth_kbps = 100.0;     // low-bandwidth
    double burst_bytes = 64.0;         // low-bandwidth
    double memory_cap_bytes = 300e6;   // memory-leak
    std::optional<std::string> peer;   // rt-delay on a single link
    std::uint64_t seed = 0;            // jitter draws

    // Default strength for the type; weak selects the milder published variant where one exists.
    static FaultSpec defaults(AnomalyType type, const std::string& target, bool weak = false);
    // Throws ConfigError.
    void validate() const;
};

/// Per-interval telemetry before cumulation. Counter metrics hold the
/// increment of each interval, gauges their level.
struct ServiceTrace {
    std::array<std::vector<double>, kMetricCount> metrics;
    std::vector<std::size_t> peers;
    std::vector<std::vector<double>> rt;     // seconds per interval, per peer
    std::vector<std::vector<double>> calls;  // per interval, per peer
    std::vector<double> utilization;
    friend bool operator==(const ServiceTrace&, const ServiceTrace&) = default;
};

struct Trace {
    std::vector<std::int64_t> timestamps;
    std::vector<double> load;
    std::vector<ServiceTrace> services;
    std::size_t length() const { return timestamps.size(); }
    friend bool operator==(const Trace&, const Trace&) = default;
};

// steps samples from start_ts; stream selects an independent noise sequence.
Trace generate_trace(const WorkloadModel& model, std::int64_t start_ts, std::size_t steps, std::uint64_t stream = 0);

// Pure on everything outside the fault interval. Throws ConfigError for an
// unknown target or an interval outside the trace.
FaultLabel inject(Trace& trace, const WorkloadModel& model, const FaultSpec& fault);

// Cumulates counters, response times and call counts from zero.
Corpus to_corpus(const Trace& trace, const WorkloadModel& model);

// Normal corpus of duration_s seconds; no labels or anomalous segments.
Dataset generate_normal(const WorkloadModel& model, double duration_s);

struct Scenario {
    WorkloadModel model;
    double normal_duration_s = 86400.0;
    double warmup_s = 1800.0;
    double fault_duration_s = 5400.0;
    std::vector<FaultSpec> faults;

    // One strong fault per type, each in its own segment after the normal corpus.
    static Scenario standard(std::uint64_t seed = 7, double normal_duration_s = 86400.0);
    // Segment start for the i-th anomaly type in all_anomaly_types() order.
    std::int64_t segment_start(std::size_t type_index) const;
    // Fault window of the i-th type's segment with the default placement.
    FaultSpec placed(AnomalyType type, const std::string& target, bool weak = false) const;

    // Parses scenario JSON; malformed JSON raises ConfigError with line and column.
    static Scenario from_json_text(const std::string& text);
    std::string to_json_text() const;
};

/// Normal corpus plus one anomalous corpus per anomaly type present in the
/// fault list, each spanning warmup_s before its first fault to its last
/// fault end. Throws ConfigError for overlapping faults on one service.
Dataset scenario(const Scenario& s);

}  // namespace galmad
