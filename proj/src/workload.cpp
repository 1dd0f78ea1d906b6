#include "galmad/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "galmad/error.hpp"
#include "json.hpp"

namespace galmad {

using json = nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr std::size_t kTimeoutSteps = 6;  // steps of timed-out calls after a service goes down
constexpr double kShaperLatencyS = 0.4;   // queueing limit of the bandwidth shaper
constexpr double kTimeoutSeconds = 3.0;

const std::array<AnomalyType, 10> kTypes = {
    AnomalyType::ServiceDown, AnomalyType::HighUserLoad, AnomalyType::HighCpu,    AnomalyType::HighFileIo,
    AnomalyType::MemoryLeak,  AnomalyType::PacketLoss,   AnomalyType::RtDelay,    AnomalyType::OutOfOrder,
    AnomalyType::LowBandwidth, AnomalyType::HighLatency,
};

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

ServiceProfile profile(double cpu, double mem_mb, double fs_mb, double io, double util, double lat_ms, double bpc) {
    return ServiceProfile{cpu, mem_mb * 1e6, fs_mb * 1e6, io, util, lat_ms / 1000.0, bpc};
}

const std::map<std::string, ServiceProfile>& robot_shop_profiles() {
    static const std::map<std::string, ServiceProfile> p = {
        {"payment", profile(0.08, 60, 10, 0.001, 0.20, 40, 1500)},
        {"shipping", profile(0.25, 400, 30, 0.002, 0.30, 30, 1800)},
        {"redis", profile(0.05, 20, 5, 0.001, 0.15, 2, 600)},
        {"mongodb", profile(0.15, 300, 500, 0.02, 0.35, 5, 3000)},
        {"dispatch", profile(0.05, 20, 5, 0.0005, 0.15, 10, 800)},
        {"rabbitmq", profile(0.10, 120, 50, 0.005, 0.20, 5, 900)},
        {"user", profile(0.10, 80, 10, 0.001, 0.25, 15, 1200)},
        {"mysql", profile(0.15, 400, 600, 0.02, 0.35, 8, 2500)},
        {"catalogue", profile(0.10, 80, 10, 0.001, 0.25, 15, 2500)},
        {"ratings", profile(0.08, 40, 10, 0.001, 0.20, 20, 1000)},
        {"web", profile(0.20, 60, 20, 0.002, 0.30, 20, 4000)},
        {"cart", profile(0.10, 80, 10, 0.001, 0.25, 15, 1500)},
    };
    return p;
}

const std::vector<std::tuple<std::string, std::string, double>>& robot_shop_calls() {
    static const std::vector<std::tuple<std::string, std::string, double>> c = {
        {"web", "catalogue", 40}, {"web", "user", 30},        {"web", "cart", 40},        {"web", "shipping", 10},
        {"web", "payment", 10},   {"web", "ratings", 20},     {"catalogue", "mongodb", 50}, {"user", "mongodb", 30},
        {"user", "redis", 20},    {"cart", "redis", 50},      {"cart", "catalogue", 30},  {"shipping", "mysql", 20},
        {"shipping", "cart", 10}, {"ratings", "mysql", 20},   {"ratings", "catalogue", 20}, {"payment", "rabbitmq", 10},
        {"payment", "user", 10},  {"payment", "cart", 10},    {"dispatch", "rabbitmq", 10},
    };
    return c;
}

WorkloadModel model_for(Topology topo, std::uint64_t seed) {
    WorkloadModel m;
    const std::size_t n = topo.size();
    for (const std::string& s : topo.services()) {
        auto it = robot_shop_profiles().find(s);
        m.services.push_back(it == robot_shop_profiles().end() ? ServiceProfile{} : it->second);
    }
    m.link_calls.assign(n * n, 0.0);
    // Edges without a known direction carry calls both ways.
    for (auto [i, j] : topo.edge_indices()) m.link_calls[i * n + j] = m.link_calls[j * n + i] = 10.0;
    for (const auto& [a, b, calls] : robot_shop_calls()) {
        auto ia = topo.find(a), ib = topo.find(b);
        if (ia && ib && topo.connected(*ia, *ib)) {
            m.link_calls[*ia * n + *ib] = calls;
            m.link_calls[*ib * n + *ia] = 0.0;
        }
    }
    m.topology = std::move(topo);
    m.seed = seed;
    return m;
}

std::size_t step_of(const Trace& trace, std::int64_t ts) {
    auto it = std::lower_bound(trace.timestamps.begin(), trace.timestamps.end(), ts);
    return static_cast<std::size_t>(it - trace.timestamps.begin());
}

std::size_t peer_slot(const ServiceTrace& s, std::size_t peer) {
    auto it = std::find(s.peers.begin(), s.peers.end(), peer);
    return it == s.peers.end() ? s.peers.size() : static_cast<std::size_t>(it - s.peers.begin());
}

}  // namespace

std::string anomaly_name(AnomalyType t) {
    switch (t) {
        case AnomalyType::ServiceDown: return "service-down";
        case AnomalyType::HighUserLoad: return "high-user-load";
        case AnomalyType::HighCpu: return "high-cpu";
        case AnomalyType::HighFileIo: return "high-fileIO";
        case AnomalyType::MemoryLeak: return "memory-leak";
        case AnomalyType::PacketLoss: return "packet-loss";
        case AnomalyType::RtDelay: return "rt-delay";
        case AnomalyType::OutOfOrder: return "out-of-order";
        case AnomalyType::LowBandwidth: return "low-bandwidth";
        case AnomalyType::HighLatency: return "high-latency";
    }
    return "unknown";
}

AnomalyType parse_anomaly(const std::string& name) {
    for (AnomalyType t : kTypes) {
        if (anomaly_name(t) == name) return t;
    }
    throw ConfigError("unknown anomaly type '" + name + "'");
}

const std::array<AnomalyType, 10>& all_anomaly_types() { return kTypes; }

WorkloadModel WorkloadModel::robot_shop(std::uint64_t seed) { return model_for(Topology::robot_shop(), seed); }

void WorkloadModel::validate() const {
    const std::size_t n = topology.size();
    if (n == 0) throw ConfigError("workload: empty topology");
    if (services.size() != n) throw ConfigError("workload: one service profile per topology service required");
    if (link_calls.size() != n * n) throw ConfigError("workload: link_calls must be n x n");
    for (const ServiceProfile& p : services) {
        for (double v : {p.cpu_seconds, p.memory_bytes, p.fs_bytes, p.fs_io_seconds, p.utilization, p.latency_s,
                         p.bytes_per_call}) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("workload: service baselines must be nonnegative");
        }
    }
    for (double c : link_calls) {
        if (!(c >= 0.0)) throw ConfigError("workload: call rates must be nonnegative");
    }
    if (!(period_s > 0.0)) throw ConfigError("workload: period_s must be positive");
    if (!(peak_ratio >= 1.0)) throw ConfigError("workload: peak_ratio must be at least 1");
    if (!(load_multiplier >= 0.0)) throw ConfigError("workload: load_multiplier must be nonnegative");
    if (!(noise >= 0.0) || !(load_jitter >= 0.0) || !(drop_rate >= 0.0)) {
        throw ConfigError("workload: noise scales must be nonnegative");
    }
    if (!(rho_cap > 0.0 && rho_cap < 1.0)) throw ConfigError("workload: rho_cap must lie in (0, 1)");
}

FaultSpec FaultSpec::defaults(AnomalyType type, const std::string& target, bool weak) {
    FaultSpec f;
    f.type = type;
    f.target = target;
    switch (type) {
        case AnomalyType::HighUserLoad: f.multiplier = 7.5; break;
        case AnomalyType::HighCpu: f.multiplier = 10.0; break;
        case AnomalyType::HighFileIo: f.multiplier = 20.0; break;
        case AnomalyType::PacketLoss: f.fraction = weak ? 0.5 : 0.8; break;
        case AnomalyType::OutOfOrder: f.fraction = weak ? 0.25 : 0.6; break;
        case AnomalyType::LowBandwidth: f.burst_bytes = weak ? 256.0 : 64.0; break;
        case AnomalyType::HighLatency: f.latency_s = weak ? 0.2 : 1.2; break;
        case AnomalyType::RtDelay: f.latency_s = 0.4; break;
        default: break;
    }
    return f;
}

void FaultSpec::validate() const {
    if (target.empty()) throw ConfigError("fault: target service required");
    if (end_ts <= start_ts) throw ConfigError("fault " + anomaly_name(type) + ": empty interval");
    auto positive = [this](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError("fault " + anomaly_name(type) + ": " + what + " must be positive");
        }
    };
    switch (type) {
        case AnomalyType::HighUserLoad:
        case AnomalyType::HighCpu:
        case AnomalyType::HighFileIo: positive(multiplier, "multiplier"); break;
        case AnomalyType::RtDelay:
        case AnomalyType::HighLatency: positive(latency_s, "latency_s"); break;
        case AnomalyType::PacketLoss:
        case AnomalyType::OutOfOrder:
            positive(fraction, "fraction");
            if (fraction >= 1.0) throw ConfigError("fault " + anomaly_name(type) + ": fraction must be below 1");
            break;
        case AnomalyType::LowBandwidth:
            positive(bandwidth_kbps, "bandwidth_kbps");
            positive(burst_bytes, "burst_bytes");
            break;
        case AnomalyType::MemoryLeak: positive(memory_cap_bytes, "memory_cap_bytes"); break;
        case AnomalyType::ServiceDown: break;
    }
}

Trace generate_trace(const WorkloadModel& model, std::int64_t start_ts, std::size_t steps, std::uint64_t stream) {
    model.validate();
    const std::size_t n = model.topology.size();
    std::mt19937_64 rng(mix_seed(model.seed, stream));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto noisy = [&](double scale) { return model.noise > 0.0 ? 1.0 + scale * model.noise * gauss(rng) : 1.0; };

    Trace trace;
    trace.timestamps.resize(steps);
    trace.load.resize(steps);
    trace.services.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        ServiceTrace& s = trace.services[j];
        for (auto& m : s.metrics) m.assign(steps, 0.0);
        s.peers = model.topology.neighbors(j);
        s.rt.assign(s.peers.size(), std::vector<double>(steps, 0.0));
        s.calls.assign(s.peers.size(), std::vector<double>(steps, 0.0));
        s.utilization.assign(steps, 0.0);
    }
    const double amp = (model.peak_ratio - 1.0) / (model.peak_ratio + 1.0);
    std::vector<double> rho(n);
    std::vector<double> pair_calls(n * n, 0.0), pair_rt(n * n, 0.0);  // directed caller -> callee
    for (std::size_t i = 0; i < steps; ++i) {
        const std::int64_t ts = start_ts + static_cast<std::int64_t>(i) * kStepSeconds;
        trace.timestamps[i] = ts;
        const double phase = 2.0 * kPi * std::fmod(static_cast<double>(ts), model.period_s) / model.period_s;
        double load = model.load_multiplier * (1.0 + amp * std::sin(phase));
        if (model.load_jitter > 0.0) load *= 1.0 + model.load_jitter * gauss(rng);
        load = std::max(load, 0.0);
        trace.load[i] = load;
        for (std::size_t j = 0; j < n; ++j) {
            rho[j] = std::min(model.rho_cap, model.services[j].utilization * load);
            trace.services[j].utilization[i] = rho[j];
        }
        // A call's latency is the callee's; both endpoints record the same calls.
        for (std::size_t j = 0; j < n; ++j) {
            for (std::size_t peer : model.topology.neighbors(j)) {
                const double lambda = model.link_calls[j * n + peer] * load;
                double calls = lambda;
                if (model.noise > 0.0) calls = std::max(0.0, std::round(lambda + std::sqrt(lambda) * gauss(rng)));
                const double latency = model.services[peer].latency_s / (1.0 - rho[peer]);
                pair_calls[j * n + peer] = calls;
                pair_rt[j * n + peer] = std::max(0.0, calls * latency * noisy(1.0));
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            const ServiceProfile& p = model.services[j];
            ServiceTrace& s = trace.services[j];
            double total_calls = 0.0;
            for (std::size_t l = 0; l < s.peers.size(); ++l) {
                const std::size_t peer = s.peers[l];
                s.calls[l][i] = pair_calls[j * n + peer] + pair_calls[peer * n + j];
                s.rt[l][i] = pair_rt[j * n + peer] + pair_rt[peer * n + j];
                total_calls += s.calls[l][i];
            }
            auto& m = s.metrics;
            const double cpu = p.cpu_seconds * (0.2 + 0.8 * load) * noisy(1.0);
            m[metric::cpu_usage][i] = std::max(0.0, cpu);
            m[metric::cpu_user][i] = std::max(0.0, 0.7 * cpu * noisy(0.5));
            m[metric::cpu_system][i] = std::max(0.0, 0.3 * cpu * noisy(0.5));
            const double rss = p.memory_bytes * (1.0 + 0.05 * (load - 1.0)) * noisy(0.2);
            m[metric::memory_rss][i] = rss;
            m[metric::memory_usage][i] = 1.3 * rss * noisy(0.1);
            m[metric::memory_working_set][i] = 1.15 * rss * noisy(0.1);
            m[metric::memory_failures][i] = std::max(0.0, 50.0 * (0.5 + 0.5 * load) * noisy(1.0));
            m[metric::memory_failcnt][i] = 0.0;
            const double rx = total_calls * p.bytes_per_call * noisy(1.0);
            const double tx = 1.5 * total_calls * p.bytes_per_call * noisy(1.0);
            m[metric::rx_bytes][i] = std::max(0.0, rx);
            m[metric::tx_bytes][i] = std::max(0.0, tx);
            m[metric::rx_packets][i] = std::max(0.0, rx / 800.0);
            m[metric::tx_packets][i] = std::max(0.0, tx / 1000.0);
            m[metric::rx_errors][i] = 0.0;
            m[metric::tx_errors][i] = 0.0;
            if (model.noise > 0.0) {
                std::poisson_distribution<int> drops(model.drop_rate);
                m[metric::rx_dropped][i] = model.drop_rate > 0.0 ? drops(rng) : 0.0;
                m[metric::tx_dropped][i] = model.drop_rate > 0.0 ? drops(rng) : 0.0;
            } else {
                m[metric::rx_dropped][i] = model.drop_rate;
                m[metric::tx_dropped][i] = model.drop_rate;
            }
            m[metric::fs_usage][i] = p.fs_bytes * noisy(0.2);
            const double io = p.fs_io_seconds * (0.5 + 0.5 * load) * noisy(1.0);
            m[metric::fs_io_time][i] = std::max(0.0, io);
            m[metric::fs_write][i] = std::max(0.0, 0.6 * io * noisy(0.5));
        }
    }
    return trace;
}

FaultLabel inject(Trace& trace, const WorkloadModel& model, const FaultSpec& fault) {
    fault.validate();
    const std::size_t n = model.topology.size();
    if (trace.services.size() != n) throw ConfigError("inject: trace does not match the workload topology");
    const std::size_t target = model.topology.index_of(fault.target);
    if (trace.length() == 0 || fault.start_ts < trace.timestamps.front() || fault.end_ts > trace.timestamps.back() + kStepSeconds) {
        throw ConfigError("inject: fault interval lies outside the telemetry span");
    }
    const std::size_t a = step_of(trace, fault.start_ts);
    const std::size_t b = step_of(trace, fault.end_ts);
    std::mt19937_64 rng(mix_seed(model.seed ^ 0xFA017ULL, fault.seed + 31 * target + 1000003ULL * a));
    std::normal_distribution<double> gauss(0.0, 1.0);

    ServiceTrace& tgt = trace.services[target];
    auto& tm = tgt.metrics;

    // Extra seconds per call on the target's link l. Both endpoints record the same calls, so the peer sees it too.
    auto add_latency = [&](std::size_t l, std::size_t i, double per_call) {
        tgt.rt[l][i] += tgt.calls[l][i] * per_call;
        ServiceTrace& peer = trace.services[tgt.peers[l]];
        const std::size_t back = peer_slot(peer, target);
        if (back < peer.peers.size()) peer.rt[back][i] += peer.calls[back][i] * per_call;
    };
    auto scale_latency = [&](std::size_t l, std::size_t i, double factor) {
        tgt.rt[l][i] *= factor;
        ServiceTrace& peer = trace.services[tgt.peers[l]];
        const std::size_t back = peer_slot(peer, target);
        if (back < peer.peers.size()) peer.rt[back][i] *= factor;
    };
    std::vector<std::size_t> links;
    if (fault.peer) {
        const std::size_t l = peer_slot(tgt, model.topology.index_of(*fault.peer));
        if (l == tgt.peers.size()) throw ConfigError("inject: " + fault.target + " has no link to " + *fault.peer);
        links.push_back(l);
    } else {
        for (std::size_t l = 0; l < tgt.peers.size(); ++l) links.push_back(l);
    }
    const double duration = static_cast<double>(std::max<std::size_t>(b - a, 1));
    double backlog = 0.0;  // shaper queue in bytes

    for (std::size_t i = a; i < b; ++i) {
        const double elapsed = static_cast<double>(i - a + 1);
        switch (fault.type) {
            case AnomalyType::HighCpu:
                for (std::size_t m : {metric::cpu_usage, metric::cpu_user, metric::cpu_system}) tm[m][i] *= fault.multiplier;
                for (std::size_t l : links) scale_latency(l, i, 1.2);
                break;
            case AnomalyType::HighUserLoad:
                for (std::size_t j = 0; j < n; ++j) {
                    ServiceTrace& s = trace.services[j];
                    const double load = trace.load[i];
                    const double boosted = load * fault.multiplier;
                    const double cpu = (0.2 + 0.8 * boosted) / (0.2 + 0.8 * load);
                    const double half = (0.5 + 0.5 * boosted) / (0.5 + 0.5 * load);
                    for (std::size_t m : {metric::cpu_usage, metric::cpu_user, metric::cpu_system}) s.metrics[m][i] *= cpu;
                    for (std::size_t m : {metric::rx_bytes, metric::tx_bytes, metric::rx_packets, metric::tx_packets}) {
                        s.metrics[m][i] *= fault.multiplier;
                    }
                    s.metrics[metric::memory_failures][i] *= half;
                    s.metrics[metric::fs_io_time][i] *= half;
                    s.metrics[metric::fs_write][i] *= half;
                    for (std::size_t l = 0; l < s.peers.size(); ++l) {
                        const double rho = trace.services[s.peers[l]].utilization[i];
                        const double rho_up = std::min(model.rho_cap, rho * fault.multiplier);
                        s.calls[l][i] *= fault.multiplier;
                        s.rt[l][i] *= fault.multiplier * (1.0 - rho) / (1.0 - rho_up);
                    }
                }
                for (std::size_t j = 0; j < n; ++j) {
                    double& u = trace.services[j].utilization[i];
                    u = std::min(model.rho_cap, u * fault.multiplier);
                }
                break;
            case AnomalyType::HighFileIo: {
                tm[metric::fs_io_time][i] *= fault.multiplier;
                tm[metric::fs_write][i] *= fault.multiplier;
                const double extra_sys = 0.5 * tm[metric::cpu_system][i];
                tm[metric::cpu_system][i] += extra_sys;
                tm[metric::cpu_usage][i] += extra_sys;
                tm[metric::fs_usage][i] += std::min(50e6, 0.1e6 * elapsed);
                break;
            }
            case AnomalyType::MemoryLeak: {
                const double leak = std::min(fault.memory_cap_bytes, fault.memory_cap_bytes * elapsed / (duration * 2.0 / 3.0));
                for (std::size_t m : {metric::memory_rss, metric::memory_usage, metric::memory_working_set}) tm[m][i] += leak;
                break;
            }
            case AnomalyType::PacketLoss: {
                const double base = 0.2 * fault.fraction / (1.0 - fault.fraction);
                for (std::size_t l : links) add_latency(l, i, base * (1.0 + 0.5 * std::abs(gauss(rng))));
                std::poisson_distribution<int> rx(0.01 * fault.fraction * tm[metric::rx_packets][i] + 1e-9);
                std::poisson_distribution<int> tx(0.01 * fault.fraction * tm[metric::tx_packets][i] + 1e-9);
                tm[metric::rx_dropped][i] += rx(rng);
                tm[metric::tx_dropped][i] += tx(rng);
                break;
            }
            case AnomalyType::RtDelay:
            case AnomalyType::HighLatency:
                for (std::size_t l : links) add_latency(l, i, fault.latency_s);
                break;
            case AnomalyType::OutOfOrder: {
                for (std::size_t l : links) add_latency(l, i, fault.fraction * 0.3 * std::abs(gauss(rng)));
                const double dip = 1.0 - 0.3 * fault.fraction;
                for (std::size_t m : {metric::rx_bytes, metric::tx_bytes, metric::rx_packets, metric::tx_packets}) tm[m][i] *= dip;
                break;
            }
            case AnomalyType::LowBandwidth: {
                // Token-bucket shaper: excess traffic queues up to kShaperLatencyS of
                // backlog, which delays every call; beyond that it is dropped.
                const double cap = fault.bandwidth_kbps * 625.0 + fault.burst_bytes * 20.0;
                const double demand = tm[metric::rx_bytes][i] + tm[metric::tx_bytes][i];
                const double limit = cap * kShaperLatencyS / static_cast<double>(kStepSeconds);
                backlog = std::max(0.0, backlog + demand - cap);
                const double dropped = std::max(0.0, backlog - limit);
                backlog -= dropped;
                if (demand > cap) {
                    const double keep = cap / demand;
                    for (std::size_t m : {metric::rx_packets, metric::tx_packets}) {
                        const double bytes = m == metric::rx_packets ? tm[metric::rx_bytes][i] : tm[metric::tx_bytes][i];
                        const double per_byte = bytes > 0.0 ? tm[m][i] / bytes : 0.0;
                        const std::size_t drop_metric = m == metric::rx_packets ? metric::rx_dropped : metric::tx_dropped;
                        tm[drop_metric][i] += per_byte * dropped * bytes / demand;
                        tm[m][i] *= keep;
                    }
                    tm[metric::rx_bytes][i] *= keep;
                    tm[metric::tx_bytes][i] *= keep;
                }
                const double delay = backlog / cap * static_cast<double>(kStepSeconds);
                for (std::size_t l : links) add_latency(l, i, delay);
                break;
            }
            case AnomalyType::ServiceDown: {
                for (std::size_t m = 0; m < kMetricCount; ++m) {
                    if (is_cumulative(m)) {
                        tm[m][i] = 0.0;
                    } else {
                        tm[m][i] = a > 0 ? tm[m][a - 1] : tm[m][a];
                    }
                }
                for (std::size_t l = 0; l < tgt.peers.size(); ++l) {
                    tgt.rt[l][i] = 0.0;
                    tgt.calls[l][i] = 0.0;
                    ServiceTrace& peer = trace.services[tgt.peers[l]];
                    const std::size_t back = peer_slot(peer, target);
                    if (back == peer.peers.size()) continue;
                    if (i - a < kTimeoutSteps) {
                        peer.rt[back][i] = peer.calls[back][i] * kTimeoutSeconds;
                    } else {
                        peer.rt[back][i] = 0.0;
                        peer.calls[back][i] = 0.0;
                    }
                }
                break;
            }
        }
    }
    return FaultLabel{anomaly_name(fault.type), fault.target, fault.start_ts, fault.end_ts};
}

Corpus to_corpus(const Trace& trace, const WorkloadModel& model) {
    const std::size_t n = model.topology.size();
    if (trace.services.size() != n) throw ConfigError("to_corpus: trace does not match the workload topology");
    Corpus corpus;
    auto cumulate = [](const std::vector<double>& v) {
        std::vector<double> out(v.size());
        double acc = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = acc += v[i];
        return out;
    };
    for (std::size_t j = 0; j < n; ++j) {
        const ServiceTrace& s = trace.services[j];
        ServiceTelemetry t;
        t.service = model.topology.services()[j];
        t.timestamps = trace.timestamps;
        for (std::size_t m = 0; m < kMetricCount; ++m) t.metrics[m] = is_cumulative(m) ? cumulate(s.metrics[m]) : s.metrics[m];
        for (std::size_t l = 0; l < s.peers.size(); ++l) {
            t.peers.push_back(model.topology.services()[s.peers[l]]);
            t.response_times.push_back(cumulate(s.rt[l]));
            t.calls.push_back(cumulate(s.calls[l]));
        }
        corpus.services.push_back(std::move(t));
    }
    return corpus;
}

Dataset generate_normal(const WorkloadModel& model, double duration_s) {
    if (!(duration_s >= static_cast<double>(kStepSeconds))) throw ConfigError("generate_normal: duration too short");
    const auto steps = static_cast<std::size_t>(duration_s / static_cast<double>(kStepSeconds));
    Dataset d;
    d.topology = model.topology;
    d.normal = to_corpus(generate_trace(model, model.start_ts, steps, 0), model);
    return d;
}

namespace {

std::int64_t align(double seconds) {
    return static_cast<std::int64_t>(std::llround(seconds / static_cast<double>(kStepSeconds))) * kStepSeconds;
}

const std::map<AnomalyType, std::string>& default_targets() {
    static const std::map<AnomalyType, std::string> t = {
        {AnomalyType::ServiceDown, "payment"},   {AnomalyType::HighUserLoad, "web"},
        {AnomalyType::HighCpu, "dispatch"},      {AnomalyType::HighFileIo, "mysql"},
        {AnomalyType::MemoryLeak, "cart"},       {AnomalyType::PacketLoss, "user"},
        {AnomalyType::RtDelay, "catalogue"},     {AnomalyType::OutOfOrder, "shipping"},
        {AnomalyType::LowBandwidth, "ratings"},  {AnomalyType::HighLatency, "web"},
    };
    return t;
}

std::size_t type_index(AnomalyType t) {
    return static_cast<std::size_t>(std::find(kTypes.begin(), kTypes.end(), t) - kTypes.begin());
}

}  // namespace

std::int64_t Scenario::segment_start(std::size_t type_index) const {
    return model.start_ts + align(normal_duration_s) +
           static_cast<std::int64_t>(type_index) * align(warmup_s + fault_duration_s);
}

FaultSpec Scenario::placed(AnomalyType type, const std::string& target, bool weak) const {
    FaultSpec f = FaultSpec::defaults(type, target, weak);
    f.start_ts = segment_start(type_index(type)) + align(warmup_s);
    f.end_ts = f.start_ts + align(fault_duration_s);
    return f;
}

Scenario Scenario::standard(std::uint64_t seed, double normal_duration_s) {
    Scenario s;
    s.model = WorkloadModel::robot_shop(seed);
    s.normal_duration_s = normal_duration_s;
    for (AnomalyType t : kTypes) {
        FaultSpec f = s.placed(t, default_targets().at(t));
        if (t == AnomalyType::RtDelay) f.peer = "mongodb";
        s.faults.push_back(f);
    }
    return s;
}

Dataset scenario(const Scenario& s) {
    s.model.validate();
    if (!(s.warmup_s >= 0.0) || !(s.fault_duration_s > 0.0)) throw ConfigError("scenario: invalid segment durations");
    for (std::size_t i = 0; i < s.faults.size(); ++i) {
        s.faults[i].validate();
        s.model.topology.index_of(s.faults[i].target);
        for (std::size_t j = 0; j < i; ++j) {
            const FaultSpec& a = s.faults[i];
            const FaultSpec& b = s.faults[j];
            if (a.target == b.target && a.start_ts < b.end_ts && b.start_ts < a.end_ts) {
                throw ConfigError("scenario: overlapping faults on service '" + a.target + "' (" +
                                  anomaly_name(a.type) + " and " + anomaly_name(b.type) + ")");
            }
        }
    }
    Dataset d = generate_normal(s.model, s.normal_duration_s);
    for (AnomalyType t : kTypes) {
        std::vector<const FaultSpec*> group;
        for (const FaultSpec& f : s.faults) {
            if (f.type == t) group.push_back(&f);
        }
        if (group.empty()) continue;
        std::int64_t begin = group.front()->start_ts, end = group.front()->end_ts;
        for (const FaultSpec* f : group) {
            begin = std::min(begin, f->start_ts);
            end = std::max(end, f->end_ts);
        }
        begin -= align(s.warmup_s);
        const auto steps = static_cast<std::size_t>((end - begin + kStepSeconds - 1) / kStepSeconds);
        Trace trace = generate_trace(s.model, begin, steps, 1 + type_index(t));
        for (const FaultSpec* f : group) d.labels.push_back(inject(trace, s.model, *f));
        d.anomalous[anomaly_name(t)] = to_corpus(trace, s.model);
    }
    return d;
}

namespace {

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

Scenario Scenario::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // Byte offset -> line and column.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ConfigError("scenario JSON: parse error at line " + std::to_string(line) + ", column " +
                          std::to_string(col) + ": " + e.what());
    }
    try {
        if (!j.is_object()) throw ConfigError("scenario JSON: top level must be an object");
        std::uint64_t seed = 7;
        read_opt(j, "seed", seed);
        Topology topo = j.contains("topology") ? Topology::from_json_text(j.at("topology").dump()) : Topology::robot_shop();
        Scenario s;
        s.model = model_for(std::move(topo), seed);
        read_opt(j, "normal_duration_s", s.normal_duration_s);
        read_opt(j, "warmup_s", s.warmup_s);
        read_opt(j, "fault_duration_s", s.fault_duration_s);
        if (j.contains("model")) {
            const json& m = j.at("model");
            read_opt(m, "period_s", s.model.period_s);
            read_opt(m, "peak_ratio", s.model.peak_ratio);
            read_opt(m, "load_multiplier", s.model.load_multiplier);
            read_opt(m, "noise", s.model.noise);
            read_opt(m, "load_jitter", s.model.load_jitter);
            read_opt(m, "drop_rate", s.model.drop_rate);
            read_opt(m, "rho_cap", s.model.rho_cap);
            read_opt(m, "start_ts", s.model.start_ts);
        }
        s.model.validate();
        if (!j.contains("faults")) {
            for (AnomalyType t : kTypes) {
                FaultSpec f = s.placed(t, default_targets().at(t));
                if (t == AnomalyType::RtDelay) f.peer = "mongodb";
                s.faults.push_back(f);
            }
            return s;
        }
        for (const json& f : j.at("faults")) {
            const AnomalyType type = parse_anomaly(f.at("type").get<std::string>());
            const std::string target = f.at("target").get<std::string>();
            FaultSpec spec = s.placed(type, target, f.value("weak", false));
            const std::int64_t seg = s.segment_start(type_index(type));
            if (f.contains("start_s")) {
                const std::int64_t duration = spec.end_ts - spec.start_ts;
                spec.start_ts = seg + align(f.at("start_s").get<double>());
                spec.end_ts = spec.start_ts + duration;
            }
            if (f.contains("duration_s")) spec.end_ts = spec.start_ts + align(f.at("duration_s").get<double>());
            read_opt(f, "multiplier", spec.multiplier);
            read_opt(f, "latency_s", spec.latency_s);
            read_opt(f, "fraction", spec.fraction);
            read_opt(f, "bandwidth_kbps", spec.bandwidth_kbps);
            read_opt(f, "burst_bytes", spec.burst_bytes);
            read_opt(f, "memory_cap_bytes", spec.memory_cap_bytes);
            read_opt(f, "seed", spec.seed);
            if (f.contains("peer")) spec.peer = f.at("peer").get<std::string>();
            spec.validate();
            s.faults.push_back(spec);
        }
        return s;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario JSON: ") + e.what());
    }
}

std::string Scenario::to_json_text() const {
    json j;
    j["seed"] = model.seed;
    j["normal_duration_s"] = normal_duration_s;
    j["warmup_s"] = warmup_s;
    j["fault_duration_s"] = fault_duration_s;
    j["topology"] = json::parse(model.topology.to_json_text());
    j["model"] = {{"period_s", model.period_s},       {"peak_ratio", model.peak_ratio},
                  {"load_multiplier", model.load_multiplier}, {"noise", model.noise},
                  {"load_jitter", model.load_jitter}, {"drop_rate", model.drop_rate},
                  {"rho_cap", model.rho_cap},         {"start_ts", model.start_ts}};
    json faults = json::array();
    for (const FaultSpec& f : this->faults) {
        const std::int64_t seg = segment_start(type_index(f.type));
        json e = {{"type", anomaly_name(f.type)},
                  {"target", f.target},
                  {"start_s", f.start_ts - seg},
                  {"duration_s", f.end_ts - f.start_ts},
                  {"multiplier", f.multiplier},
                  {"latency_s", f.latency_s},
                  {"fraction", f.fraction},
                  {"bandwidth_kbps", f.bandwidth_kbps},
                  {"burst_bytes", f.burst_bytes},
                  {"memory_cap_bytes", f.memory_cap_bytes},
                  {"seed", f.seed}};
        if (f.peer) e["peer"] = *f.peer;
        faults.push_back(e);
    }
    j["faults"] = faults;
    return j.dump(2) + "\n";
}

}  // namespace galmad
