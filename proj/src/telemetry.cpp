#include "galmad/telemetry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "galmad/error.hpp"

namespace galmad {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        std::string_view cell = line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '"')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '"' || cell.back() == '\r')) cell.remove_suffix(1);
        out.push_back(cell);
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.push_back(line);
        pos = nl + 1;
    }
    return out;
}

std::string where(const std::string& source, std::size_t line) {
    return (source.empty() ? std::string("<input>") : source) + ":" + std::to_string(line);
}

double parse_value(std::string_view cell, const std::string& source, std::size_t line) {
    if (cell.empty() || cell == "nan" || cell == "NaN") return kNaN;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        throw IngestionError(where(source, line) + ": cannot parse number '" + std::string(cell) + "'");
    }
    return v;
}

std::int64_t parse_timestamp(std::string_view cell, const std::string& source, std::size_t line) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec == std::errc() && ptr == cell.data() + cell.size()) return v;
    const double d = parse_value(cell, source, line);
    if (!std::isfinite(d) || d != std::floor(d)) {
        throw IngestionError(where(source, line) + ": invalid timestamp '" + std::string(cell) + "'");
    }
    return static_cast<std::int64_t>(d);
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::int64_t> timestamps;
    std::vector<std::vector<double>> columns;  // excluding the timestamp
};

Table parse_table(const std::string& text, const std::string& source) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw IngestionError(where(source, 1) + ": empty file");
    Table t;
    for (std::string_view h : split(lines[0])) t.header.emplace_back(h);
    if (t.header.empty() || t.header[0] != "timestamp") {
        throw IngestionError(where(source, 1) + ": first column must be 'timestamp'");
    }
    const std::size_t width = t.header.size();
    t.columns.assign(width - 1, {});
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i]);
        if (cells.size() != width) {
            throw IngestionError(where(source, i + 1) + ": expected " + std::to_string(width) + " cells, found " +
                                 std::to_string(cells.size()));
        }
        t.timestamps.push_back(parse_timestamp(cells[0], source, i + 1));
        for (std::size_t c = 1; c < width; ++c) t.columns[c - 1].push_back(parse_value(cells[c], source, i + 1));
    }
    return t;
}

void append_row(std::string& out, std::int64_t ts, const std::vector<const std::vector<double>*>& cols, std::size_t i) {
    out += std::to_string(ts);
    for (const auto* c : cols) {
        out += ',';
        out += format_double((*c)[i]);
    }
    out += '\n';
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError(path.string() + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestionError(path.string() + ": cannot write file");
    out << text;
    if (!out) throw IngestionError(path.string() + ": write failed");
}

Corpus load_corpus(const fs::path& dir, const std::vector<std::string>& services) {
    const fs::path cadvisor = dir / "cAdvisor";
    const fs::path rt = dir / "response_times";
    if (!fs::is_directory(cadvisor)) throw IngestionError(cadvisor.string() + ": missing folder");
    Corpus corpus;
    for (const std::string& svc : services) {
        const fs::path cpath = cadvisor / (svc + ".csv");
        const fs::path rpath = rt / (svc + ".csv");
        if (!fs::exists(cpath)) throw IngestionError(cpath.string() + ": missing file");
        const std::string rtext = fs::exists(rpath) ? read_file(rpath) : std::string();
        corpus.services.push_back(parse_service(svc, read_file(cpath), rtext, cpath.string()));
        if (corpus.services.back().timestamps != corpus.services.front().timestamps) {
            throw IngestionError(cpath.string() + ": timestamps misaligned with " + services.front());
        }
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const fs::path& dir) {
    for (const ServiceTelemetry& s : corpus.services) {
        write_file(dir / "cAdvisor" / (s.service + ".csv"), cadvisor_csv(s));
        write_file(dir / "response_times" / (s.service + ".csv"), response_times_csv(s));
    }
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

void ServiceTelemetry::validate() const {
    const std::size_t T = timestamps.size();
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        if (metrics[m].size() != T) {
            throw IngestionError(service + ": metric " + std::string(kMetricNames[m]) + " has " +
                                 std::to_string(metrics[m].size()) + " samples, expected " + std::to_string(T));
        }
    }
    if (response_times.size() != peers.size() || calls.size() != peers.size()) {
        throw IngestionError(service + ": per-peer series do not match the peer list");
    }
    for (std::size_t p = 0; p < peers.size(); ++p) {
        if (response_times[p].size() != T || calls[p].size() != T) {
            throw IngestionError(service + ": link series to " + peers[p] + " has the wrong length");
        }
    }
    for (std::size_t i = 1; i < T; ++i) {
        if (timestamps[i] <= timestamps[i - 1]) {
            throw IngestionError(service + ": timestamps not strictly increasing at row " + std::to_string(i + 1));
        }
    }
}

const ServiceTelemetry& Corpus::at(const std::string& service) const {
    for (const ServiceTelemetry& s : services) {
        if (s.service == service) return s;
    }
    throw ConfigError("corpus has no service '" + service + "'");
}

std::string cadvisor_csv(const ServiceTelemetry& s) {
    std::string out = "timestamp";
    std::vector<const std::vector<double>*> cols;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        out += ',';
        out += kMetricNames[m];
        cols.push_back(&s.metrics[m]);
    }
    out += '\n';
    for (std::size_t i = 0; i < s.length(); ++i) append_row(out, s.timestamps[i], cols, i);
    return out;
}

std::string response_times_csv(const ServiceTelemetry& s) {
    std::string out = "timestamp";
    std::vector<const std::vector<double>*> cols;
    for (std::size_t p = 0; p < s.peers.size(); ++p) {
        out += ",rt_" + s.peers[p];
        cols.push_back(&s.response_times[p]);
    }
    for (std::size_t p = 0; p < s.peers.size(); ++p) {
        out += ",calls_" + s.peers[p];
        cols.push_back(&s.calls[p]);
    }
    out += '\n';
    for (std::size_t i = 0; i < s.length(); ++i) append_row(out, s.timestamps[i], cols, i);
    return out;
}

ServiceTelemetry parse_service(const std::string& service, const std::string& cadvisor_text,
                               const std::string& rt_text, const std::string& source) {
    ServiceTelemetry s;
    s.service = service;
    Table c = parse_table(cadvisor_text, source);
    s.timestamps = c.timestamps;
    for (std::size_t m = 0; m < kMetricCount; ++m) {
        auto it = std::find(c.header.begin() + 1, c.header.end(), kMetricNames[m]);
        if (it == c.header.end()) {
            throw IngestionError(where(source, 1) + ": missing column " + std::string(kMetricNames[m]));
        }
        s.metrics[m] = std::move(c.columns[static_cast<std::size_t>(it - c.header.begin()) - 1]);
    }
    if (!rt_text.empty()) {
        const std::string rsource = source.empty() ? source : source + " (response_times)";
        Table r = parse_table(rt_text, rsource);
        if (r.timestamps != s.timestamps) {
            throw IngestionError(where(rsource, 1) + ": response-time timestamps misaligned with cAdvisor data");
        }
        for (std::size_t col = 1; col < r.header.size(); ++col) {
            const std::string& h = r.header[col];
            if (h.rfind("rt_", 0) != 0) continue;
            const std::string peer = h.substr(3);
            auto calls = std::find(r.header.begin() + 1, r.header.end(), "calls_" + peer);
            s.peers.push_back(peer);
            s.response_times.push_back(std::move(r.columns[col - 1]));
            if (calls == r.header.end()) {
                s.calls.emplace_back(s.timestamps.size(), kNaN);
            } else {
                s.calls.push_back(r.columns[static_cast<std::size_t>(calls - r.header.begin()) - 1]);
            }
        }
    }
    s.validate();
    return s;
}

std::string labels_csv(const std::vector<FaultLabel>& labels) {
    std::string out = "anomaly_type,target_service,start_ts,end_ts\n";
    for (const FaultLabel& l : labels) {
        out += l.anomaly_type + "," + l.target_service + "," + std::to_string(l.start_ts) + "," +
               std::to_string(l.end_ts) + "\n";
    }
    return out;
}

std::vector<FaultLabel> parse_labels(const std::string& text, const std::string& source) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw IngestionError(where(source, 1) + ": empty label file");
    const auto header = split(lines[0]);
    const std::vector<std::string_view> expected{"anomaly_type", "target_service", "start_ts", "end_ts"};
    if (header != expected) {
        throw IngestionError(where(source, 1) + ": header must be anomaly_type,target_service,start_ts,end_ts");
    }
    std::vector<FaultLabel> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split(lines[i]);
        if (cells.size() != 4) throw IngestionError(where(source, i + 1) + ": expected 4 cells");
        FaultLabel l{std::string(cells[0]), std::string(cells[1]), parse_timestamp(cells[2], source, i + 1),
                     parse_timestamp(cells[3], source, i + 1)};
        if (l.end_ts <= l.start_ts) throw IngestionError(where(source, i + 1) + ": empty fault interval");
        out.push_back(std::move(l));
    }
    return out;
}

Dataset load_dataset(const fs::path& root) {
    if (!fs::is_directory(root)) throw IngestionError(root.string() + ": dataset folder not found");
    Dataset d;
    const fs::path topo = root / "topology.json";
    try {
        d.topology = fs::exists(topo) ? Topology::load(topo) : Topology::robot_shop();
    } catch (const ConfigError& e) {
        throw IngestionError(topo.string() + ": " + e.what());
    }
    const fs::path normal = root / "normal";
    if (!fs::is_directory(normal)) throw IngestionError(normal.string() + ": missing folder");
    d.normal = load_corpus(normal, d.topology.services());
    const fs::path anomalous = root / "anomalous";
    if (fs::is_directory(anomalous)) {
        std::vector<fs::path> types;
        for (const auto& entry : fs::directory_iterator(anomalous)) {
            if (entry.is_directory()) types.push_back(entry.path());
        }
        std::sort(types.begin(), types.end());
        for (const fs::path& t : types) d.anomalous[t.filename().string()] = load_corpus(t, d.topology.services());
    }
    const fs::path labels = root / "labels.csv";
    if (fs::exists(labels)) d.labels = parse_labels(read_file(labels), labels.string());
    return d;
}

void write_dataset(const Dataset& data, const fs::path& root) {
    fs::create_directories(root);
    data.topology.save(root / "topology.json");
    write_corpus(data.normal, root / "normal");
    for (const auto& [type, corpus] : data.anomalous) write_corpus(corpus, root / "anomalous" / type);
    write_file(root / "labels.csv", labels_csv(data.labels));
}

}  // namespace galmad
