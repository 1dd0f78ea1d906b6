#include "galmad/topology.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "galmad/error.hpp"
#include "json.hpp"

namespace galmad {
namespace {

void check_unique(const std::vector<std::string>& services) {
    std::set<std::string> seen;
    for (const auto& s : services) {
        if (s.empty()) throw ConfigError("topology: empty service name");
        if (!seen.insert(s).second) throw ConfigError("topology: duplicate service '" + s + "'");
    }
}

}  // namespace

Topology::Topology(std::vector<std::string> services, const std::vector<Edge>& edges)
    : services_(std::move(services)), adjacency_(services_.size() * services_.size(), 0) {
    check_unique(services_);
    const std::size_t n = services_.size();
    for (std::size_t i = 0; i < n; ++i) adjacency_[i * n + i] = 1;
    for (const auto& [a, b] : edges) {
        const std::size_t i = index_of(a);
        const std::size_t j = index_of(b);
        adjacency_[i * n + j] = 1;
        adjacency_[j * n + i] = 1;
    }
}

Topology Topology::from_adjacency(std::vector<std::string> services, std::vector<std::uint8_t> adjacency) {
    check_unique(services);
    const std::size_t n = services.size();
    if (adjacency.size() != n * n) {
        throw DimensionError("topology: adjacency has " + std::to_string(adjacency.size()) + " entries for " +
                             std::to_string(n) + " services");
    }
    for (std::uint8_t v : adjacency) {
        if (v > 1) throw ConfigError("topology: adjacency entries must be 0 or 1");
    }
    for (std::size_t i = 0; i < n; ++i) adjacency[i * n + i] = 1;
    Topology t;
    t.services_ = std::move(services);
    t.adjacency_ = std::move(adjacency);
    return t;
}

Topology Topology::robot_shop() {
    return Topology({"payment", "shipping", "redis", "mongodb", "dispatch", "rabbitmq", "user", "mysql", "catalogue",
                     "ratings", "web", "cart"},
                    {{"web", "catalogue"},
                     {"web", "user"},
                     {"web", "cart"},
                     {"web", "shipping"},
                     {"web", "payment"},
                     {"web", "ratings"},
                     {"catalogue", "mongodb"},
                     {"user", "mongodb"},
                     {"user", "redis"},
                     {"cart", "redis"},
                     {"cart", "catalogue"},
                     {"shipping", "mysql"},
                     {"shipping", "cart"},
                     {"ratings", "mysql"},
                     {"ratings", "catalogue"},
                     {"payment", "rabbitmq"},
                     {"payment", "user"},
                     {"payment", "cart"},
                     {"dispatch", "rabbitmq"}});
}

Topology Topology::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("topology JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("services") || !j["services"].is_array()) {
        throw ConfigError("topology JSON needs a 'services' array");
    }
    std::vector<std::string> services;
    for (const auto& s : j["services"]) {
        if (!s.is_string()) throw ConfigError("topology JSON: service names must be strings");
        services.push_back(s.get<std::string>());
    }
    std::vector<Edge> edges;
    if (j.contains("edges")) {
        for (const auto& e : j["edges"]) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
                throw ConfigError("topology JSON: each edge must be a [from, to] pair of names");
            }
            edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
        }
    }
    return Topology(std::move(services), edges);
}

Topology Topology::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open topology file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string Topology::to_json_text() const {
    nlohmann::json j;
    j["services"] = services_;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [i, k] : edge_indices()) edges.push_back({services_[i], services_[k]});
    j["edges"] = edges;
    return j.dump(2) + "\n";
}

void Topology::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write topology file " + path.string());
    out << to_json_text();
}

std::optional<std::size_t> Topology::find(const std::string& service) const {
    for (std::size_t i = 0; i < services_.size(); ++i)
        if (services_[i] == service) return i;
    return std::nullopt;
}

std::size_t Topology::index_of(const std::string& service) const {
    if (auto i = find(service)) return *i;
    throw ConfigError("topology: unknown service '" + service + "'");
}

std::vector<std::size_t> Topology::neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < size(); ++j)
        if (j != i && (connected(i, j) || connected(j, i))) out.push_back(j);
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> Topology::edge_indices() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i + 1; j < size(); ++j)
            if (connected(i, j) || connected(j, i)) out.emplace_back(i, j);
    return out;
}

Topology Topology::permuted(const std::vector<std::size_t>& perm) const {
    const std::size_t n = size();
    if (perm.size() != n) throw DimensionError("topology permutation has wrong length");
    std::vector<std::string> services(n);
    std::vector<std::uint8_t> adj(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        services[i] = services_[perm[i]];
        for (std::size_t j = 0; j < n; ++j) adj[i * n + j] = adjacency_[perm[i] * n + perm[j]];
    }
    return from_adjacency(std::move(services), std::move(adj));
}

}  // namespace galmad
