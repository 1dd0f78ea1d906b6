#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace galmad {

using Edge = std::pair<std::string, std::string>;

/// Service names plus a binary adjacency matrix with mandatory self-loops.
class Topology {
public:
    Topology() = default;
    // Edges are symmetrized; self-loops are added for every service.
    Topology(std::vector<std::string> services, const std::vector<Edge>& edges);

    // Takes the matrix as given (directed edges allowed) and forces the diagonal to 1.
    static Topology from_adjacency(std::vector<std::string> services, std::vector<std::uint8_t> adjacency);

    // The RobotShop call graph in the canonical service order.
    static Topology robot_shop();

    static Topology from_json_text(const std::string& text);
    static Topology load(const std::filesystem::path& path);
    std::string to_json_text() const;
    void save(const std::filesystem::path& path) const;

    std::size_t size() const { return services_.size(); }
    const std::vector<std::string>& services() const { return services_; }
    const std::vector<std::uint8_t>& adjacency() const { return adjacency_; }
    bool connected(std::size_t i, std::size_t j) const { return adjacency_[i * size() + j] != 0; }

    std::optional<std::size_t> find(const std::string& service) const;
    // Throws ConfigError for an unknown service.
    std::size_t index_of(const std::string& service) const;

    // Off-diagonal neighbors of i in index order.
    std::vector<std::size_t> neighbors(std::size_t i) const;
    // Undirected edge list (i < j) over off-diagonal entries.
    std::vector<std::pair<std::size_t, std::size_t>> edge_indices() const;

    // Node i of the result is node perm[i] of this topology.
    Topology permuted(const std::vector<std::size_t>& perm) const;

    friend bool operator==(const Topology&, const Topology&) = default;

private:
    std::vector<std::string> services_;
    std::vector<std::uint8_t> adjacency_;
};

}  // namespace galmad
