// Copyright 2026 The PANDA Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Location policy graphs: nodes are locations, edges are pairs of
// locations an observer must not be able to tell apart.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/random.hpp"

namespace panda {

// Hop count in a policy graph. kUnreachable encodes d = infinity.
using HopCount = std::int32_t;
inline constexpr HopCount kUnreachable = std::numeric_limits<HopCount>::max();

// Unordered pair of distinct cells, stored as (low, high).
class Edge {
 public:
  Edge(Cell a, Cell b) : low_(std::min(a, b)), high_(std::max(a, b)) {
    if (a == b) {
      throw InvalidArgument("self-loop on cell " + std::to_string(a), "edges");
    }
  }

  Cell low() const noexcept { return low_; }
  Cell high() const noexcept { return high_; }

  friend auto operator<=>(const Edge&, const Edge&) = default;

 private:
  Cell low_;
  Cell high_;
};

class PolicyGraph {
 public:
  PolicyGraph() = default;

  PolicyGraph(std::vector<Cell> nodes, std::vector<Edge> edges) {
    std::sort(nodes.begin(), nodes.end());
    if (std::adjacent_find(nodes.begin(), nodes.end()) != nodes.end()) {
      throw InvalidArgument("duplicate node in policy graph", "nodes");
    }
    nodes_ = std::move(nodes);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    edges_ = std::move(edges);

    adjacency_.resize(nodes_.size());
    for (const Edge& e : edges_) {
      const auto a = find(e.low());
      const auto b = find(e.high());
      if (a == npos || b == npos) {
        throw InvalidArgument("edge (" + std::to_string(e.low()) + "," +
                                  std::to_string(e.high()) +
                                  ") has an endpoint outside the node set",
                              "edges");
      }
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& row : adjacency_) std::sort(row.begin(), row.end());
  }

  // Sorted ascending.
  const std::vector<Cell>& nodes() const noexcept { return nodes_; }
  // Normalized (low, high) and sorted.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  bool contains(Cell c) const noexcept { return find(c) != npos; }

  // Position of c in nodes(); throws if absent.
  std::size_t index_of(Cell c) const {
    const auto i = find(c);
    if (i == npos) {
      throw InvalidArgument("cell " + std::to_string(c) +
                                " is not a node of the policy graph",
                            "cell");
    }
    return i;
  }

  std::size_t degree(Cell c) const { return adjacency_[index_of(c)].size(); }

  bool has_edge(Cell a, Cell b) const {
    if (a == b) return false;
    return std::binary_search(edges_.begin(), edges_.end(), Edge(a, b));
  }

  std::vector<Cell> neighbors(Cell c) const {
    std::vector<Cell> out;
    for (std::size_t j : adjacency_[index_of(c)]) out.push_back(nodes_[j]);
    return out;
  }

  // BFS hop counts from `source` to every node, indexed like nodes().
  std::vector<HopCount> distances_from(Cell source) const {
    std::vector<HopCount> dist(nodes_.size(), kUnreachable);
    const std::size_t start = index_of(source);
    dist[start] = 0;
    std::deque<std::size_t> queue{start};
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t v : adjacency_[u]) {
        if (dist[v] == kUnreachable) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
      }
    }
    return dist;
  }

  friend bool operator==(const PolicyGraph& a, const PolicyGraph& b) {
    return a.nodes_ == b.nodes_ && a.edges_ == b.edges_;
  }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t find(Cell c) const noexcept {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), c);
    if (it == nodes_.end() || *it != c) return npos;
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  std::vector<Cell> nodes_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

// Every cell linked to its (up to) eight king-move neighbors.
inline PolicyGraph build_grid_policy(const GridWorld& grid) {
  std::vector<Edge> edges;
  for (Cell c = 0; c < grid.cell_count(); ++c) {
    const RowCol rc = grid.row_col(c);
    for (int dr = 0; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc <= 0) continue;  // each pair once
        const RowCol n{rc.row + dr, rc.col + dc};
        if (n.row >= grid.height() || n.col < 0 || n.col >= grid.width()) {
          continue;
        }
        edges.emplace_back(c, grid.cell_at(n));
      }
    }
  }
  return PolicyGraph(grid.all_cells(), std::move(edges));
}

inline PolicyGraph build_complete_policy(std::vector<Cell> nodes) {
  if (nodes.empty()) {
    throw InvalidArgument("complete policy needs at least one node", "nodes");
  }
  std::sort(nodes.begin(), nodes.end());
  std::vector<Edge> edges;
  edges.reserve(nodes.size() * (nodes.size() - 1) / 2);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      edges.emplace_back(nodes[i], nodes[j]);
    }
  }
  return PolicyGraph(std::move(nodes), std::move(edges));
}

// Every node of `grid` with no edges: each location releases exactly.
inline PolicyGraph build_isolated_policy(const GridWorld& grid) {
  return PolicyGraph(grid.all_cells(), {});
}

// Cells are indistinguishable within an area and distinguishable across.
inline PolicyGraph build_partition_policy(const GridWorld& grid,
                                          const Partition& partition) {
  if (static_cast<std::int64_t>(partition.cell_count()) != grid.cell_count()) {
    throw InvalidArgument("partition does not cover the grid", "partition");
  }
  std::vector<Edge> edges;
  for (Cell a = 0; a < grid.cell_count(); ++a) {
    for (Cell b = a + 1; b < grid.cell_count(); ++b) {
      if (partition.area(a) == partition.area(b)) edges.emplace_back(a, b);
    }
  }
  return PolicyGraph(grid.all_cells(), std::move(edges));
}

// Drops every edge touching an infected cell, so visits there release
// exactly while the rest of the policy is kept.
inline PolicyGraph build_contact_policy(const PolicyGraph& base,
                                        std::span<const Cell> infected) {
  std::set<Cell> cut;
  for (Cell c : infected) {
    if (!base.contains(c)) {
      throw InvalidArgument("infected cell " + std::to_string(c) +
                                " is not a node of the base policy",
                            "infected");
    }
    cut.insert(c);
  }
  std::vector<Edge> edges;
  for (const Edge& e : base.edges()) {
    if (!cut.count(e.low()) && !cut.count(e.high())) edges.push_back(e);
  }
  return PolicyGraph(base.nodes(), std::move(edges));
}

// Erdos-Renyi graph over `nodes`; pairs are visited in ascending order so
// the result is a pure function of (nodes, edge_prob, seed).
inline PolicyGraph random_policy(std::vector<Cell> nodes, double edge_prob,
                                 Seed seed) {
  if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
    throw InvalidArgument("edge_prob must lie in [0, 1]", "edge_prob");
  }
  std::sort(nodes.begin(), nodes.end());
  Rng rng(seed);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      if (rng.bernoulli(edge_prob)) edges.emplace_back(nodes[i], nodes[j]);
    }
  }
  return PolicyGraph(std::move(nodes), std::move(edges));
}

inline HopCount graph_distance(const PolicyGraph& g, Cell s, Cell s2) {
  const std::size_t target = g.index_of(s2);
  return g.distances_from(s)[target];
}

// N^k(s): nodes within k hops, s included. kUnreachable as k gives the
// connected component of s.
inline std::vector<Cell> k_neighbors(const PolicyGraph& g, Cell s, HopCount k) {
  if (k < 0) throw InvalidArgument("k must be >= 0", "k");
  const auto dist = g.distances_from(s);
  std::vector<Cell> out;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] != kUnreachable && dist[i] <= k) out.push_back(g.nodes()[i]);
  }
  return out;
}

inline std::vector<Cell> infinity_neighbors(const PolicyGraph& g, Cell s) {
  return k_neighbors(g, s, kUnreachable);
}

// {"nodes":[...], "edges":[[low,high],...]}, both sorted.
inline nlohmann::json to_json(const PolicyGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.low(), e.high()});
  return {{"nodes", g.nodes()}, {"edges", std::move(edges)}};
}

inline PolicyGraph policy_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("nodes") || !j["nodes"].is_array()) {
    throw InvalidArgument("policy JSON needs a \"nodes\" array", "nodes");
  }
  std::vector<Cell> nodes;
  for (const auto& n : j["nodes"]) {
    if (!n.is_number_integer()) {
      throw InvalidArgument("policy node ids must be integers", "nodes");
    }
    nodes.push_back(n.get<Cell>());
  }
  std::vector<Edge> edges;
  if (j.contains("edges")) {
    if (!j["edges"].is_array()) {
      throw InvalidArgument("\"edges\" must be an array", "edges");
    }
    for (const auto& e : j["edges"]) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer()) {
        throw InvalidArgument("each edge must be a pair of integers", "edges");
      }
      edges.emplace_back(e[0].get<Cell>(), e[1].get<Cell>());
    }
  }
  return PolicyGraph(std::move(nodes), std::move(edges));
}

// Canonical text form: {"nodes":[...],"edges":[[low,high],...]}.
inline std::string serialize_policy(const PolicyGraph& g) {
  nlohmann::ordered_json j;
  j["nodes"] = g.nodes();
  j["edges"] = nlohmann::ordered_json::array();
  for (const Edge& e : g.edges()) j["edges"].push_back({e.low(), e.high()});
  return j.dump();
}

inline PolicyGraph parse_policy(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument(std::string("policy is not valid JSON: ") + e.what(),
                          "policy");
  }
  return policy_from_json(j);
}

}  // namespace panda
