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

// Location release mechanisms over a policy graph.
//
// The graph-exponential mechanism releases z with probability
//
//   p[s][z] = exp(-eps * d(s,z) / 2) / Z(s),   Z(s) = sum_z' exp(-eps * d(s,z') / 2)
//
// over the connected component of s, and never outside it. For connected
// s, s' the triangle inequality gives both
//
//   exp(-eps*d(s,z)/2) / exp(-eps*d(s',z)/2) <= exp(eps * d(s,s') / 2)
//   Z(s') / Z(s)                               <= exp(eps * d(s,s') / 2)
//
// so p[s][z] <= exp(eps * d(s,s')) * p[s'][z]. With d = 1 on every edge this
// is exactly the per-edge bound; the halved scale is what makes the two
// factors fit. An isolated node has a one-point component and is released
// unperturbed.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "panda/errors.hpp"
#include "panda/policy_graph.hpp"
#include "panda/random.hpp"
#include "panda/trajectory.hpp"

namespace panda {

struct MechanismConfig {
  double epsilon = 1.0;
  PolicyGraph graph;

  MechanismConfig() = default;
  MechanismConfig(double eps, PolicyGraph g) : epsilon(eps), graph(std::move(g)) {
    validate();
  }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw InvalidArgument("epsilon must be a finite value >= 0", "epsilon");
    }
  }
};

// Exact conditional release table Pr(release = z | true = s). Rows and
// columns share one node ordering.
class MechanismMatrix {
 public:
  static constexpr double kRowTolerance = 1e-12;

  MechanismMatrix(std::vector<Cell> nodes, std::vector<double> probs)
      : nodes_(std::move(nodes)), probs_(std::move(probs)) {
    const std::size_t n = nodes_.size();
    if (probs_.size() != n * n) {
      throw InvalidArgument("mechanism table must be square over its nodes",
                            "matrix");
    }
    for (std::size_t i = 1; i < n; ++i) {
      if (nodes_[i] <= nodes_[i - 1]) {
        throw InvalidArgument("mechanism nodes must be sorted and distinct",
                              "nodes");
      }
    }
    for (std::size_t s = 0; s < n; ++s) {
      double sum = 0.0;
      for (std::size_t z = 0; z < n; ++z) {
        const double p = probs_[s * n + z];
        if (!(p >= 0.0) || !std::isfinite(p)) {
          throw InvalidArgument("mechanism probabilities must be finite and >= 0",
                                "matrix");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowTolerance) {
        throw InvalidArgument("row for cell " + std::to_string(nodes_[s]) +
                                  " sums to " + std::to_string(sum),
                              "matrix");
      }
    }
  }

  // Deterministic release of the true cell.
  static MechanismMatrix identity(std::vector<Cell> nodes) {
    std::sort(nodes.begin(), nodes.end());
    const std::size_t n = nodes.size();
    std::vector<double> probs(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) probs[i * n + i] = 1.0;
    return MechanismMatrix(std::move(nodes), std::move(probs));
  }

  // Output independent of input.
  static MechanismMatrix uniform(std::vector<Cell> nodes) {
    std::sort(nodes.begin(), nodes.end());
    const std::size_t n = nodes.size();
    return MechanismMatrix(std::move(nodes),
                           std::vector<double>(n * n, 1.0 / double(n)));
  }

  const std::vector<Cell>& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  std::size_t index_of(Cell c) const {
    const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), c);
    if (it == nodes_.end() || *it != c) {
      throw InvalidArgument("cell " + std::to_string(c) +
                                " is not covered by the mechanism",
                            "cell");
    }
    return static_cast<std::size_t>(it - nodes_.begin());
  }

  bool covers(Cell c) const {
    return std::binary_search(nodes_.begin(), nodes_.end(), c);
  }

  // By position in nodes().
  double at(std::size_t s, std::size_t z) const {
    return probs_[s * nodes_.size() + z];
  }

  // By cell id.
  double prob(Cell s, Cell z) const { return at(index_of(s), index_of(z)); }

  std::span<const double> row(std::size_t s) const {
    return {probs_.data() + s * nodes_.size(), nodes_.size()};
  }

 private:
  std::vector<Cell> nodes_;
  std::vector<double> probs_;
};

// Row s of the graph-exponential mechanism, indexed like graph.nodes().
// Weights are formed in log space relative to d = 0, so the normalizer is
// at least 1 and never underflows.
inline std::vector<double> graph_exponential_row(const PolicyGraph& graph,
                                                 double epsilon, Cell s) {
  const auto dist = graph.distances_from(s);
  std::vector<double> row(dist.size(), 0.0);
  double total = 0.0;
  for (std::size_t z = 0; z < dist.size(); ++z) {
    if (dist[z] == kUnreachable) continue;
    row[z] = std::exp(-0.5 * epsilon * double(dist[z]));
    total += row[z];
  }
  for (double& p : row) p /= total;
  return row;
}

inline MechanismMatrix graph_exponential_matrix(const MechanismConfig& config) {
  config.validate();
  const auto& nodes = config.graph.nodes();
  std::vector<double> probs;
  probs.reserve(nodes.size() * nodes.size());
  for (Cell s : nodes) {
    const auto row = graph_exponential_row(config.graph, config.epsilon, s);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return MechanismMatrix(nodes, std::move(probs));
}

// Inverse-CDF draw from a probability row; u in [0, 1).
inline std::size_t sample_index(std::span<const double> row, double u) {
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i] <= 0.0) continue;
    acc += row[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;  // rounding left u just above the final sum
}

inline Cell perturb(const MechanismConfig& config, Cell s, Seed seed) {
  config.validate();
  const auto row = graph_exponential_row(config.graph, config.epsilon, s);
  Rng rng(seed);
  return config.graph.nodes()[sample_index(row, rng.uniform())];
}

// Step i draws with derive_seed(seed, {i}), so a step's release does not
// depend on how long the trajectory is.
inline Trajectory perturb_trajectory(const MechanismConfig& config,
                                     const Trajectory& traj, Seed seed) {
  std::vector<Visit> out;
  out.reserve(traj.size());
  for (std::size_t i = 0; i < traj.visits().size(); ++i) {
    const Visit& v = traj.visits()[i];
    if (!config.graph.contains(v.cell)) {
      throw InvalidArgument("cell " + std::to_string(v.cell) + " at tick " +
                                std::to_string(v.tick) +
                                " is not a node of the policy graph",
                            "tick");
    }
    out.push_back({v.tick, perturb(config, v.cell, derive_seed(seed, {i}))});
  }
  return Trajectory(traj.user(), std::move(out));
}

inline std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Header line of node ids, then one row per input node in the same order.
inline void write_matrix_csv(std::ostream& os, const MechanismMatrix& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << (i ? "," : "") << m.nodes()[i];
  }
  os << '\n';
  for (std::size_t s = 0; s < m.size(); ++s) {
    for (std::size_t z = 0; z < m.size(); ++z) {
      os << (z ? "," : "") << format_g17(m.at(s, z));
    }
    os << '\n';
  }
}

inline MechanismMatrix read_matrix_csv(std::istream& is) {
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
  };
  std::string line;
  if (!std::getline(is, line)) throw ParseError("missing matrix header", 1);
  std::vector<Cell> nodes;
  for (const auto& f : split(line)) {
    try {
      nodes.push_back(static_cast<Cell>(std::stol(f)));
    } catch (const std::exception&) {
      throw ParseError("bad node id '" + f + "'", 1);
    }
  }
  std::vector<double> probs;
  std::size_t line_no = 1;
  while (probs.size() < nodes.size() * nodes.size() && std::getline(is, line)) {
    ++line_no;
    const auto fields = split(line);
    if (fields.size() != nodes.size()) {
      throw ParseError("expected " + std::to_string(nodes.size()) + " columns",
                       line_no);
    }
    for (const auto& f : fields) {
      try {
        probs.push_back(std::stod(f));
      } catch (const std::exception&) {
        throw ParseError("bad probability '" + f + "'", line_no);
      }
    }
  }
  if (probs.size() != nodes.size() * nodes.size()) {
    throw ParseError("matrix has fewer rows than nodes", line_no);
  }
  return MechanismMatrix(std::move(nodes), std::move(probs));
}

}  // namespace panda
