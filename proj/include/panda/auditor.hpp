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

// Exhaustive checks of indistinguishability guarantees against an exact
// mechanism table, plus the Bayesian adversary used for empirical privacy.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/mechanism.hpp"
#include "panda/policy_graph.hpp"
#include "panda/trajectory.hpp"

namespace panda {

struct AuditPair {
  Cell s = 0;
  Cell s2 = 0;
  Cell z = 0;
  friend bool operator==(const AuditPair&, const AuditPair&) = default;
};

struct AuditReport {
  // Multiplicative slack on the bound for double-precision normalization.
  static constexpr double kTolerance = 1e-9;

  bool pass = true;
  // Pair with the largest ratio/bound excess; empty when nothing was checked.
  std::optional<AuditPair> worst_pair;
  double worst_ratio = 0.0;
  // Bound that applies to worst_pair (e^eps for per-edge checks).
  double bound = 1.0;
};

// Pr(z | s) / Pr(z | s2) with 0/0 = 0 (no evidence) and x/0 = +inf.
inline double pair_ratio(const MechanismMatrix& m, Cell s, Cell s2, Cell z) {
  const double num = m.prob(s, z);
  const double den = m.prob(s2, z);
  if (den == 0.0) {
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return num / den;
}

namespace audit_detail {

// Accumulates the worst violation. Pairs must be offered in lexicographic
// order; a strictly larger excess is required to replace the incumbent, so
// ties resolve to the first pair seen.
class WorstTracker {
 public:
  explicit WorstTracker(double default_bound) { report_.bound = default_bound; }

  void offer(const MechanismMatrix& m, std::size_t si, std::size_t s2i,
             double bound) {
    const auto& nodes = m.nodes();
    const double log_bound = std::log(bound);
    for (std::size_t zi = 0; zi < m.size(); ++zi) {
      const double num = m.at(si, zi);
      const double den = m.at(s2i, zi);
      double ratio;
      if (den == 0.0) {
        if (num == 0.0) continue;
        ratio = std::numeric_limits<double>::infinity();
      } else {
        ratio = num / den;
      }
      // log(ratio / bound), compared in log space so huge bounds stay finite.
      const double excess = std::log(ratio) - log_bound;
      if (!report_.worst_pair || excess > worst_excess_) {
        worst_excess_ = excess;
        report_.worst_pair = AuditPair{nodes[si], nodes[s2i], nodes[zi]};
        report_.worst_ratio = ratio;
        report_.bound = bound;
      }
    }
  }

  AuditReport finish() {
    report_.pass = !report_.worst_pair ||
                   report_.worst_ratio <=
                       report_.bound * (1.0 + AuditReport::kTolerance);
    return report_;
  }

 private:
  AuditReport report_;
  double worst_excess_ = -std::numeric_limits<double>::infinity();
};

inline void require_same_nodes(const MechanismMatrix& m, const PolicyGraph& g) {
  if (m.nodes() != g.nodes()) {
    throw InvalidArgument("mechanism nodes differ from policy graph nodes",
                          "nodes");
  }
}

inline void require_epsilon(double eps) {
  if (!(eps >= 0.0) || !std::isfinite(eps)) {
    throw InvalidArgument("epsilon must be a finite value >= 0", "epsilon");
  }
}

}  // namespace audit_detail

// p[s][z] <= e^eps * p[s'][z] for every edge, both directions, every z.
inline AuditReport audit_policy(const MechanismMatrix& m, const PolicyGraph& g,
                                double eps) {
  audit_detail::require_same_nodes(m, g);
  audit_detail::require_epsilon(eps);
  const double bound = std::exp(eps);
  audit_detail::WorstTracker worst(bound);
  for (std::size_t si = 0; si < m.size(); ++si) {
    for (std::size_t s2i = 0; s2i < m.size(); ++s2i) {
      if (si != s2i && g.has_edge(m.nodes()[si], m.nodes()[s2i])) {
        worst.offer(m, si, s2i, bound);
      }
    }
  }
  return worst.finish();
}

// p[s][z] <= e^(eps * d_G(s,s')) * p[s'][z] for every connected pair.
inline AuditReport audit_infinity(const MechanismMatrix& m, const PolicyGraph& g,
                                  double eps) {
  audit_detail::require_same_nodes(m, g);
  audit_detail::require_epsilon(eps);
  audit_detail::WorstTracker worst(std::exp(eps));
  for (std::size_t si = 0; si < m.size(); ++si) {
    const auto dist = g.distances_from(m.nodes()[si]);
    for (std::size_t s2i = 0; s2i < m.size(); ++s2i) {
      if (si == s2i || dist[s2i] == kUnreachable) continue;
      worst.offer(m, si, s2i, std::exp(eps * double(dist[s2i])));
    }
  }
  return worst.finish();
}

// Geo-indistinguishability in grid units:
// p[s][z] <= e^(eps * d_E(s,s') / cell_size) * p[s'][z] for all pairs.
inline AuditReport audit_geo_ind(const MechanismMatrix& m, const GridWorld& grid,
                                 double eps) {
  audit_detail::require_epsilon(eps);
  if (m.nodes() != grid.all_cells()) {
    throw InvalidArgument("mechanism must cover exactly the grid cells",
                          "nodes");
  }
  audit_detail::WorstTracker worst(std::exp(eps));
  for (std::size_t si = 0; si < m.size(); ++si) {
    for (std::size_t s2i = 0; s2i < m.size(); ++s2i) {
      if (si == s2i) continue;
      const double d = grid.unit_distance(m.nodes()[si], m.nodes()[s2i]);
      worst.offer(m, si, s2i, std::exp(eps * d));
    }
  }
  return worst.finish();
}

// e^eps indistinguishability between every two members of `set`.
inline AuditReport audit_location_set(const MechanismMatrix& m,
                                      std::vector<Cell> set, double eps) {
  audit_detail::require_epsilon(eps);
  std::sort(set.begin(), set.end());
  set.erase(std::unique(set.begin(), set.end()), set.end());
  std::vector<std::size_t> idx;
  for (Cell c : set) {
    if (!m.covers(c)) {
      throw InvalidArgument("location set cell " + std::to_string(c) +
                                " is not covered by the mechanism",
                            "set");
    }
    idx.push_back(m.index_of(c));
  }
  const double bound = std::exp(eps);
  audit_detail::WorstTracker worst(bound);
  for (std::size_t a : idx) {
    for (std::size_t b : idx) {
      if (a != b) worst.offer(m, a, b, bound);
    }
  }
  return worst.finish();
}

inline nlohmann::json to_json(const AuditReport& r) {
  auto number = [](double x) -> nlohmann::json {
    if (std::isinf(x)) return "inf";  // JSON has no infinity literal
    return x;
  };
  nlohmann::json j = {{"pass", r.pass},
                      {"worst_ratio", number(r.worst_ratio)},
                      {"bound", number(r.bound)}};
  if (r.worst_pair) {
    j["worst_pair"] = {r.worst_pair->s, r.worst_pair->s2, r.worst_pair->z};
  } else {
    j["worst_pair"] = nullptr;
  }
  return j;
}

// Adversary belief over the mechanism's nodes, indexed like
// MechanismMatrix::nodes().
class AdversaryPrior {
 public:
  static constexpr double kTolerance = 1e-12;

  AdversaryPrior(std::vector<Cell> nodes, std::vector<double> probs)
      : nodes_(std::move(nodes)), probs_(std::move(probs)) {
    if (nodes_.size() != probs_.size() || nodes_.empty()) {
      throw InvalidArgument("prior needs one probability per node", "prior");
    }
    double sum = 0.0;
    for (double p : probs_) {
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw InvalidArgument("prior probabilities must be >= 0", "prior");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kTolerance) {
      throw InvalidArgument("prior sums to " + std::to_string(sum), "prior");
    }
  }

  static AdversaryPrior uniform(std::vector<Cell> nodes) {
    const std::size_t n = nodes.size();
    return AdversaryPrior(std::move(nodes),
                          std::vector<double>(n, n ? 1.0 / double(n) : 0.0));
  }

  const std::vector<Cell>& nodes() const noexcept { return nodes_; }
  const std::vector<double>& probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<Cell> nodes_;
  std::vector<double> probs_;
};

// post(s) proportional to prior(s) * p[s][z].
inline AdversaryPrior posterior(const MechanismMatrix& m,
                                const AdversaryPrior& prior, Cell z) {
  if (prior.nodes() != m.nodes()) {
    throw InvalidArgument("prior must be over the mechanism's nodes", "prior");
  }
  const std::size_t zi = m.index_of(z);
  std::vector<double> post(m.size());
  double evidence = 0.0;
  for (std::size_t s = 0; s < m.size(); ++s) {
    post[s] = prior[s] * m.at(s, zi);
    evidence += post[s];
  }
  if (evidence <= 0.0) {
    throw DegenerateObservation("release " + std::to_string(z) +
                                " has probability zero under the prior");
  }
  for (double& p : post) p /= evidence;
  return AdversaryPrior(m.nodes(), std::move(post));
}

// Expected error, in meters, of the Bayes-optimal point estimate:
//   sum_s prior(s) sum_z p[s][z] * d_E(s, est(z)),
// est(z) minimizing posterior-expected d_E over the mechanism's nodes,
// lowest cell id on ties. Outputs of probability zero contribute nothing.
inline double adversary_error(const MechanismMatrix& m,
                              const AdversaryPrior& prior,
                              const GridWorld& grid) {
  if (prior.nodes() != m.nodes()) {
    throw InvalidArgument("prior must be over the mechanism's nodes", "prior");
  }
  for (Cell c : m.nodes()) grid.check(c);
  const std::size_t n = m.size();
  std::vector<double> dist(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      dist[a * n + b] = grid.euclid(m.nodes()[a], m.nodes()[b]);
    }
  }
  double total = 0.0;
  std::vector<double> joint(n);
  for (std::size_t z = 0; z < n; ++z) {
    double evidence = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      joint[s] = prior[s] * m.at(s, z);
      evidence += joint[s];
    }
    if (evidence <= 0.0) continue;
    // Unnormalized posterior risk; the argmin is unaffected by scaling.
    double best_risk = std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t c = 0; c < n; ++c) {
      double risk = 0.0;
      for (std::size_t s = 0; s < n; ++s) risk += joint[s] * dist[s * n + c];
      if (risk < best_risk) {
        best_risk = risk;
        best = c;
      }
    }
    for (std::size_t s = 0; s < n; ++s) total += joint[s] * dist[s * n + best];
  }
  return total;
}

// Mean per-step distance in meters between a true and a released trajectory.
inline double utility_error(const Trajectory& truth, const Trajectory& released,
                            const GridWorld& grid) {
  if (truth.size() != released.size()) {
    throw InvalidArgument("trajectories differ in length (" +
                              std::to_string(truth.size()) + " vs " +
                              std::to_string(released.size()) + ")",
                          "trajectory");
  }
  if (truth.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const Visit& a = truth.visits()[i];
    const Visit& b = released.visits()[i];
    if (a.tick != b.tick) {
      throw InvalidArgument("timestamp mismatch at step " + std::to_string(i) +
                                " (" + std::to_string(a.tick) + " vs " +
                                std::to_string(b.tick) + ")",
                            "tick");
    }
    sum += grid.euclid(a.cell, b.cell);
  }
  return sum / double(truth.size());
}

}  // namespace panda
