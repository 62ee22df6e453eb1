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

// Plain-text scenario files and the end-to-end simulation run behind the
// `simulate` and `trace` commands.
//
//   # comment
//   grid = 8x8
//   epsilon = 1.0
//   policy = grid
//
// Keys are listed in kScenarioKeys; unknown keys are rejected.

#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "panda/auditor.hpp"
#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/ingest.hpp"
#include "panda/mechanism.hpp"
#include "panda/policy_graph.hpp"
#include "panda/seir.hpp"
#include "panda/surveillance.hpp"

namespace panda {

// Policy families buildable from a name plus a few parameters.
enum class PolicyKind { kGrid, kComplete, kPartition, kIsolated, kRandom };

inline PolicyKind parse_policy_kind(const std::string& s) {
  if (s == "grid") return PolicyKind::kGrid;
  if (s == "complete") return PolicyKind::kComplete;
  if (s == "partition") return PolicyKind::kPartition;
  if (s == "isolated") return PolicyKind::kIsolated;
  if (s == "random") return PolicyKind::kRandom;
  throw InvalidArgument("unknown policy kind '" + s +
                            "' (grid|complete|partition|isolated|random)",
                        "policy");
}

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::kGrid: return "grid";
    case PolicyKind::kComplete: return "complete";
    case PolicyKind::kPartition: return "partition";
    case PolicyKind::kIsolated: return "isolated";
    case PolicyKind::kRandom: return "random";
  }
  return "?";
}

struct PolicySpec {
  PolicyKind kind = PolicyKind::kGrid;
  std::int32_t block = 4;  // partition: square areas of block x block cells
  double edge_prob = 0.3;  // random
  Seed seed = 0;           // random
};

inline PolicyGraph build_policy(const GridWorld& grid, const PolicySpec& spec) {
  switch (spec.kind) {
    case PolicyKind::kGrid: return build_grid_policy(grid);
    case PolicyKind::kComplete: return build_complete_policy(grid.all_cells());
    case PolicyKind::kPartition:
      return build_partition_policy(grid,
                                    Partition::blocks(grid, spec.block, spec.block));
    case PolicyKind::kIsolated: return build_isolated_policy(grid);
    case PolicyKind::kRandom:
      return random_policy(grid.all_cells(), spec.edge_prob, spec.seed);
  }
  throw InvalidArgument("unknown policy kind", "policy");
}

// "WxH"
inline std::pair<std::int32_t, std::int32_t> parse_grid_size(const std::string& s) {
  const auto x = s.find('x');
  try {
    if (x == std::string::npos) throw std::invalid_argument(s);
    std::size_t used = 0;
    const int w = std::stoi(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument(s);
    const std::string rest = s.substr(x + 1);
    const int h = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument(s);
    return {w, h};
  } catch (const std::exception&) {
    throw InvalidArgument("grid size must look like WxH, got '" + s + "'", "grid");
  }
}

inline constexpr const char* kScenarioKeys[] = {
    "grid",          "cell_size",       "users",         "ticks",
    "epsilon",       "policy",          "block",         "edge_prob",
    "seed",          "ticks_per_day",   "retention_days", "contact_threshold",
    "monitor_block", "index_users",     "seir_beta",     "seir_sigma",
    "seir_gamma",    "seir_population", "seir_i0",       "seir_e0",
    "seir_dt"};

struct ScenarioConfig {
  std::int32_t width = 8;
  std::int32_t height = 8;
  double cell_size = 100.0;
  std::int64_t users = 20;
  std::int64_t ticks = 200;
  double epsilon = 1.0;
  PolicySpec policy;
  Seed seed = 1;
  Tick ticks_per_day = 24;
  Tick retention_days = 14;
  std::int64_t contact_threshold = 2;
  std::int32_t monitor_block = 4;
  std::int64_t index_users = 1;
  SeirParams seir{0.3, 0.2, 0.1, 1000.0, 1.0, 0.0, 1.0};

  GridWorld grid() const { return GridWorld(width, height, cell_size); }

  WorldConfig world_config() const {
    WorldConfig w;
    w.grid = grid();
    w.epsilon = epsilon;
    w.seed = seed;
    w.ticks_per_day = ticks_per_day;
    w.retention_days = retention_days;
    w.rule.threshold = contact_threshold;
    return w;
  }

  EpidemicConfig epidemic_config() const {
    EpidemicConfig e;
    e.seir = seir;
    e.index_users.clear();
    for (std::int64_t u = 0; u < index_users; ++u) e.index_users.push_back(u);
    return e;
  }

  void validate() const {
    (void)grid();
    world_config().validate();
    seir.validate();
    if (users < 1) throw InvalidArgument("users must be >= 1", "users");
    if (ticks < 1) throw InvalidArgument("ticks must be >= 1", "ticks");
    if (monitor_block < 1) {
      throw InvalidArgument("monitor_block must be >= 1", "monitor_block");
    }
    if (index_users < 1 || index_users > users) {
      throw InvalidArgument("index_users must be in [1, users]", "index_users");
    }
  }
};

inline ScenarioConfig parse_scenario(std::istream& in) {
  ScenarioConfig c;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto num = [&]() {
      try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
      } catch (const std::exception&) {
        throw ParseError("'" + key + "' needs a number, got '" + value + "'", line_no);
      }
    };
    auto integer = [&]() -> std::int64_t {
      const double v = num();
      if (v != std::floor(v)) {
        throw ParseError("'" + key + "' needs an integer", line_no);
      }
      return static_cast<std::int64_t>(v);
    };
    if (key == "grid") {
      std::tie(c.width, c.height) = parse_grid_size(value);
    } else if (key == "cell_size") {
      c.cell_size = num();
    } else if (key == "users") {
      c.users = integer();
    } else if (key == "ticks") {
      c.ticks = integer();
    } else if (key == "epsilon") {
      c.epsilon = num();
    } else if (key == "policy") {
      c.policy.kind = parse_policy_kind(value);
    } else if (key == "block") {
      c.policy.block = static_cast<std::int32_t>(integer());
    } else if (key == "edge_prob") {
      c.policy.edge_prob = num();
    } else if (key == "seed") {
      c.seed = static_cast<Seed>(integer());
    } else if (key == "ticks_per_day") {
      c.ticks_per_day = integer();
    } else if (key == "retention_days") {
      c.retention_days = integer();
    } else if (key == "contact_threshold") {
      c.contact_threshold = integer();
    } else if (key == "monitor_block") {
      c.monitor_block = static_cast<std::int32_t>(integer());
    } else if (key == "index_users") {
      c.index_users = integer();
    } else if (key == "seir_beta") {
      c.seir.beta = num();
    } else if (key == "seir_sigma") {
      c.seir.sigma = num();
    } else if (key == "seir_gamma") {
      c.seir.gamma = num();
    } else if (key == "seir_population") {
      c.seir.n = num();
    } else if (key == "seir_i0") {
      c.seir.i0 = num();
    } else if (key == "seir_e0") {
      c.seir.e0 = num();
    } else if (key == "seir_dt") {
      c.seir.dt = num();
    } else {
      throw ParseError("unknown key '" + key + "'", line_no);
    }
  }
  c.policy.seed = derive_seed(c.seed, {0x706f6c});  // random policy draws
  c.validate();
  return c;
}

// World for a scenario: synthetic walks under the scenario's base policy.
inline World make_world(const ScenarioConfig& c) {
  c.validate();
  const GridWorld grid = c.grid();
  return World(c.world_config(), build_policy(grid, c.policy),
               synth_walk(grid, c.users, c.ticks, c.seed));
}

struct SimulationMetrics {
  Tick ticks_simulated = 0;
  std::size_t releases = 0;
  std::size_t gaps = 0;
  std::size_t resent_releases = 0;
  double utility_error = 0.0;    // meters, released vs true
  double adversary_error = 0.0;  // meters, Bayes-optimal, uniform prior
  // R0 fit results; empty with a reason when the streams carry no signal.
  std::optional<EpidemicAnalysis> r0;
  std::string r0_error;
  MonitorReport monitoring;
  double monitoring_count_error = 0.0;  // mean |observed - true| per area-tick
};

// Adversary error of the graph-exponential mechanism on `policy`.
inline double policy_adversary_error(const GridWorld& grid, const PolicyGraph& policy,
                                     double epsilon) {
  const auto m = graph_exponential_matrix(MechanismConfig(epsilon, policy));
  return adversary_error(m, AdversaryPrior::uniform(m.nodes()), grid);
}

inline SimulationMetrics collect_metrics(const World& world,
                                         const PolicyGraph& base_policy,
                                         const Partition& monitor_partition,
                                         const EpidemicConfig& epidemic) {
  SimulationMetrics m;
  const auto truth = world.true_stream();
  const auto observed = world.observed_stream();
  const TickRange range = tick_range_of(truth);
  m.ticks_simulated = range.end - range.begin;
  m.releases = observed.size();
  m.gaps = world.gaps().size();
  m.resent_releases = world.resent_releases();
  m.adversary_error =
      policy_adversary_error(world.grid(), base_policy, world.config().epsilon);
  m.monitoring =
      monitor_report(observed, monitor_partition, range, world.grid(), truth, true);
  m.utility_error = m.monitoring.utility_error.value_or(0.0);
  const auto true_counts = monitor_report(truth, monitor_partition, range, world.grid());
  double diff = 0.0;
  std::size_t cells = 0;
  for (std::size_t t = 0; t < true_counts.counts.size(); ++t) {
    for (std::size_t a = 0; a < true_counts.counts[t].size(); ++a) {
      diff += std::abs(double(m.monitoring.counts[t][a] - true_counts.counts[t][a]));
      ++cells;
    }
  }
  m.monitoring_count_error = cells ? diff / double(cells) : 0.0;
  try {
    m.r0 = epidemic_analysis(truth, observed, epidemic);
  } catch (const InsufficientSignal& e) {
    m.r0_error = e.what();
  }
  return m;
}

inline nlohmann::json to_json(const MonitorReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t t = 0; t < r.ticks.size(); ++t) {
    rows.push_back({{"tick", r.ticks[t]}, {"counts", r.counts[t]}});
  }
  nlohmann::json j = {{"area_ids", r.area_ids}, {"per_tick", std::move(rows)}};
  if (r.utility_error) j["utility_error"] = *r.utility_error;
  return j;
}

inline nlohmann::json to_json(const SimulationMetrics& m, bool with_monitoring) {
  nlohmann::json j = {{"ticks", m.ticks_simulated},
                      {"releases", m.releases},
                      {"gaps", m.gaps},
                      {"resent_releases", m.resent_releases},
                      {"utility_error", m.utility_error},
                      {"adversary_error", m.adversary_error},
                      {"monitoring_count_error", m.monitoring_count_error}};
  if (m.r0) {
    j["r0_true"] = m.r0->r0_true;
    j["r0_observed"] = m.r0->r0_observed;
    j["r0_gap"] = m.r0->gap;
  } else {
    j["r0_true"] = nullptr;
    j["r0_observed"] = nullptr;
    j["r0_gap"] = nullptr;
    j["r0_error"] = m.r0_error;
  }
  if (with_monitoring) j["monitoring"] = to_json(m.monitoring);
  return j;
}

inline nlohmann::json to_json(const TraceResult& r) {
  nlohmann::json log = nlohmann::json::array();
  for (const auto& d : r.disclosures) {
    log.push_back({{"user", d.user},
                   {"tick", d.tick},
                   {"cell", d.cell},
                   {"epoch", d.epoch},
                   {"exact", d.exact}});
  }
  return {{"patient_id", r.patient},
          {"infected_cells", r.infected_cells},
          {"at_risk", r.at_risk},
          {"contacts", r.contacts},
          {"resent_releases", r.resent_releases},
          {"disclosures", std::move(log)}};
}

}  // namespace panda
