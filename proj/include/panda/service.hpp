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

// Session-oriented JSON API. Service::handle() is transport independent;
// http_server.hpp mounts it on cpp-httplib. Endpoints are documented in
// docs/api.md.

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "panda/auditor.hpp"
#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/ingest.hpp"
#include "panda/mechanism.hpp"
#include "panda/policy_graph.hpp"
#include "panda/scenario.hpp"
#include "panda/surveillance.hpp"

namespace panda::service {

using nlohmann::json;

struct ApiResponse {
  int status = 200;
  json body;
};

// Carries an HTTP status and the machine-readable error body.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message,
           std::string field = {})
      : std::runtime_error(message),
        status_(status),
        code_(std::move(code)),
        field_(std::move(field)) {}

  int status() const noexcept { return status_; }
  json body() const {
    return {{"error_code", code_},
            {"message", what()},
            {"field", field_.empty() ? json(nullptr) : json(field_)}};
  }

 private:
  int status_;
  std::string code_;
  std::string field_;
};

struct Session {
  std::mutex mu;
  GridWorld grid{1, 1};
  Seed seed = 0;
  std::int64_t users = 20;
  std::int64_t horizon = 2000;  // ticks of synthetic mobility available
  double epsilon = 1.0;
  std::int32_t monitor_block = 4;
  WorldConfig world_config;
  EpidemicConfig epidemic;
  std::optional<PolicyGraph> policy;
  std::int64_t policy_epoch = 0;
  std::optional<World> world;
  std::uint64_t perturb_draws = 0;
  json history = json::array();
};

namespace detail {

inline std::vector<std::string_view> split_path(std::string_view path) {
  if (const auto q = path.find('?'); q != std::string_view::npos) {
    path = path.substr(0, q);
  }
  std::vector<std::string_view> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t j = path.find('/', i);
    const std::size_t end = j == std::string_view::npos ? path.size() : j;
    if (end > i) parts.push_back(path.substr(i, end - i));
    i = end;
  }
  return parts;
}

inline ApiError bad_request(const std::string& message, std::string field = {}) {
  return ApiError(400, "invalid_argument", message, std::move(field));
}

template <typename T>
T get_or(const json& body, const char* key, T fallback) {
  if (!body.contains(key) || body[key].is_null()) return fallback;
  try {
    return body[key].get<T>();
  } catch (const json::exception&) {
    throw bad_request(std::string("field '") + key + "' has the wrong type", key);
  }
}

template <typename T>
T require(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) {
    throw bad_request(std::string("missing field '") + key + "'", key);
  }
  return get_or<T>(body, key, T{});
}

inline std::vector<Cell> cells_of(const json& arr, const char* field) {
  if (!arr.is_array()) throw bad_request(std::string(field) + " must be an array", field);
  std::vector<Cell> out;
  for (const auto& v : arr) {
    if (!v.is_number_integer()) {
      throw bad_request(std::string(field) + " must hold integer cell ids", field);
    }
    out.push_back(v.get<Cell>());
  }
  return out;
}

inline std::string random_token() {
  std::random_device rd;
  std::ostringstream os;
  os << std::hex;
  for (int i = 0; i < 4; ++i) os << rd();
  return os.str();
}

}  // namespace detail

class Service {
 public:
  ApiResponse handle(std::string_view method, std::string_view path,
                     std::string_view body_text) {
    try {
      json body = json::object();
      if (!body_text.empty()) {
        try {
          body = json::parse(body_text);
        } catch (const json::parse_error& e) {
          throw ApiError(400, "malformed_json", e.what());
        }
        if (!body.is_object()) throw ApiError(400, "malformed_json", "body must be an object");
      }
      return route(method, detail::split_path(path), body);
    } catch (const ApiError& e) {
      return {e.status(), e.body()};
    } catch (const InvalidArgument& e) {
      return {400, ApiError(400, "invalid_argument", e.what(), e.field()).body()};
    } catch (const InsufficientSignal& e) {
      return {400, ApiError(400, "insufficient_signal", e.what()).body()};
    } catch (const DegenerateObservation& e) {
      return {400, ApiError(400, "degenerate_observation", e.what()).body()};
    } catch (const std::exception& e) {
      return {500, ApiError(500, "internal", e.what()).body()};
    }
  }

  std::size_t session_count() const {
    std::shared_lock lock(sessions_mu_);
    return sessions_.size();
  }

 private:
  ApiResponse route(std::string_view method, const std::vector<std::string_view>& p,
                    const json& body) {
    if (p.empty() || p[0] != "sessions") {
      throw ApiError(404, "not_found", "no such endpoint");
    }
    if (p.size() == 1) {
      if (method == "POST") return create_session(body);
      throw ApiError(404, "not_found", "no such endpoint");
    }
    const auto session = find(std::string(p[1]));
    std::lock_guard lock(session->mu);
    Session& s = *session;
    const std::string_view action = p.size() > 2 ? p[2] : "";
    if (p.size() == 2 && method == "GET") return describe(s, std::string(p[1]));
    if (p.size() == 3) {
      if (action == "policy" && method == "PUT") return put_policy(s, body);
      if (action == "policy" && method == "GET") return get_policy(s);
      if (action == "reject-policy" && method == "POST") return reject_policy(s);
      if (action == "perturb" && method == "POST") return perturb_cell(s, body);
      if (action == "audit" && method == "POST") return audit(s, body);
      if (action == "simulate" && method == "POST") return simulate(s, body);
      if (action == "trace" && method == "POST") return trace(s, body);
      if (action == "metrics" && method == "GET") return metrics(s);
      if (action == "streams" && method == "GET") return streams(s);
    }
    if (p.size() == 4 && action == "trace" && p[3] == "resend" && method == "POST") {
      return resend(s);
    }
    throw ApiError(404, "not_found", "no such endpoint");
  }

  std::shared_ptr<Session> find(const std::string& id) const {
    std::shared_lock lock(sessions_mu_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) {
      throw ApiError(404, "unknown_session", "no session '" + id + "'", "session_id");
    }
    return it->second;
  }

  ApiResponse create_session(const json& body) {
    using detail::get_or;
    auto s = std::make_shared<Session>();
    const json grid = get_or<json>(body, "grid", json::object());
    if (!grid.is_object()) throw detail::bad_request("grid must be an object", "grid");
    s->grid = GridWorld(get_or<std::int32_t>(grid, "width", 8),
                        get_or<std::int32_t>(grid, "height", 8),
                        get_or<double>(grid, "cell_size", 1.0));
    s->seed = get_or<Seed>(body, "seed", 0);
    s->users = get_or<std::int64_t>(body, "users", 20);
    s->horizon = get_or<std::int64_t>(body, "horizon", 2000);
    s->epsilon = get_or<double>(body, "epsilon", 1.0);
    s->monitor_block = get_or<std::int32_t>(body, "monitor_block", 4);
    if (s->users < 1) throw detail::bad_request("users must be >= 1", "users");
    if (s->horizon < 1) throw detail::bad_request("horizon must be >= 1", "horizon");
    (void)Partition::blocks(s->grid, s->monitor_block, s->monitor_block);
    s->world_config.grid = s->grid;
    s->world_config.epsilon = s->epsilon;
    s->world_config.seed = s->seed;
    s->world_config.ticks_per_day = get_or<Tick>(body, "ticks_per_day", 24);
    s->world_config.retention_days = get_or<Tick>(body, "retention_days", 14);
    s->world_config.rule.threshold = get_or<std::int64_t>(body, "contact_threshold", 2);
    s->world_config.validate();
    s->epidemic = ScenarioConfig{}.epidemic_config();
    if (body.contains("seir")) {
      const json& seir = body["seir"];
      if (!seir.is_object()) throw detail::bad_request("seir must be an object", "seir");
      auto& p = s->epidemic.seir;
      p.beta = get_or<double>(seir, "beta", p.beta);
      p.sigma = get_or<double>(seir, "sigma", p.sigma);
      p.gamma = get_or<double>(seir, "gamma", p.gamma);
      p.n = get_or<double>(seir, "population", p.n);
      p.i0 = get_or<double>(seir, "i0", p.i0);
      p.e0 = get_or<double>(seir, "e0", p.e0);
      p.dt = get_or<double>(seir, "dt", p.dt);
      p.validate();
    }
    std::string id;
    {
      std::unique_lock lock(sessions_mu_);
      do {
        id = detail::random_token();
      } while (sessions_.count(id));
      sessions_.emplace(id, std::move(s));
    }
    return {201, {{"session_id", id}}};
  }

  ApiResponse describe(Session& s, const std::string& id) const {
    json j = {{"session_id", id},
              {"grid",
               {{"width", s.grid.width()},
                {"height", s.grid.height()},
                {"cell_size", s.grid.cell_size()}}},
              {"seed", s.seed},
              {"users", s.users},
              {"epsilon", s.epsilon},
              {"policy_epoch", s.policy_epoch},
              {"has_policy", s.policy.has_value()},
              {"tick", s.world ? s.world->now() : 0},
              {"trace_pending", s.world && s.world->trace_pending()}};
    return {200, j};
  }

  PolicyGraph build_from_request(Session& s, const json& body) {
    using detail::get_or;
    const auto kind = detail::require<std::string>(body, "kind");
    const json params = get_or<json>(body, "params", json::object());
    if (!params.is_object()) throw detail::bad_request("params must be an object", "params");
    if (kind == "grid") return build_grid_policy(s.grid);
    if (kind == "isolated") return build_isolated_policy(s.grid);
    if (kind == "complete") {
      auto nodes = params.contains("nodes") ? detail::cells_of(params["nodes"], "nodes")
                                            : s.grid.all_cells();
      return build_complete_policy(std::move(nodes));
    }
    if (kind == "partition") {
      if (params.contains("areas")) {
        return build_partition_policy(
            s.grid, Partition(s.grid, detail::cells_of(params["areas"], "areas")));
      }
      const auto block = get_or<std::int32_t>(params, "block", 4);
      return build_partition_policy(s.grid, Partition::blocks(s.grid, block, block));
    }
    if (kind == "contact") {
      const PolicyGraph base = s.policy ? *s.policy : build_grid_policy(s.grid);
      const auto infected = params.contains("infected")
                                ? detail::cells_of(params["infected"], "infected")
                                : std::vector<Cell>{};
      return build_contact_policy(base, infected);
    }
    if (kind == "random") {
      auto nodes = params.contains("nodes") ? detail::cells_of(params["nodes"], "nodes")
                                            : s.grid.all_cells();
      return random_policy(std::move(nodes), get_or<double>(params, "edge_prob", 0.5),
                           get_or<Seed>(params, "seed", s.seed));
    }
    if (kind == "custom") {
      const json& g = params.contains("graph") ? params["graph"] : params;
      return policy_from_json(g);
    }
    throw detail::bad_request(
        "unknown policy kind '" + kind +
            "' (grid|complete|partition|contact|random|isolated|custom)",
        "kind");
  }

  // The server decides the policy and pushes it to every client.
  ApiResponse put_policy(Session& s, const json& body) {
    PolicyGraph g = build_from_request(s, body);
    for (Cell c : g.nodes()) s.grid.check(c, "nodes");
    if (body.contains("epsilon")) {
      s.epsilon = detail::get_or<double>(body, "epsilon", s.epsilon);
      MechanismConfig(s.epsilon, g).validate();
    }
    s.policy = g;
    ++s.policy_epoch;
    if (s.world) {
      auto shared = std::make_shared<const PolicyGraph>(g);
      for (UserId u : s.world->users()) {
        s.world->issue_directive(u, shared, DirectiveReason::kBaseline);
      }
    }
    return {200, to_json(g)};
  }

  ApiResponse get_policy(Session& s) const {
    if (!s.policy) throw ApiError(409, "no_policy", "no policy is active");
    return {200, to_json(*s.policy)};
  }

  // A client declining the policy: nothing is released until a new one is
  // pushed.
  ApiResponse reject_policy(Session& s) {
    s.policy.reset();
    if (s.world) {
      for (UserId u : s.world->users()) s.world->mutable_client(u).reject();
    }
    return {200, {{"rejected", true}}};
  }

  ApiResponse perturb_cell(Session& s, const json& body) {
    if (!s.policy) throw ApiError(409, "no_policy", "no policy is active");
    const Cell cell = detail::require<Cell>(body, "cell");
    const double eps = detail::get_or<double>(body, "epsilon", s.epsilon);
    const Seed seed = body.contains("seed")
                          ? detail::get_or<Seed>(body, "seed", 0)
                          : derive_seed(s.seed, {0x7065, s.perturb_draws++});
    const Cell z = perturb(MechanismConfig(eps, *s.policy), cell, seed);
    return {200, {{"released_cell", z}}};
  }

  ApiResponse audit(Session& s, const json& body) {
    if (!s.policy) throw ApiError(409, "no_policy", "no policy is active");
    const double eps = detail::get_or<double>(body, "epsilon", s.epsilon);
    const auto check = detail::get_or<std::string>(body, "check", "policy");
    const auto mechanism = detail::get_or<std::string>(body, "mechanism", "graph_exponential");
    const PolicyGraph& g = *s.policy;
    const MechanismMatrix m = [&] {
      if (mechanism == "graph_exponential") {
        return graph_exponential_matrix(MechanismConfig(eps, g));
      }
      if (mechanism == "identity") return MechanismMatrix::identity(g.nodes());
      if (mechanism == "uniform") return MechanismMatrix::uniform(g.nodes());
      throw detail::bad_request("unknown mechanism '" + mechanism + "'", "mechanism");
    }();
    AuditReport r;
    if (check == "policy") {
      r = audit_policy(m, g, eps);
    } else if (check == "infinity") {
      r = audit_infinity(m, g, eps);
    } else if (check == "geo") {
      r = audit_geo_ind(m, s.grid, eps);
    } else if (check == "set") {
      const auto set = body.contains("set") ? detail::cells_of(body["set"], "set") : g.nodes();
      r = audit_location_set(m, set, eps);
    } else {
      throw detail::bad_request("check must be policy|infinity|geo|set", "check");
    }
    return {200, to_json(r)};
  }

  void ensure_world(Session& s) {
    if (s.world) return;
    if (!s.policy) throw ApiError(409, "no_policy", "no policy is active");
    s.world_config.epsilon = s.epsilon;
    s.world.emplace(s.world_config, *s.policy,
                    synth_walk(s.grid, s.users, s.horizon, s.seed));
  }

  ApiResponse simulate(Session& s, const json& body) {
    const auto ticks = detail::require<std::int64_t>(body, "ticks");
    if (ticks < 1 || ticks > 10000) {
      throw detail::bad_request("ticks must be in [1, 10000]", "ticks");
    }
    ensure_world(s);
    if (s.world->trace_pending()) {
      throw ApiError(409, "trace_pending", "a contact-trace re-send is pending");
    }
    if (s.world->now() + ticks > s.horizon) {
      throw detail::bad_request("simulation would pass the mobility horizon of " +
                                    std::to_string(s.horizon) + " ticks",
                                "ticks");
    }
    const Tick from = s.world->now();
    std::size_t released = 0;
    for (std::int64_t i = 0; i < ticks; ++i) released += s.world->step().size();
    const Tick to = s.world->now();
    s.history.push_back(snapshot(s));
    return {200, {{"from", from}, {"to", to}, {"released", released}}};
  }

  ApiResponse trace(Session& s, const json& body) {
    if (!s.world) throw ApiError(409, "no_simulation", "simulate before tracing");
    if (s.world->trace_pending()) {
      throw ApiError(409, "trace_pending", "a contact-trace re-send is pending");
    }
    const auto patient = detail::require<UserId>(body, "patient_id");
    if (!s.world->has_user(patient)) {
      throw detail::bad_request("unknown patient " + std::to_string(patient), "patient_id");
    }
    const bool resend_now = detail::get_or<bool>(body, "resend", true);
    const PendingTrace& p = s.world->begin_trace(patient);
    if (!resend_now) {
      return {202,
              {{"pending", true},
               {"patient_id", p.patient},
               {"infected_cells", p.infected_cells},
               {"at_risk", p.at_risk}}};
    }
    return resend(s);
  }

  ApiResponse resend(Session& s) {
    if (!s.world || !s.world->trace_pending()) {
      throw ApiError(409, "no_pending_trace", "no contact-trace re-send is pending");
    }
    json j = to_json(s.world->complete_trace());
    j["pending"] = false;
    return {200, j};
  }

  json snapshot(Session& s) const {
    json j = {{"tick", s.world ? s.world->now() : 0}};
    if (!s.world || s.world->true_stream().empty()) {
      j["utility_error"] = nullptr;
      return j;
    }
    j["utility_error"] =
        monitor_report(s.world->observed_stream(),
                       Partition::blocks(s.grid, s.monitor_block, s.monitor_block),
                       tick_range_of(s.world->true_stream()), s.grid,
                       s.world->true_stream(), true)
            .utility_error.value_or(0.0);
    return j;
  }

  ApiResponse metrics(Session& s) const {
    json j = {{"tick", s.world ? s.world->now() : 0}, {"history", s.history}};
    j["adversary_error"] =
        s.policy ? json(policy_adversary_error(s.grid, *s.policy, s.epsilon)) : json(nullptr);
    if (!s.world || s.world->true_stream().empty()) {
      j["utility_error"] = nullptr;
      j["r0_true"] = nullptr;
      j["r0_observed"] = nullptr;
      j["r0_gap"] = nullptr;
      j["monitoring"] = nullptr;
      return {200, j};
    }
    const Partition part = Partition::blocks(s.grid, s.monitor_block, s.monitor_block);
    const auto truth = s.world->true_stream();
    const auto observed = s.world->observed_stream();
    const auto report =
        monitor_report(observed, part, tick_range_of(truth), s.grid, truth, true);
    j["utility_error"] = report.utility_error.value_or(0.0);
    j["monitoring"] = to_json(report);
    j["releases"] = observed.size();
    j["gaps"] = s.world->gaps().size();
    j["resent_releases"] = s.world->resent_releases();
    try {
      const auto r0 = epidemic_analysis(truth, observed, s.epidemic);
      j["r0_true"] = r0.r0_true;
      j["r0_observed"] = r0.r0_observed;
      j["r0_gap"] = r0.gap;
    } catch (const InsufficientSignal& e) {
      j["r0_true"] = nullptr;
      j["r0_observed"] = nullptr;
      j["r0_gap"] = nullptr;
      j["r0_error"] = e.what();
    }
    return {200, j};
  }

  ApiResponse streams(Session& s) const {
    auto rows = [](const std::vector<Record>& recs) {
      json out = json::array();
      for (const auto& r : recs) out.push_back({r.user, r.tick, r.cell});
      return out;
    };
    if (!s.world) return {200, {{"true", json::array()}, {"observed", json::array()}}};
    return {200,
            {{"true", rows(s.world->true_stream())},
             {"observed", rows(s.world->observed_stream())}}};
  }

  mutable std::shared_mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace panda::service
