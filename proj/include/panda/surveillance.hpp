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

// Client/server epidemic surveillance: clients keep a two-week location
// history and release one perturbed cell per tick under a server-issued
// policy directive. The server monitors area counts, estimates R0 from
// the released stream and runs contact tracing by pushing updated
// directives that make the patient's cells releasable exactly.

#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "panda/auditor.hpp"
#include "panda/errors.hpp"
#include "panda/grid.hpp"
#include "panda/mechanism.hpp"
#include "panda/policy_graph.hpp"
#include "panda/random.hpp"
#include "panda/seir.hpp"
#include "panda/trajectory.hpp"

namespace panda {

enum class DirectiveReason { kBaseline, kContactTraceUpdate };

inline const char* to_string(DirectiveReason r) {
  return r == DirectiveReason::kBaseline ? "baseline" : "contact-trace-update";
}

struct PolicyDirective {
  std::shared_ptr<const PolicyGraph> graph;
  std::int64_t epoch = 0;
  DirectiveReason reason = DirectiveReason::kBaseline;
};

struct ContactRule {
  std::int64_t threshold = 2;

  void validate() const {
    if (threshold < 1) {
      throw InvalidArgument("contact threshold must be >= 1", "threshold");
    }
  }
};

// Per-user local database: a retained history window and the directive
// currently in force. Every directive ever accepted is kept by epoch so
// past releases can be interpreted under the policy they used.
class ClientStore {
 public:
  ClientStore(UserId user, Tick retention_ticks)
      : user_(user), retention_ticks_(retention_ticks) {}

  UserId user() const noexcept { return user_; }
  Tick retention_ticks() const noexcept { return retention_ticks_; }
  const std::deque<Visit>& history() const noexcept { return history_; }
  const std::optional<PolicyDirective>& directive() const noexcept {
    return directive_;
  }
  std::int64_t last_epoch() const noexcept { return last_epoch_; }

  const PolicyGraph& graph_at(std::int64_t epoch) const {
    const auto it = by_epoch_.find(epoch);
    if (it == by_epoch_.end()) {
      throw InvalidArgument("no directive with epoch " + std::to_string(epoch),
                            "epoch");
    }
    return *it->second;
  }

  // Epochs must strictly increase per user.
  void assign(PolicyDirective d) {
    if (!d.graph) throw InvalidArgument("directive without a graph", "policy");
    if (d.epoch <= last_epoch_) {
      throw InvalidArgument("directive epoch " + std::to_string(d.epoch) +
                                " does not exceed " + std::to_string(last_epoch_),
                            "epoch");
    }
    last_epoch_ = d.epoch;
    by_epoch_[d.epoch] = d.graph;
    directive_ = std::move(d);
  }

  // The user declines the current policy; nothing is released until a new
  // directive is accepted.
  void reject() { directive_.reset(); }

  void record(Visit v) {
    if (!history_.empty() && v.tick <= history_.back().tick) {
      throw InvalidArgument("client history must move forward in time", "tick");
    }
    history_.push_back(v);
    prune(v.tick);
  }

  // Keeps entries with tick in [now - retention, now].
  void prune(Tick now) {
    while (!history_.empty() && history_.front().tick < now - retention_ticks_) {
      history_.pop_front();
    }
  }

 private:
  UserId user_;
  Tick retention_ticks_;
  std::deque<Visit> history_;
  std::optional<PolicyDirective> directive_;
  std::int64_t last_epoch_ = 0;
  std::map<std::int64_t, std::shared_ptr<const PolicyGraph>> by_epoch_;
};

// One released cell together with the directive epoch it was drawn under.
struct Release {
  Record record;
  std::int64_t epoch = 0;
};

enum class GapReason { kNoDirective, kOutsidePolicy };

struct Gap {
  UserId user = 0;
  Tick tick = 0;
  GapReason reason = GapReason::kNoDirective;
};

struct WorldConfig {
  GridWorld grid{1, 1};
  double epsilon = 1.0;
  Seed seed = 0;
  Tick ticks_per_day = 24;
  Tick retention_days = 14;
  ContactRule rule;

  Tick retention_ticks() const { return ticks_per_day * retention_days; }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
      throw InvalidArgument("epsilon must be a finite value >= 0", "epsilon");
    }
    if (ticks_per_day < 1) {
      throw InvalidArgument("ticks_per_day must be >= 1", "ticks_per_day");
    }
    if (retention_days < 0) {
      throw InvalidArgument("retention_days must be >= 0", "retention_days");
    }
    rule.validate();
  }
};

namespace sim_detail {
// Sub-stream labels for derive_seed.
inline constexpr std::uint64_t kReleaseStream = 1;
inline constexpr std::uint64_t kResendStream = 2;
}  // namespace sim_detail

struct PendingTrace {
  UserId patient = 0;
  std::vector<Visit> patient_visits;
  std::vector<Cell> infected_cells;
  std::vector<UserId> at_risk;
};

struct Disclosure {
  UserId user = 0;
  Tick tick = 0;
  Cell cell = 0;
  std::int64_t epoch = 0;
  bool exact = false;  // true cell released unperturbed (isolated node)
};

struct TraceResult {
  UserId patient = 0;
  std::vector<Cell> infected_cells;
  std::vector<UserId> at_risk;
  std::vector<Disclosure> disclosures;  // patient first, then by user, tick
  std::vector<UserId> contacts;
  std::size_t resent_releases = 0;  // releases beyond the regular stream
};

class World {
 public:
  World(WorldConfig config, const PolicyGraph& base_policy,
        std::vector<Trajectory> mobility)
      : config_(std::move(config)) {
    config_.validate();
    auto graph = std::make_shared<const PolicyGraph>(base_policy);
    Tick first = 0;
    bool any = false;
    for (auto& traj : mobility) {
      for (const Visit& v : traj.visits()) config_.grid.check(v.cell);
      if (!traj.empty() && (!any || traj.visits().front().tick < first)) {
        first = traj.visits().front().tick;
        any = true;
      }
      const UserId user = traj.user();
      if (clients_.count(user)) {
        throw InvalidArgument("duplicate user " + std::to_string(user), "user");
      }
      Client client{ClientStore(user, config_.retention_ticks()), std::move(traj), 0};
      client.store.assign({graph, 1, DirectiveReason::kBaseline});
      clients_.emplace(user, std::move(client));
    }
    now_ = first;
  }

  const WorldConfig& config() const noexcept { return config_; }
  const GridWorld& grid() const noexcept { return config_.grid; }
  // Next tick to be simulated.
  Tick now() const noexcept { return now_; }
  bool trace_pending() const noexcept { return pending_.has_value(); }
  const std::optional<PendingTrace>& pending_trace() const noexcept {
    return pending_;
  }

  std::vector<UserId> users() const {
    std::vector<UserId> out;
    for (const auto& [id, _] : clients_) out.push_back(id);
    return out;
  }

  bool has_user(UserId u) const { return clients_.count(u) != 0; }

  const ClientStore& client(UserId u) const { return get(u).store; }
  ClientStore& mutable_client(UserId u) { return get(u).store; }
  const Trajectory& mobility(UserId u) const { return get(u).mobility; }

  const std::vector<Record>& true_stream() const noexcept { return truth_; }
  const std::vector<Release>& releases() const noexcept { return observed_; }
  const std::vector<Gap>& gaps() const noexcept { return gaps_; }
  const std::set<Cell>& infected_cells() const noexcept { return infected_; }
  std::size_t resent_releases() const noexcept { return resent_; }

  std::vector<Record> observed_stream() const {
    std::vector<Record> out;
    out.reserve(observed_.size());
    for (const auto& r : observed_) out.push_back(r.record);
    return out;
  }

  // Issues a directive to one user, with the next epoch for that user.
  void issue_directive(UserId u, std::shared_ptr<const PolicyGraph> graph,
                       DirectiveReason reason) {
    auto& store = get(u).store;
    store.assign({std::move(graph), store.last_epoch() + 1, reason});
  }

  // Advances one tick. Clients are visited in ascending user id, so the
  // released records come out in canonical order.
  std::vector<Record> step() {
    if (pending_) {
      throw InvalidArgument("cannot advance while a trace re-send is pending",
                            "trace");
    }
    const Tick tick = now_;
    std::vector<Record> released;
    for (auto& [user, client] : clients_) {
      const auto& visits = client.mobility.visits();
      while (client.cursor < visits.size() && visits[client.cursor].tick < tick) {
        ++client.cursor;
      }
      if (client.cursor == visits.size() || visits[client.cursor].tick != tick) {
        continue;  // no location this tick
      }
      const Visit v = visits[client.cursor++];
      client.store.record(v);
      truth_.push_back({user, tick, v.cell});

      const auto& d = client.store.directive();
      if (!d) {
        gaps_.push_back({user, tick, GapReason::kNoDirective});
        continue;
      }
      if (!d->graph->contains(v.cell)) {
        gaps_.push_back({user, tick, GapReason::kOutsidePolicy});
        continue;
      }
      const MechanismConfig mech(config_.epsilon, *d->graph);
      const Seed seed = derive_seed(
          config_.seed, {sim_detail::kReleaseStream, static_cast<std::uint64_t>(user),
                         static_cast<std::uint64_t>(tick),
                         static_cast<std::uint64_t>(d->epoch)});
      const Record rec{user, tick, perturb(mech, v.cell, seed)};
      observed_.push_back({rec, d->epoch});
      released.push_back(rec);
    }
    ++now_;
    return released;
  }

  void run(Tick ticks) {
    for (Tick i = 0; i < ticks; ++i) step();
  }

  // Phase one of tracing: the patient discloses the retained history
  // exactly, its cells become infected, and every at-risk user receives a
  // contact policy isolating those cells. The world then refuses to step
  // until complete_trace() runs.
  //
  // A user is at risk when, at some tick of the patient's history, the
  // user's release was consistent with standing in the patient's cell:
  // the patient's cell lies in the policy component of the released cell
  // under the directive that produced it. Gaps count as consistent. Users
  // without a directive receive nothing.
  const PendingTrace& begin_trace(UserId patient) {
    if (!has_user(patient)) {
      throw InvalidArgument("unknown patient " + std::to_string(patient),
                            "patient_id");
    }
    if (pending_) {
      throw InvalidArgument("a trace re-send is already pending", "trace");
    }
    PendingTrace p;
    p.patient = patient;
    const auto& history = get(patient).store.history();
    p.patient_visits.assign(history.begin(), history.end());
    std::map<Tick, Cell> patient_at;
    for (const Visit& v : p.patient_visits) {
      patient_at[v.tick] = v.cell;
      infected_.insert(v.cell);
    }
    std::set<Cell> infected_now;
    for (const Visit& v : p.patient_visits) infected_now.insert(v.cell);
    p.infected_cells.assign(infected_now.begin(), infected_now.end());

    std::set<UserId> at_risk;
    for (const Release& r : observed_) {
      const UserId u = r.record.user;
      if (u == patient || at_risk.count(u)) continue;
      const auto it = patient_at.find(r.record.tick);
      if (it == patient_at.end()) continue;
      const PolicyGraph& g = get(u).store.graph_at(r.epoch);
      if (g.contains(it->second) &&
          graph_distance(g, r.record.cell, it->second) != kUnreachable) {
        at_risk.insert(u);
      }
    }
    for (const Gap& gap : gaps_) {
      if (gap.user != patient && patient_at.count(gap.tick)) at_risk.insert(gap.user);
    }
    for (UserId u : at_risk) {
      const auto& d = get(u).store.directive();
      if (!d) continue;
      std::vector<Cell> cut;
      for (Cell c : p.infected_cells) {
        if (d->graph->contains(c)) cut.push_back(c);
      }
      issue_directive(u,
                      std::make_shared<const PolicyGraph>(
                          build_contact_policy(*d->graph, cut)),
                      DirectiveReason::kContactTraceUpdate);
      p.at_risk.push_back(u);
    }
    issue_directive(patient,
                    std::make_shared<const PolicyGraph>(
                        build_isolated_policy(config_.grid)),
                    DirectiveReason::kContactTraceUpdate);
    pending_ = std::move(p);
    return *pending_;
  }

  // Phase two: at-risk clients re-send their retained history under the
  // updated directive with fresh draws, and the contact rule is applied
  // to the disclosed records against the patient.
  TraceResult complete_trace() {
    if (!pending_) {
      throw InvalidArgument("no trace re-send is pending", "trace");
    }
    const PendingTrace p = std::move(*pending_);
    pending_.reset();

    TraceResult result;
    result.patient = p.patient;
    result.infected_cells = p.infected_cells;
    result.at_risk = p.at_risk;

    auto resend = [&](UserId u) {
      const auto& store = get(u).store;
      const PolicyDirective& d = *store.directive();
      const MechanismConfig mech(config_.epsilon, *d.graph);
      for (const Visit& v : store.history()) {
        if (!d.graph->contains(v.cell)) continue;
        const Seed seed = derive_seed(
            config_.seed, {sim_detail::kResendStream, static_cast<std::uint64_t>(u),
                           static_cast<std::uint64_t>(v.tick),
                           static_cast<std::uint64_t>(d.epoch)});
        const Cell z = perturb(mech, v.cell, seed);
        result.disclosures.push_back(
            {u, v.tick, z, d.epoch, d.graph->degree(v.cell) == 0});
        ++result.resent_releases;
      }
    };
    resend(p.patient);
    for (UserId u : p.at_risk) resend(u);
    resent_ += result.resent_releases;

    std::vector<Record> disclosed;
    disclosed.reserve(result.disclosures.size());
    for (const auto& d : result.disclosures) disclosed.push_back({d.user, d.tick, d.cell});
    result.contacts = contacts_of(p.patient, disclosed, config_.rule);
    return result;
  }

  TraceResult trace_contacts(UserId patient) {
    begin_trace(patient);
    return complete_trace();
  }

  // Users meeting the contact rule with `patient` in `records`.
  static std::vector<UserId> contacts_of(UserId patient,
                                         std::span<const Record> records,
                                         const ContactRule& rule);

 private:
  struct Client {
    ClientStore store;
    Trajectory mobility;
    std::size_t cursor = 0;
  };

  Client& get(UserId u) {
    const auto it = clients_.find(u);
    if (it == clients_.end()) {
      throw InvalidArgument("unknown user " + std::to_string(u), "user");
    }
    return it->second;
  }
  const Client& get(UserId u) const { return const_cast<World*>(this)->get(u); }

  WorldConfig config_;
  std::map<UserId, Client> clients_;
  Tick now_ = 0;
  std::vector<Record> truth_;
  std::vector<Release> observed_;
  std::vector<Gap> gaps_;
  std::set<Cell> infected_;
  std::optional<PendingTrace> pending_;
  std::size_t resent_ = 0;
};

using ContactPair = std::pair<UserId, UserId>;  // (low, high)

// Pairs of distinct users sharing a cell on at least rule.threshold ticks.
// Records are bucketed by (tick, cell); duplicates of the same user in a
// bucket count once.
inline std::vector<ContactPair> detect_contacts(std::span<const Record> records,
                                                const ContactRule& rule = {}) {
  rule.validate();
  std::map<std::pair<Tick, Cell>, std::set<UserId>> buckets;
  for (const Record& r : records) buckets[{r.tick, r.cell}].insert(r.user);
  std::map<ContactPair, std::int64_t> counts;
  for (const auto& [_, users] : buckets) {
    for (auto a = users.begin(); a != users.end(); ++a) {
      for (auto b = std::next(a); b != users.end(); ++b) ++counts[{*a, *b}];
    }
  }
  std::vector<ContactPair> out;
  for (const auto& [pair, n] : counts) {
    if (n >= rule.threshold) out.push_back(pair);
  }
  return out;
}

inline std::vector<UserId> World::contacts_of(UserId patient,
                                              std::span<const Record> records,
                                              const ContactRule& rule) {
  std::vector<UserId> out;
  for (const auto& [a, b] : detect_contacts(records, rule)) {
    if (a == patient) out.push_back(b);
    if (b == patient) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct TickRange {
  Tick begin = 0;  // inclusive
  Tick end = 0;    // exclusive
};

struct MonitorReport {
  std::vector<std::int32_t> area_ids;
  std::vector<Tick> ticks;
  std::vector<std::vector<std::int64_t>> counts;  // [tick][area]
  std::optional<double> utility_error;            // meters, when truth given
};

// Observed cells counted per area per tick over `range`. With `truth`,
// also the mean distance between each observed record and the true record
// of the same (user, tick).
inline MonitorReport monitor_report(std::span<const Record> observed,
                                    const Partition& partition, TickRange range,
                                    const GridWorld& grid,
                                    std::span<const Record> truth = {},
                                    bool with_truth = false) {
  MonitorReport rep;
  rep.area_ids = partition.area_ids();
  std::map<std::int32_t, std::size_t> slot;
  for (std::size_t i = 0; i < rep.area_ids.size(); ++i) slot[rep.area_ids[i]] = i;
  for (Tick t = range.begin; t < range.end; ++t) {
    rep.ticks.push_back(t);
    rep.counts.emplace_back(rep.area_ids.size(), 0);
  }
  for (const Record& r : observed) {
    if (r.tick < range.begin || r.tick >= range.end) continue;
    ++rep.counts[r.tick - range.begin][slot.at(partition.area(r.cell))];
  }
  if (with_truth) {
    std::map<std::pair<UserId, Tick>, Cell> true_at;
    for (const Record& r : truth) true_at[{r.user, r.tick}] = r.cell;
    double sum = 0.0;
    std::size_t n = 0;
    for (const Record& r : observed) {
      const auto it = true_at.find({r.user, r.tick});
      if (it == true_at.end()) {
        throw InvalidArgument("observed record (" + std::to_string(r.user) + ", " +
                                  std::to_string(r.tick) + ") has no true record",
                              "truth");
      }
      sum += grid.euclid(it->second, r.cell);
      ++n;
    }
    rep.utility_error = n ? sum / double(n) : 0.0;
  }
  return rep;
}

inline TickRange tick_range_of(std::span<const Record> records) {
  if (records.empty()) return {};
  TickRange r{records.front().tick, records.front().tick + 1};
  for (const Record& x : records) {
    r.begin = std::min(r.begin, x.tick);
    r.end = std::max(r.end, x.tick + 1);
  }
  return r;
}

// How location streams feed the SEIR model: the known cases are
// `index_users`; exposures at a tick are (index user, other user) pairs
// sharing a cell in the stream. Relative exposure, normalized by the true
// stream's mean, scales the transmission rate tick by tick; the resulting
// new-infection series is fitted with a constant beta.
struct EpidemicConfig {
  SeirParams seir;
  std::vector<UserId> index_users{0};
};

struct EpidemicAnalysis {
  double r0_true = 0.0;
  double r0_observed = 0.0;
  double gap = 0.0;
};

inline std::vector<double> exposure_series(std::span<const Record> stream,
                                           std::span<const UserId> index_users,
                                           TickRange range) {
  const std::set<UserId> index(index_users.begin(), index_users.end());
  std::map<std::pair<Tick, Cell>, std::pair<std::int64_t, std::int64_t>> bucket;
  for (const Record& r : stream) {
    auto& [cases, others] = bucket[{r.tick, r.cell}];
    (index.count(r.user) ? cases : others) += 1;
  }
  std::vector<double> out(static_cast<std::size_t>(range.end - range.begin), 0.0);
  for (const auto& [key, n] : bucket) {
    if (key.first >= range.begin && key.first < range.end) {
      out[key.first - range.begin] += double(n.first * n.second);
    }
  }
  return out;
}

inline EpidemicAnalysis epidemic_analysis(std::span<const Record> truth,
                                          std::span<const Record> observed,
                                          const EpidemicConfig& config) {
  if (truth.empty() || observed.empty()) {
    throw InsufficientSignal("epidemic analysis needs non-empty streams");
  }
  const TickRange range = tick_range_of(truth);
  const auto x_true = exposure_series(truth, config.index_users, range);
  const auto x_obs = exposure_series(observed, config.index_users, range);
  double mean = 0.0;
  for (double x : x_true) mean += x;
  mean /= double(x_true.size());
  if (mean <= 0.0) {
    throw InsufficientSignal("true stream contains no exposures to index cases");
  }
  auto r0_from = [&](const std::vector<double>& x) {
    std::vector<double> scale(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) scale[t] = x[t] / mean;
    const auto series = seir_simulate(config.seir, range.end - range.begin, scale);
    return estimate_r0(series.new_infections, config.seir);
  };
  EpidemicAnalysis out;
  out.r0_true = r0_from(x_true);
  out.r0_observed = r0_from(x_obs);
  out.gap = std::abs(out.r0_true - out.r0_observed);
  return out;
}

}  // namespace panda
