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


// panda: command-line front end.
//
//   panda audit --grid 2x1 --policy complete --mechanism identity
//   panda simulate scenarios/demo.conf --out run/
//   panda serve --addr :8080

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "httplib.h"
#include "panda/http_server.hpp"
#include "panda/panda.hpp"

namespace {

using namespace panda;
namespace fs = std::filesystem;

constexpr int kAuditFailed = 2;

struct GridFlags {
  std::string size = "8x8";
  double cell_size = 1.0;

  GridWorld grid() const {
    const auto [w, h] = parse_grid_size(size);
    return GridWorld(w, h, cell_size);
  }
};

void add_grid_flags(CLI::App* cmd, GridFlags& g) {
  cmd->add_option("--grid", g.size, "Grid size WxH")->capture_default_str();
  cmd->add_option("--cell-size", g.cell_size, "Cell side in meters")->capture_default_str();
}

struct PolicyFlags {
  std::string policy = "grid";
  std::int32_t block = 4;
  double edge_prob = 0.3;
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& p) {
  cmd->add_option("--policy", p.policy,
                  "Policy JSON file, or a kind: grid|complete|partition|isolated|random")
      ->capture_default_str();
  cmd->add_option("--block", p.block, "Partition block side in cells")->capture_default_str();
  cmd->add_option("--edge-prob", p.edge_prob, "Random policy edge probability")
      ->capture_default_str();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

PolicyGraph load_policy(const PolicyFlags& p, const GridWorld& grid, Seed seed) {
  if (fs::is_regular_file(p.policy)) return parse_policy(read_file(p.policy));
  PolicySpec spec;
  spec.kind = parse_policy_kind(p.policy);
  spec.block = p.block;
  spec.edge_prob = p.edge_prob;
  spec.seed = seed;
  return build_policy(grid, spec);
}

// Writes to `path`, or stdout when empty.
void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string stream_csv(const std::vector<Record>& records) {
  std::ostringstream os;
  write_stream_csv(os, records);
  return os.str();
}

BoundingBox parse_bbox(const std::string& s) {
  BoundingBox b;
  char c1, c2, c3;
  std::istringstream in(s);
  if (!(in >> b.min_lat >> c1 >> b.min_lon >> c2 >> b.max_lat >> c3 >> b.max_lon) ||
      c1 != ',' || c2 != ',' || c3 != ',') {
    throw InvalidArgument("bbox must be min_lat,min_lon,max_lat,max_lon", "bbox");
  }
  b.validate();
  return b;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return parse_scenario(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy-graph location privacy toolkit and surveillance simulator", "panda"};
  app.require_subcommand(1);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Normalize Geolife or Gowalla data to user_id,tick,cell");
  GridFlags ingest_grid;
  std::string format = "geolife", bbox_text, ingest_out;
  std::vector<std::string> inputs;
  std::int64_t tick_seconds = 3600, origin = 0;
  add_grid_flags(ingest, ingest_grid);
  ingest->add_option("--format", format, "geolife|gowalla")
      ->check(CLI::IsMember({"geolife", "gowalla"}))
      ->capture_default_str();
  ingest->add_option("--bbox", bbox_text, "min_lat,min_lon,max_lat,max_lon")->required();
  ingest->add_option("--tick-seconds", tick_seconds, "Tick length")->capture_default_str();
  ingest->add_option("--origin", origin, "Unix time of tick 0")->capture_default_str();
  ingest->add_option("--out", ingest_out, "Output CSV (default stdout)");
  ingest->add_option("inputs", inputs, "Input files; Geolife files map to users 0, 1, ...")
      ->required()
      ->check(CLI::ExistingFile);

  // perturb
  auto* perturb_cmd = app.add_subcommand("perturb", "Release a trajectory CSV under a policy");
  GridFlags perturb_grid;
  PolicyFlags perturb_policy;
  std::string trajectory_path, perturb_out;
  double perturb_eps = 1.0;
  Seed perturb_seed = 0;
  add_grid_flags(perturb_cmd, perturb_grid);
  add_policy_flags(perturb_cmd, perturb_policy);
  perturb_cmd->add_option("--epsilon", perturb_eps, "Privacy budget")->capture_default_str();
  perturb_cmd->add_option("--seed", perturb_seed, "Random seed")->capture_default_str();
  perturb_cmd->add_option("--out", perturb_out, "Output CSV (default stdout)");
  perturb_cmd->add_option("trajectory", trajectory_path, "user_id,tick,cell CSV")
      ->required()
      ->check(CLI::ExistingFile);

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Exhaustively check a mechanism; exit 2 on violation");
  GridFlags audit_grid;
  PolicyFlags audit_policy_flags;
  std::string mechanism = "graph_exponential", check = "policy", audit_out;
  double audit_eps = 1.0;
  Seed audit_seed = 0;
  std::vector<Cell> location_set;
  add_grid_flags(audit_cmd, audit_grid);
  add_policy_flags(audit_cmd, audit_policy_flags);
  audit_cmd->add_option("--epsilon", audit_eps, "Privacy budget")->capture_default_str();
  audit_cmd->add_option("--seed", audit_seed, "Seed for random policies")->capture_default_str();
  audit_cmd->add_option("--mechanism", mechanism, "graph_exponential|identity|uniform|FILE.csv")
      ->capture_default_str();
  audit_cmd->add_option("--check", check, "policy|infinity|geo|set")
      ->check(CLI::IsMember({"policy", "infinity", "geo", "set"}))
      ->capture_default_str();
  audit_cmd->add_option("--set", location_set, "Cells for --check set (default all nodes)")
      ->delimiter(',');
  audit_cmd->add_option("--out", audit_out, "Report JSON (default stdout)");

  // simulate
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a scenario; write metrics and streams");
  std::string scenario_path, simulate_out = ".";
  simulate_cmd->add_option("scenario", scenario_path, "Scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out", simulate_out, "Output directory")->capture_default_str();

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Run a scenario, then trace one patient");
  std::string trace_scenario, trace_out;
  UserId patient = 0;
  trace_cmd->add_option("scenario", trace_scenario, "Scenario file")
      ->required()
      ->check(CLI::ExistingFile);
  trace_cmd->add_option("--patient", patient, "Diagnosed user id")->required();
  trace_cmd->add_option("--out", trace_out, "Contacts JSON (default stdout)");

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP/JSON service");
  std::string addr;
  serve_cmd->add_option("--addr", addr, "host:port (default $PANDA_ADDR, then 127.0.0.1:8080)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) {
      const GridWorld grid = ingest_grid.grid();
      const BoundingBox bbox = parse_bbox(bbox_text);
      const TickClock clock{origin, tick_seconds};
      std::vector<Trajectory> trajs;
      if (format == "geolife") {
        for (std::size_t i = 0; i < inputs.size(); ++i) {
          std::ifstream in(inputs[i]);
          trajs.push_back(discretize(parse_geolife(in), grid, bbox, clock,
                                     static_cast<UserId>(i)));
        }
      } else {
        std::map<UserId, std::vector<GeoPoint>> by_user;
        for (const auto& path : inputs) {
          std::ifstream in(path);
          for (const auto& c : parse_gowalla(in)) by_user[c.user].push_back(c.point);
        }
        for (auto& [user, points] : by_user) {
          trajs.push_back(discretize(std::move(points), grid, bbox, clock, user));
        }
      }
      emit(ingest_out, stream_csv(to_records(trajs)));
      return 0;
    }

    if (*perturb_cmd) {
      const GridWorld grid = perturb_grid.grid();
      const PolicyGraph policy = load_policy(perturb_policy, grid, perturb_seed);
      const MechanismConfig config(perturb_eps, policy);
      std::ifstream in(trajectory_path);
      std::vector<Trajectory> released;
      for (const auto& traj : to_trajectories(read_stream_csv(in))) {
        released.push_back(perturb_trajectory(
            config, traj, derive_seed(perturb_seed, {static_cast<std::uint64_t>(traj.user())})));
      }
      emit(perturb_out, stream_csv(to_records(released)));
      return 0;
    }

    if (*audit_cmd) {
      const GridWorld grid = audit_grid.grid();
      const PolicyGraph policy = load_policy(audit_policy_flags, grid, audit_seed);
      MechanismMatrix m = MechanismMatrix::identity({0});
      if (mechanism == "graph_exponential") {
        m = graph_exponential_matrix(MechanismConfig(audit_eps, policy));
      } else if (mechanism == "identity") {
        m = MechanismMatrix::identity(policy.nodes());
      } else if (mechanism == "uniform") {
        m = MechanismMatrix::uniform(policy.nodes());
      } else {
        std::ifstream in(mechanism);
        if (!in) throw std::runtime_error("cannot open mechanism '" + mechanism + "'");
        m = read_matrix_csv(in);
      }
      AuditReport r;
      if (check == "policy") {
        r = audit_policy(m, policy, audit_eps);
      } else if (check == "infinity") {
        r = audit_infinity(m, policy, audit_eps);
      } else if (check == "geo") {
        r = audit_geo_ind(m, grid, audit_eps);
      } else {
        r = audit_location_set(m, location_set.empty() ? policy.nodes() : location_set,
                               audit_eps);
      }
      emit(audit_out, to_json(r).dump(2) + "\n");
      return r.pass ? 0 : kAuditFailed;
    }

    if (*simulate_cmd) {
      const ScenarioConfig c = load_scenario(scenario_path);
      World world = make_world(c);
      world.run(c.ticks);
      const auto metrics = collect_metrics(
          world, build_policy(c.grid(), c.policy),
          Partition::blocks(c.grid(), c.monitor_block, c.monitor_block), c.epidemic_config());
      fs::create_directories(simulate_out);
      const fs::path dir(simulate_out);
      emit((dir / "metrics.json").string(), to_json(metrics, true).dump(2) + "\n");
      emit((dir / "true_stream.csv").string(), stream_csv(world.true_stream()));
      emit((dir / "observed_stream.csv").string(), stream_csv(world.observed_stream()));
      return 0;
    }

    if (*trace_cmd) {
      const ScenarioConfig c = load_scenario(trace_scenario);
      World world = make_world(c);
      world.run(c.ticks);
      emit(trace_out, to_json(world.trace_contacts(patient)).dump(2) + "\n");
      return 0;
    }

    if (*serve_cmd) {
      const auto where = service::resolve_address(addr);
      service::Service svc;
      httplib::Server server;
      service::mount(server, svc);
      std::cerr << "listening on " << where.host << ":" << where.port << "\n";
      if (!server.listen(where.host, where.port)) {
        throw std::runtime_error("cannot listen on " + where.host + ":" +
                                 std::to_string(where.port));
      }
      return 0;
    }
  } catch (const InvalidArgument& e) {
    std::cerr << "panda: " << e.what();
    if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
    std::cerr << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "panda: line " << e.line() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "panda: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
