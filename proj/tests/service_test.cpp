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


#include "panda/service.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <string>
#include <thread>

#include "panda/http_server.hpp"

namespace panda::service {
namespace {

using nlohmann::json;

class ServiceTest : public ::testing::Test {
 protected:
  ApiResponse call(std::string_view method, const std::string& path, const json& body = {}) {
    return svc.handle(method, path, body.is_null() ? "" : body.dump());
  }

  std::string create(const json& body) {
    const auto r = call("POST", "/sessions", body);
    EXPECT_EQ(r.status, 201);
    return r.body["session_id"].get<std::string>();
  }

  Service svc;
};

TEST_F(ServiceTest, CompletePolicyOnTwoCells) {
  const auto id = create({{"grid", {{"width", 2}, {"height", 1}}}, {"seed", 1}});
  const auto r = call("PUT", "/sessions/" + id + "/policy", {{"kind", "complete"}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(r.body["edges"], json::parse("[[0,1]]"));
  EXPECT_EQ(call("GET", "/sessions/" + id + "/policy").body, r.body);
}

TEST_F(ServiceTest, AuditIdentityOnK2Fails) {
  const auto id = create({{"grid", {{"width", 2}, {"height", 1}}}});
  call("PUT", "/sessions/" + id + "/policy", {{"kind", "complete"}});
  const auto bad = call("POST", "/sessions/" + id + "/audit",
                        {{"epsilon", 1.0}, {"check", "policy"}, {"mechanism", "identity"}});
  EXPECT_EQ(bad.status, 200);
  EXPECT_EQ(bad.body["pass"], false);
  const auto good = call("POST", "/sessions/" + id + "/audit", {{"epsilon", 1.0}});
  EXPECT_EQ(good.body["pass"], true);
  for (const char* check : {"infinity", "geo", "set"}) {
    EXPECT_EQ(call("POST", "/sessions/" + id + "/audit", {{"check", check}}).body["pass"], true)
        << check;
  }
}

TEST_F(ServiceTest, PerturbIsolatedCellReturnsInput) {
  const auto id = create({{"grid", {{"width", 3}, {"height", 3}}}});
  call("PUT", "/sessions/" + id + "/policy", {{"kind", "isolated"}});
  for (int cell = 0; cell < 9; ++cell) {
    const auto r = call("POST", "/sessions/" + id + "/perturb", {{"cell", cell}, {"epsilon", 0.1}});
    EXPECT_EQ(r.status, 200);
    EXPECT_EQ(r.body["released_cell"], cell);
  }
}

TEST_F(ServiceTest, ErrorShapes) {
  auto r = call("GET", "/sessions/nope/metrics");
  EXPECT_EQ(r.status, 404);
  EXPECT_EQ(r.body["error_code"], "unknown_session");

  const auto id = create({});
  r = call("POST", "/sessions/" + id + "/perturb", {{"cell", 0}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error_code"], "no_policy");

  r = call("PUT", "/sessions/" + id + "/policy", {{"kind", "hexagon"}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error_code"], "invalid_argument");
  EXPECT_EQ(r.body["field"], "kind");
  EXPECT_TRUE(r.body["message"].is_string());

  r = call("PUT", "/sessions/" + id + "/policy",
           {{"kind", "custom"}, {"params", {{"nodes", {0, 1}}, {"edges", {{0, 5}}}}}});
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["field"], "edges");

  r = svc.handle("POST", "/sessions", "{not json");
  EXPECT_EQ(r.status, 400);
  EXPECT_EQ(r.body["error_code"], "malformed_json");

  r = call("POST", "/sessions", {{"users", 0}});
  EXPECT_EQ(r.body["field"], "users");

  call("PUT", "/sessions/" + id + "/policy", {{"kind", "grid"}});
  r = call("POST", "/sessions/" + id + "/perturb", {{"cell", 999}});
  EXPECT_EQ(r.status, 400);
  r = call("POST", "/sessions/" + id + "/simulate", {});
  EXPECT_EQ(r.body["field"], "ticks");
  r = call("POST", "/sessions/" + id + "/trace", {{"patient_id", 0}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(call("DELETE", "/sessions/" + id).status, 404);
  EXPECT_EQ(call("GET", "/elsewhere").status, 404);
}

TEST_F(ServiceTest, PendingTraceBlocksSimulation) {
  const auto id = create({{"grid", {{"width", 4}, {"height", 4}}}, {"users", 6}});
  call("PUT", "/sessions/" + id + "/policy", {{"kind", "grid"}});
  EXPECT_EQ(call("POST", "/sessions/" + id + "/simulate", {{"ticks", 20}}).status, 200);
  auto r = call("POST", "/sessions/" + id + "/trace", {{"patient_id", 1}, {"resend", false}});
  EXPECT_EQ(r.status, 202);
  EXPECT_EQ(r.body["pending"], true);
  r = call("POST", "/sessions/" + id + "/simulate", {{"ticks", 1}});
  EXPECT_EQ(r.status, 409);
  EXPECT_EQ(r.body["error_code"], "trace_pending");
  EXPECT_EQ(call("GET", "/sessions/" + id).body["trace_pending"], true);
  r = call("POST", "/sessions/" + id + "/trace/resend");
  EXPECT_EQ(r.status, 200);
  EXPECT_TRUE(r.body["contacts"].is_array());
  EXPECT_TRUE(r.body["disclosures"].is_array());
  EXPECT_EQ(call("POST", "/sessions/" + id + "/trace/resend").status, 409);
  EXPECT_EQ(call("POST", "/sessions/" + id + "/simulate", {{"ticks", 1}}).status, 200);
}

TEST_F(ServiceTest, RejectPolicyStopsReleases) {
  const auto id = create({{"grid", {{"width", 3}, {"height", 3}}}, {"users", 3}});
  call("PUT", "/sessions/" + id + "/policy", {{"kind", "grid"}});
  call("POST", "/sessions/" + id + "/simulate", {{"ticks", 5}});
  EXPECT_EQ(call("POST", "/sessions/" + id + "/reject-policy").status, 200);
  EXPECT_EQ(call("GET", "/sessions/" + id + "/policy").status, 409);
  const auto before = call("GET", "/sessions/" + id + "/streams").body["observed"].size();
  call("POST", "/sessions/" + id + "/simulate", {{"ticks", 5}});
  EXPECT_EQ(call("GET", "/sessions/" + id + "/streams").body["observed"].size(), before);
  call("PUT", "/sessions/" + id + "/policy", {{"kind", "isolated"}});
  call("POST", "/sessions/" + id + "/simulate", {{"ticks", 5}});
  EXPECT_EQ(call("GET", "/sessions/" + id + "/streams").body["observed"].size(), before + 15);
}

TEST_F(ServiceTest, IdenticalSessionsHaveIdenticalHistories) {
  const json config = {{"grid", {{"width", 5}, {"height", 5}, {"cell_size", 50}}},
                       {"seed", 12},
                       {"users", 8}};
  const auto a = create(config);
  const auto b = create(config);
  EXPECT_NE(a, b);
  for (const auto& id : {a, b}) {
    call("PUT", "/sessions/" + id + "/policy", {{"kind", "partition"}, {"params", {{"block", 2}}}});
    for (int i = 0; i < 3; ++i) call("POST", "/sessions/" + id + "/simulate", {{"ticks", 40}});
  }
  const auto ma = call("GET", "/sessions/" + a + "/metrics");
  EXPECT_EQ(ma.status, 200);
  EXPECT_EQ(ma.body["history"].size(), 3u);
  EXPECT_EQ(ma.body, call("GET", "/sessions/" + b + "/metrics").body);
  EXPECT_EQ(ma.body, call("GET", "/sessions/" + a + "/metrics").body);  // GET is repeatable
  EXPECT_TRUE(ma.body["monitoring"].is_object());
}

TEST_F(ServiceTest, IsolatedPolicyUtilityErrorIsZero) {
  const auto id = create({{"grid", {{"width", 4}, {"height", 4}}}, {"users", 5}});
  call("PUT", "/sessions/" + id + "/policy", {{"kind", "isolated"}});
  call("POST", "/sessions/" + id + "/simulate", {{"ticks", 30}});
  const auto m = call("GET", "/sessions/" + id + "/metrics").body;
  EXPECT_EQ(m["utility_error"], 0.0);
  EXPECT_EQ(m["adversary_error"], 0.0);
}

TEST_F(ServiceTest, CustomPolicyRoundTrip) {
  const auto id = create({{"grid", {{"width", 3}, {"height", 3}}}});
  const json drawn = json::parse(R"({"edges":[[0,4],[2,5]],"nodes":[0,1,2,3,4,5,6,7,8]})");
  const auto r = call("PUT", "/sessions/" + id + "/policy", {{"kind", "custom"}, {"params", drawn}});
  EXPECT_EQ(r.status, 200);
  EXPECT_EQ(call("GET", "/sessions/" + id + "/policy").body, drawn);
}

TEST(ResolveAddressTest, FlagEnvDefault) {
  ::unsetenv("PANDA_ADDR");
  EXPECT_EQ(resolve_address("").port, 8080);
  EXPECT_EQ(resolve_address(":9000").port, 9000);
  EXPECT_EQ(resolve_address("0.0.0.0:81").host, "0.0.0.0");
  ::setenv("PANDA_ADDR", "localhost:7001", 1);
  EXPECT_EQ(resolve_address("").port, 7001);
  EXPECT_EQ(resolve_address(":7002").port, 7002);
  ::unsetenv("PANDA_ADDR");
  EXPECT_THROW(resolve_address("nocolon"), InvalidArgument);
  EXPECT_THROW(resolve_address(":99999"), InvalidArgument);
}

TEST(HttpBindingTest, LoopbackRoundTrip) {
  Service svc;
  httplib::Server server;
  mount(server, svc);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread worker([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto res = client.Post("/sessions", R"({"grid":{"width":2,"height":1}})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 201);
  const auto id = json::parse(res->body)["session_id"].get<std::string>();
  res = client.Put("/sessions/" + id + "/policy", R"({"kind":"complete"})", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["edges"], json::parse("[[0,1]]"));
  res = client.Get("/sessions/missing");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  res = client.Get("/other");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["error_code"], "not_found");

  server.stop();
  worker.join();
}

}  // namespace
}  // namespace panda::service
