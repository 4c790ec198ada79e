#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "sdcg/oracle.hpp"
#include "sdcg/probability.hpp"

using namespace sdcg;
using nlohmann::json;

namespace {

OracleRequest tables_request() {
  OracleRequest r;
  r.oracle_id = "table_lm";
  r.nl = "Find the ids of professionals who have ever treated dogs.";
  r.domain = {"Dogs", "Professionals", "Treatments"};
  return r;
}

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "sdcg_oracle_test";
  std::filesystem::create_directories(dir);
  auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

// Minimal oracle service on an ephemeral port.
struct TestServer {
  httplib::Server svr;
  std::thread thread;
  int port = 0;

  TestServer() = default;
  void start() {
    port = svr.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { svr.listen_after_bind(); });
    svr.wait_until_ready();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
  ~TestServer() {
    svr.stop();
    if (thread.joinable()) thread.join();
  }
};

RemoteConfig fast(const std::string& url) {
  RemoteConfig c;
  c.base_url = url;
  c.backoff = std::chrono::milliseconds(1);
  c.timeout = std::chrono::seconds(5);
  return c;
}

struct Counting : OracleHandle {
  std::atomic<int> calls{0};
  OracleDistribution predict(const OracleRequest& req, const std::string&) override {
    ++calls;
    std::vector<double> p(req.domain.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i + 1);
    return normalize_distribution(p, p.size());
  }
};

}  // namespace

TEST_CASE("prompt for the table oracle") {
  CHECK(build_prompt(tables_request()) ==
        "Find the ids of professionals who have ever treated dogs. Answer 1 for Dogs, Answer 2 for Professionals, "
        "Answer 3 for Treatments, the answer should be Answer ");
}

TEST_CASE("prompt with a parsing state") {
  OracleRequest r;
  r.nl = "What is the average hours across all projects?";
  r.state = "SELECT [column]";
  r.domain = {"code", "name", "hours"};
  // published row, with its typeset double spaces collapsed
  CHECK(build_prompt(r) ==
        "What is the average hours across all projects? SELECT [column], Answer 1 for code, Answer 2 for name, "
        "Answer 3 for hours, the answer should be Answer ");
}

TEST_CASE("single-entry domain and byte stability") {
  OracleRequest r;
  r.nl = "q?";
  r.domain = {"only"};
  CHECK(build_prompt(r) == "q? Answer 1 for only, the answer should be Answer ");
  CHECK(build_prompt(r) == build_prompt(OracleRequest(r)));
}

TEST_CASE("distinct requests give distinct prompts") {
  const std::vector<std::string> nls{"a", "a b", "b"};
  const std::vector<std::string> states{"", "SELECT [column]", "WHERE [column]"};
  const std::vector<std::vector<std::string>> domains{{"x"}, {"x", "y"}, {"y", "x"}, {"x y"}, {"y"}};
  std::set<std::string> seen;
  std::size_t n = 0;
  for (const auto& nl : nls)
    for (const auto& st : states)
      for (const auto& d : domains) {
        OracleRequest r;
        r.nl = nl;
        r.state = st;
        r.domain = d;
        seen.insert(build_prompt(r));
        ++n;
      }
  CHECK(seen.size() == n);
}

TEST_CASE("softmax renormalisation") {
  std::vector<double> zeros{0, 0, 0};
  for (double p : normalize_distribution(zeros, 3).probs) CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-15));

  std::vector<double> logits{std::log(0.2), std::log(0.2), std::log(0.6)};
  auto d = normalize_distribution(logits, 3);
  CHECK(d.probs[0] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(d.probs[1] == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(d.probs[2] == doctest::Approx(0.6).epsilon(1e-12));

  std::vector<double> wide{5.0, 1005.0};
  auto w = normalize_distribution(wide, 2);
  CHECK(w.probs[0] < 1e-300);
  CHECK(w.probs[1] == 1.0);
  CHECK(std::isfinite(w.probs[0]));

  CHECK_THROWS_AS(normalize_distribution({}, 0), OracleError);
  std::vector<double> two{1, 2};
  CHECK_THROWS_AS(normalize_distribution(two, 3), ProtocolError);
  std::vector<double> nan{0, std::nan("")};
  CHECK_THROWS_AS(normalize_distribution(nan, 2), ProtocolError);
}

TEST_CASE("distribution contract") {
  CHECK_NOTHROW(check_distribution({{0.2, 0.2, 0.6}}, 3, "o"));
  CHECK_NOTHROW(check_distribution({{0.5, 0.5 + 5e-7}}, 2, "o"));
  CHECK_THROWS_AS(check_distribution({{0.3, 0.6}}, 2, "o"), ProtocolError);
  CHECK_THROWS_AS(check_distribution({{1.2, -0.2}}, 2, "o"), ProtocolError);
  CHECK_THROWS_AS(check_distribution({{1.0}}, 2, "o"), ProtocolError);
  try {
    check_distribution({{0.3, 0.6}}, 2, "column_lm");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("column_lm") != std::string::npos);
  }
}

TEST_CASE("table handle round trip") {
  auto req = tables_request();
  const auto prompt = build_prompt(req);
  TableOracle t;
  t.set_probs("table_lm", prompt, {0.2, 0.2, 0.6});
  CHECK(t.predict(req, prompt).probs == std::vector<double>{0.2, 0.2, 0.6});
  CHECK_THROWS_AS(t.set_probs("table_lm", prompt, {0.5, 0.6}), ProtocolError);
  CHECK_THROWS_AS(t.predict(req, "other"), OracleError);

  TableOracle uniform(TableOracle::Fallback::uniform);
  CHECK(uniform.predict(req, "other").probs == std::vector<double>(3, 1.0 / 3));

  auto file = temp_file("table.jsonl");
  t.save(file);
  auto loaded = TableOracle::load(file, TableOracle::Fallback::error);
  CHECK(loaded->size() == 1);
  CHECK(loaded->predict(req, prompt) == t.predict(req, prompt));
}

TEST_CASE("replay handle is deterministic and offline") {
  auto req = tables_request();
  const auto prompt = build_prompt(req);
  auto file = temp_file("replay.jsonl");
  {
    std::ofstream out(file);
    out << json{{"oracle_id", "table_lm"}, {"prompt", prompt}, {"scores", {0.1, -2.0, 3.5}}}.dump() << "\n\n";
  }
  auto a = ReplayOracle::load(file);
  auto b = ReplayOracle::load(file);
  auto da = a->predict(req, prompt);
  CHECK(da == b->predict(req, prompt));
  std::vector<double> scores{0.1, -2.0, 3.5};
  CHECK(da.probs == softmax(scores));
  CHECK_THROWS_AS(a->predict(req, prompt + "x"), OracleError);

  auto bad = temp_file("bad.jsonl");
  {
    std::ofstream out(bad);
    out << "{\"oracle_id\": \"x\"}\n";
  }
  CHECK_THROWS_AS(ReplayOracle::load(bad), OracleError);
}

TEST_CASE("remote handle speaks the wire protocol") {
  TestServer server;
  std::vector<json> predict_bodies, train_bodies;
  std::mutex mu;
  server.svr.Post("/predict", [&](const httplib::Request& rq, httplib::Response& rs) {
    auto body = json::parse(rq.body);
    {
      std::lock_guard lock(mu);
      predict_bodies.push_back(body);
    }
    const auto id = body.at("oracle_id").get<std::string>();
    const std::size_t n = body.at("n").get<std::size_t>();
    json reply;
    if (id == "probs_ok") {
      reply = {{"probs", std::vector<double>(n, 1.0 / n)}};
    } else if (id == "short_mass") {
      reply = {{"probs", {0.3, 0.3, 0.3}}};
    } else if (id == "garbage") {
      rs.set_content("not json", "application/json");
      return;
    } else if (id == "bad_request") {
      rs.status = 400;
      rs.set_content("{\"error\": \"unknown oracle\"}", "application/json");
      return;
    } else {
      reply = {{"scores", {std::log(0.2), std::log(0.2), std::log(0.6)}}};
    }
    rs.set_content(reply.dump(), "application/json");
  });
  server.svr.Post("/train", [&](const httplib::Request& rq, httplib::Response& rs) {
    std::lock_guard lock(mu);
    train_bodies.push_back(json::parse(rq.body));
    rs.set_content("{\"loss\": 0.125}", "application/json");
  });
  server.svr.Get("/health", [](const httplib::Request&, httplib::Response& rs) {
    rs.set_content("{\"status\": \"ok\", \"n_max\": 10}", "application/json");
  });
  server.start();

  auto record = temp_file("recorded.jsonl");
  auto cfg = fast(server.url());
  cfg.record_to = record;
  RemoteOracle remote(cfg);
  auto req = tables_request();
  const auto prompt = build_prompt(req);

  auto d = remote.predict(req, prompt);
  CHECK(d.probs[2] == doctest::Approx(0.6).epsilon(1e-12));
  REQUIRE(predict_bodies.size() == 1);
  CHECK(predict_bodies[0] == json{{"oracle_id", "table_lm"}, {"prompt", prompt}, {"n", 3}});

  // the recording replays to the same distribution
  auto replay = ReplayOracle::load(record);
  CHECK(replay->predict(req, prompt) == d);

  auto r2 = req;
  r2.oracle_id = "probs_ok";
  CHECK(remote.predict(r2, build_prompt(r2)).probs == std::vector<double>(3, 1.0 / 3));

  r2.oracle_id = "short_mass";
  try {
    remote.predict(r2, build_prompt(r2));
    FAIL("mass 0.9 accepted");
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("short_mass") != std::string::npos);
  }
  r2.oracle_id = "garbage";
  CHECK_THROWS_AS(remote.predict(r2, build_prompt(r2)), ProtocolError);
  r2.oracle_id = "bad_request";
  CHECK_THROWS_AS(remote.predict(r2, build_prompt(r2)), ProtocolError);

  std::vector<TrainItem> items{{prompt, 3}, {"p2", 1}};
  auto loss = remote.train("table_lm", items);
  REQUIRE(loss);
  CHECK(*loss == 0.125);
  REQUIRE(train_bodies.size() == 1);
  CHECK(train_bodies[0] == json{{"oracle_id", "table_lm"},
                                {"items", {{{"prompt", prompt}, {"target_index", 3}}, {{"prompt", "p2"}, {"target_index", 1}}}}});

  CHECK(json::parse(remote.health()).at("status") == "ok");
}

TEST_CASE("remote handle retries transient failures") {
  TestServer server;
  std::atomic<int> hits{0};
  server.svr.Post("/predict", [&](const httplib::Request&, httplib::Response& rs) {
    if (++hits < 3) {
      rs.status = 503;
      return;
    }
    rs.set_content("{\"scores\": [0, 0, 0]}", "application/json");
  });
  server.start();
  auto req = tables_request();

  auto cfg = fast(server.url());
  cfg.attempts = 3;
  RemoteOracle patient(cfg);
  CHECK(patient.predict(req, build_prompt(req)).probs.size() == 3);
  CHECK(hits == 3);

  hits = 0;
  cfg.attempts = 2;
  RemoteOracle hasty(cfg);
  try {
    hasty.predict(req, build_prompt(req));
    FAIL("two 503s accepted");
  } catch (const ProtocolError&) {
    FAIL("transport failure reported as a protocol error");
  } catch (const OracleError& e) {
    CHECK(std::string(e.what()).find("2 attempts") != std::string::npos);
  }
}

TEST_CASE("unreachable endpoint is a hard error after retries") {
  // serve on a free port, then shut it down
  int port;
  {
    TestServer tmp;
    tmp.start();
    port = tmp.port;
  }
  auto cfg = fast("http://127.0.0.1:" + std::to_string(port));
  cfg.attempts = 2;
  RemoteOracle remote(cfg);
  auto req = tables_request();
  CHECK_THROWS_AS(remote.predict(req, build_prompt(req)), OracleError);
  CHECK_THROWS_AS(remote.health(), OracleError);
}

TEST_CASE("session caching is transparent") {
  auto handle = std::make_shared<Counting>();
  OracleRegistry reg;
  reg.set_fallback(handle);
  auto req = tables_request();
  auto other = req;
  other.domain = {"Dogs"};

  OracleSession cached(reg, true), uncached(reg, false);
  auto a1 = cached.query(req);
  auto a2 = cached.query(req);
  cached.query(other);
  CHECK(cached.remote_calls() == 2);
  auto b1 = uncached.query(req);
  auto b2 = uncached.query(req);
  CHECK(uncached.remote_calls() == 2);
  CHECK(a1 == a2);
  CHECK(a1 == b1);
  CHECK(b1 == b2);

  // concurrent identical requests
  OracleSession shared(reg, true);
  std::vector<std::thread> threads;
  std::vector<OracleDistribution> out(8);
  for (int i = 0; i < 8; ++i) threads.emplace_back([&, i] { out[i] = shared.query(req); });
  for (auto& t : threads) t.join();
  for (const auto& d : out) CHECK(d == a1);
}

TEST_CASE("session routes ids and rejects broken handles") {
  struct Broken : OracleHandle {
    OracleDistribution predict(const OracleRequest&, const std::string&) override { return {{0.5, 0.4, 0.0}}; }
  };
  OracleRegistry reg;
  reg.add("table_lm", std::make_shared<Broken>());
  OracleSession s(reg);
  CHECK_THROWS_AS(s.query(tables_request()), ProtocolError);
  auto other = tables_request();
  other.oracle_id = "nobody";
  CHECK_THROWS_AS(s.query(other), OracleError);
  auto empty = tables_request();
  empty.domain.clear();
  CHECK_THROWS_AS(s.query(empty), OracleError);
}

TEST_CASE("registry from command-line specs") {
  auto req = tables_request();
  const auto prompt = build_prompt(req);
  auto file = temp_file("specs_table.jsonl");
  {
    TableOracle t;
    t.set_probs("table_lm", prompt, {0.2, 0.2, 0.6});
    t.save(file);
  }
  std::vector<std::string> specs{"uniform:", "table_lm=table:" + file.string()};
  auto reg = registry_from_specs(specs);
  OracleSession session(reg);
  CHECK(session.query(req).probs == std::vector<double>{0.2, 0.2, 0.6});
  req.oracle_id = "column_lm";
  CHECK(session.query(req).probs == std::vector<double>(3, 1.0 / 3));

  // '=' after the kind belongs to the argument
  std::vector<std::string> remote{"remote:http://127.0.0.1:1/?a=b"};
  CHECK_NOTHROW(registry_from_specs(remote));
  std::vector<std::string> bad_kind{"nope:x"};
  CHECK_THROWS_AS(registry_from_specs(bad_kind), OracleError);
  std::vector<std::string> no_kind{"table"};
  CHECK_THROWS_AS(registry_from_specs(no_kind), OracleError);
  std::vector<std::string> missing{"table:/does/not/exist.jsonl"};
  CHECK_THROWS_AS(registry_from_specs(missing), OracleError);
}
