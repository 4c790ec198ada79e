#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "sdcg/oracle.hpp"

namespace sdcg {

using nlohmann::json;

RemoteOracle::RemoteOracle(RemoteConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.attempts < 1) cfg_.attempts = 1;
  if (cfg_.record_to) {
    record_.open(*cfg_.record_to, std::ios::app);
    if (!record_) throw OracleError("cannot open replay file " + cfg_.record_to->string());
  }
}

RemoteOracle::~RemoteOracle() = default;

std::string RemoteOracle::post(const std::string& path, const std::string& body) {
  std::string last_error;
  for (int attempt = 0; attempt < cfg_.attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.backoff * attempt);
    httplib::Client cli(cfg_.base_url);
    cli.set_connection_timeout(cfg_.timeout);
    cli.set_read_timeout(cfg_.timeout);
    auto res = cli.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw ProtocolError(cfg_.base_url + path + " answered HTTP " + std::to_string(res->status) + ": " + res->body);
    return res->body;
  }
  throw OracleError(cfg_.base_url + path + " failed after " + std::to_string(cfg_.attempts) +
                    " attempts: " + last_error);
}

OracleDistribution RemoteOracle::predict(const OracleRequest& req, const std::string& prompt) {
  const std::size_t n = req.domain.size();
  json body{{"oracle_id", req.oracle_id}, {"prompt", prompt}, {"n", n}};
  json reply;
  try {
    reply = json::parse(post("/predict", body.dump()));
  } catch (const json::exception& e) {
    throw ProtocolError("oracle '" + req.oracle_id + "' sent malformed JSON: " + e.what());
  }
  try {
    if (reply.contains("scores")) {
      auto scores = reply.at("scores").get<std::vector<double>>();
      OracleDistribution d = normalize_distribution(scores, n);
      if (record_.is_open()) {
        std::lock_guard lock(record_mu_);
        record_ << json{{"oracle_id", req.oracle_id}, {"prompt", prompt}, {"scores", scores}}.dump() << '\n';
        record_.flush();
      }
      return d;
    }
    if (reply.contains("probs")) {
      OracleDistribution d{reply.at("probs").get<std::vector<double>>()};
      check_distribution(d, n, req.oracle_id);
      return d;
    }
  } catch (const json::exception& e) {
    throw ProtocolError("oracle '" + req.oracle_id + "' sent a malformed reply: " + e.what());
  }
  throw ProtocolError("oracle '" + req.oracle_id + "' reply has neither scores nor probs");
}

std::optional<double> RemoteOracle::train(const std::string& oracle_id, std::span<const TrainItem> items) {
  json arr = json::array();
  for (const auto& it : items) arr.push_back({{"prompt", it.prompt}, {"target_index", it.target_index}});
  json body{{"oracle_id", oracle_id}, {"items", arr}};
  try {
    return json::parse(post("/train", body.dump())).at("loss").get<double>();
  } catch (const json::exception& e) {
    throw ProtocolError("oracle '" + oracle_id + "' sent a malformed train reply: " + e.what());
  }
}

std::string RemoteOracle::health() {
  httplib::Client cli(cfg_.base_url);
  cli.set_connection_timeout(cfg_.timeout);
  auto res = cli.Get("/health");
  if (!res) throw OracleError(cfg_.base_url + "/health: " + httplib::to_string(res.error()));
  if (res->status != 200) throw ProtocolError(cfg_.base_url + "/health answered HTTP " + std::to_string(res->status));
  return res->body;
}

}  // namespace sdcg
