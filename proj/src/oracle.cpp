#include "sdcg/oracle.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdcg/probability.hpp"

namespace sdcg {

using nlohmann::json;

std::string build_prompt(const OracleRequest& req) {
  std::string out = req.nl;
  out += ' ';
  if (!req.state.empty()) out += req.state + ", ";
  for (std::size_t i = 0; i < req.domain.size(); ++i) {
    out += "Answer " + std::to_string(i + 1) + " for " + req.domain[i];
    out += ", ";
  }
  out += req.prompt;
  out += ' ';
  return out;
}

OracleKey key_of(const OracleRequest& req) { return {req.oracle_id, build_prompt(req)}; }

OracleDistribution normalize_distribution(std::span<const double> raw, std::size_t n) {
  if (n == 0) throw OracleError("empty oracle domain: nothing to normalize");
  if (raw.size() != n)
    throw ProtocolError("expected " + std::to_string(n) + " scores, got " + std::to_string(raw.size()));
  for (double r : raw)
    if (!std::isfinite(r)) throw ProtocolError("non-finite oracle score");
  return OracleDistribution{softmax(raw)};
}

void check_distribution(const OracleDistribution& d, std::size_t n, const std::string& oracle_id) {
  if (d.probs.size() != n)
    throw ProtocolError("oracle '" + oracle_id + "' returned " + std::to_string(d.probs.size()) +
                        " probabilities for a domain of " + std::to_string(n));
  double sum = 0.0;
  for (double p : d.probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw ProtocolError("oracle '" + oracle_id + "' returned a probability outside [0, 1]");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw ProtocolError("oracle '" + oracle_id + "' returned a distribution summing to " + std::to_string(sum));
}

std::optional<double> OracleHandle::train(const std::string&, std::span<const TrainItem>) { return std::nullopt; }

// ---------------------------------------------------------------------------

void TableOracle::set_probs(const std::string& oracle_id, const std::string& prompt, std::vector<double> probs) {
  check_distribution(OracleDistribution{probs}, probs.size(), oracle_id);
  std::lock_guard lock(mu_);
  entries_[{oracle_id, prompt}] = std::move(probs);
}

void TableOracle::set_scores(const std::string& oracle_id, const std::string& prompt, std::span<const double> scores) {
  set_probs(oracle_id, prompt, normalize_distribution(scores, scores.size()).probs);
}

std::size_t TableOracle::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

namespace {

template <typename F>
void for_each_json_line(const std::filesystem::path& file, F&& f) {
  std::ifstream in(file);
  if (!in) throw OracleError("cannot open oracle file " + file.string());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw OracleError(file.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

std::shared_ptr<TableOracle> TableOracle::load(const std::filesystem::path& file, Fallback fallback) {
  auto table = std::make_shared<TableOracle>(fallback);
  for_each_json_line(file, [&](const json& j) {
    auto id = j.at("oracle_id").get<std::string>();
    auto prompt = j.at("prompt").get<std::string>();
    if (j.contains("probs")) {
      table->set_probs(id, prompt, j.at("probs").get<std::vector<double>>());
    } else {
      auto scores = j.at("scores").get<std::vector<double>>();
      table->set_scores(id, prompt, scores);
    }
  });
  return table;
}

void TableOracle::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw OracleError("cannot write oracle table " + file.string());
  std::lock_guard lock(mu_);
  for (const auto& [key, probs] : entries_)
    out << json{{"oracle_id", key.oracle_id}, {"prompt", key.prompt}, {"probs", probs}}.dump() << '\n';
}

OracleDistribution TableOracle::predict(const OracleRequest& req, const std::string& prompt) {
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find({req.oracle_id, prompt});
    if (it != entries_.end()) return OracleDistribution{it->second};
  }
  if (fallback_ == Fallback::uniform && !req.domain.empty())
    return OracleDistribution{std::vector<double>(req.domain.size(), 1.0 / static_cast<double>(req.domain.size()))};
  throw OracleError("oracle table has no entry for '" + req.oracle_id + "' prompt: " + prompt);
}

// ---------------------------------------------------------------------------

std::shared_ptr<ReplayOracle> ReplayOracle::load(const std::filesystem::path& file) {
  auto replay = std::make_shared<ReplayOracle>();
  for_each_json_line(file, [&](const json& j) {
    replay->add(j.at("oracle_id").get<std::string>(), j.at("prompt").get<std::string>(),
                j.at("scores").get<std::vector<double>>());
  });
  return replay;
}

void ReplayOracle::add(const std::string& oracle_id, const std::string& prompt, std::vector<double> scores) {
  scores_[{oracle_id, prompt}] = std::move(scores);
}

OracleDistribution ReplayOracle::predict(const OracleRequest& req, const std::string& prompt) {
  auto it = scores_.find({req.oracle_id, prompt});
  if (it == scores_.end()) throw OracleError("replay has no recording for '" + req.oracle_id + "' prompt: " + prompt);
  return normalize_distribution(it->second, req.domain.size());
}

// ---------------------------------------------------------------------------

void OracleRegistry::add(const std::string& oracle_id, std::shared_ptr<OracleHandle> handle) {
  handles_[oracle_id] = std::move(handle);
}

void OracleRegistry::set_fallback(std::shared_ptr<OracleHandle> handle) { fallback_ = std::move(handle); }

OracleHandle& OracleRegistry::handle_for(const std::string& oracle_id) const {
  auto it = handles_.find(oracle_id);
  if (it != handles_.end()) return *it->second;
  if (fallback_) return *fallback_;
  throw OracleError("no oracle handle configured for '" + oracle_id + "'");
}

OracleDistribution OracleSession::query(const OracleRequest& req) {
  if (req.domain.empty()) throw OracleError("oracle '" + req.oracle_id + "' asked about an empty domain");
  OracleKey key = key_of(req);
  if (caching_) {
    std::lock_guard lock(mu_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  OracleDistribution d = registry_.handle_for(req.oracle_id).predict(req, key.prompt);
  check_distribution(d, req.domain.size(), req.oracle_id);
  std::lock_guard lock(mu_);
  ++calls_;
  if (caching_) cache_.emplace(std::move(key), d);
  return d;
}

std::size_t OracleSession::remote_calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

}  // namespace sdcg
