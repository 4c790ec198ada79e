#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdcg {

// What an oracle is asked: pick one of `domain` given `nl` (and an optional
// parsing state such as "WHERE [column]").
struct OracleRequest {
  std::string oracle_id;
  std::string nl;
  std::string state;
  std::vector<std::string> domain;
  std::string prompt = "the answer should be Answer";
};

// Probabilities aligned with OracleRequest::domain.
struct OracleDistribution {
  std::vector<double> probs;
  friend bool operator==(const OracleDistribution&, const OracleDistribution&) = default;
};

// Cache and gradient key of a request: the oracle id plus the exact model input.
struct OracleKey {
  std::string oracle_id;
  std::string prompt;
  friend bool operator==(const OracleKey&, const OracleKey&) = default;
  friend auto operator<=>(const OracleKey&, const OracleKey&) = default;
};

class OracleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A response that breaks the distribution contract.
class ProtocolError : public OracleError {
  using OracleError::OracleError;
};

// Model input: nl, the optional state, "Answer i for y_i" for every domain
// entry, then the prompt constant and a trailing space.
// 
//   "Find ... dogs. Answer 1 for Dogs, Answer 2 for Professionals,
//    Answer 3 for Treatments, the answer should be Answer "
std::string build_prompt(const OracleRequest& req);

OracleKey key_of(const OracleRequest& req);

// Numerically stable softmax of n raw scores.
OracleDistribution normalize_distribution(std::span<const double> raw, std::size_t n);

// Throws ProtocolError unless `d` has n entries in [0, 1] summing to 1 +- 1e-6.
void check_distribution(const OracleDistribution& d, std::size_t n, const std::string& oracle_id);

struct TrainItem {
  std::string prompt;
  std::size_t target_index = 0;  // 1-based, as in the prompt
};

class OracleHandle {
 public:
  virtual ~OracleHandle() = default;
  virtual OracleDistribution predict(const OracleRequest& req, const std::string& prompt) = 0;
  // Supervised update from observed choices. Returns the loss reported by
  // the handle, or nullopt when the handle cannot learn.
  virtual std::optional<double> train(const std::string& oracle_id, std::span<const TrainItem> items);
};

// In-process lookup table keyed by (oracle_id, prompt).
class TableOracle : public OracleHandle {
 public:
  enum class Fallback { error, uniform };
  explicit TableOracle(Fallback fallback = Fallback::error) : fallback_(fallback) {}

  void set_probs(const std::string& oracle_id, const std::string& prompt, std::vector<double> probs);
  void set_scores(const std::string& oracle_id, const std::string& prompt, std::span<const double> scores);
  std::size_t size() const;

  // Line-delimited JSON: {"oracle_id", "prompt", "probs" | "scores"}.
  static std::shared_ptr<TableOracle> load(const std::filesystem::path& file, Fallback fallback);
  void save(const std::filesystem::path& file) const;

  OracleDistribution predict(const OracleRequest& req, const std::string& prompt) override;

 private:
  Fallback fallback_;
  mutable std::mutex mu_;
  std::map<OracleKey, std::vector<double>> entries_;
};

// Recorded session: line-delimited JSON {"oracle_id", "prompt", "scores"}.
// Unknown requests are an error.
class ReplayOracle : public OracleHandle {
 public:
  static std::shared_ptr<ReplayOracle> load(const std::filesystem::path& file);
  void add(const std::string& oracle_id, const std::string& prompt, std::vector<double> scores);
  OracleDistribution predict(const OracleRequest& req, const std::string& prompt) override;

 private:
  std::map<OracleKey, std::vector<double>> scores_;
};

struct RemoteConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8080
  int attempts = 3;
  std::chrono::milliseconds backoff{100};
  std::chrono::seconds timeout{30};
  std::optional<std::filesystem::path> record_to;  // replay file to append to
};

// HTTP client for the oracle service:
//   POST /predict {oracle_id, prompt, n} -> {scores: [n]} or {probs: [n]}
//   POST /train   {oracle_id, items: [{prompt, target_index}]} -> {loss}
//   GET  /health  -> {status, ...}
class RemoteOracle : public OracleHandle {
 public:
  explicit RemoteOracle(RemoteConfig cfg);
  ~RemoteOracle() override;

  OracleDistribution predict(const OracleRequest& req, const std::string& prompt) override;
  std::optional<double> train(const std::string& oracle_id, std::span<const TrainItem> items) override;
  std::string health();

 private:
  std::string post(const std::string& path, const std::string& body);
  RemoteConfig cfg_;
  std::mutex record_mu_;
  std::ofstream record_;
};

// Routes oracle ids to handles; `fallback` serves ids without a dedicated handle.
class OracleRegistry {
 public:
  void add(const std::string& oracle_id, std::shared_ptr<OracleHandle> handle);
  void set_fallback(std::shared_ptr<OracleHandle> handle);
  OracleHandle& handle_for(const std::string& oracle_id) const;

 private:
  std::map<std::string, std::shared_ptr<OracleHandle>> handles_;
  std::shared_ptr<OracleHandle> fallback_;
};

// Builds a registry from command-line style specs: "[id=]kind:arg" with kind
// table, table-or-uniform, replay, remote or uniform. A spec without "id="
// becomes the fallback. Remote replies are appended to `record` if given.
OracleRegistry registry_from_specs(std::span<const std::string> specs, const std::string& record = "");

// One inference episode's view of the oracles. Identical requests are sent
// once; every returned distribution is checked before it is cached.
class OracleSession {
 public:
  explicit OracleSession(const OracleRegistry& registry, bool caching = true)
      : registry_(registry), caching_(caching) {}

  OracleDistribution query(const OracleRequest& req);
  std::size_t remote_calls() const;

 private:
  const OracleRegistry& registry_;
  bool caching_;
  mutable std::mutex mu_;
  std::map<OracleKey, OracleDistribution> cache_;
  std::size_t calls_ = 0;
};

}  // namespace sdcg
