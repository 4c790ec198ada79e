#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "sdcg/circuit.hpp"
#include "sdcg/sql.hpp"
#include "sdcg/sqlite.hpp"
#include "sdcg/trainer.hpp"

using namespace sdcg;
using nlohmann::json;

namespace {

struct Common {
  std::vector<std::string> schema_files;
  std::string db_id;
  std::string scope = "task1";
  bool ablation = false;
  std::vector<std::string> oracles;
  std::string record;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream b;
  b << in.rdbuf();
  return b.str();
}

// a Spider tables.json is a top-level array; pick the database with --db-id
std::vector<Schema> load_schemas(const Common& c) {
  std::vector<Schema> out;
  for (const auto& f : c.schema_files) {
    const auto text = slurp(f);
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '[') {
      if (c.db_id.empty()) throw std::runtime_error(f + " is a Spider tables file; pass --db-id");
      out.push_back(sql::import_spider(text, c.db_id));
    } else {
      out.push_back(sql::load_schema(text));
    }
  }
  if (out.empty()) throw std::runtime_error("no schema given (--schema)");
  return out;
}

Grammar grammar_for(const Schema& s, const Common& c) {
  const auto scope = sql::parse_scope(c.scope);
  return c.ablation ? sql::build_cfg_ablation_grammar(s, scope) : sql::build_dcg_grammar(s, scope);
}

OracleRegistry make_registry(const Common& c) { return registry_from_specs(c.oracles, c.record); }

void add_common(CLI::App* app, Common& c, bool with_oracle) {
  app->add_option("--schema", c.schema_files, "schema JSON, or a Spider tables.json with --db-id")->required();
  app->add_option("--db-id", c.db_id, "database inside a Spider tables file");
  app->add_option("--grammar-scope", c.scope, "basic | task1 | task2")->capture_default_str();
  app->add_flag("--ablation", c.ablation, "use the context-free ablation grammar");
  if (with_oracle) {
    app->add_option("--oracle", c.oracles,
                    "[id=]table:<file> | table-or-uniform:<file> | replay:<file> | remote:<url> | uniform:");
    app->add_option("--record", c.record, "append remote replies to this replay file");
  }
}

struct Dataset {
  std::vector<json> rows;
};

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset " + path);
  Dataset d;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      d.rows.push_back(json::parse(line));
      for (const char* k : {"nl", "db", "sql"})
        if (!d.rows.back().contains(k)) throw std::runtime_error(std::string("missing field '") + k + "'");
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return d;
}

int run_gen(const Common& c, const std::string& nl, const std::vector<std::string>& values, const std::string& mode,
            double budget) {
  const auto s = load_schemas(c).front();
  const Grammar g = grammar_for(s, c);
  const OracleRegistry reg = make_registry(c);
  OracleSession session(reg);
  sql::GenerateOptions opts;
  opts.mode = mode == "greedy" ? sql::Mode::greedy : sql::Mode::exact;
  opts.gold_values = values;
  opts.exact_budget = budget;
  const auto r = sql::generate(nl, s, g, &session, opts);
  std::cout << json{{"sql", r.sql}, {"probability", r.probability}, {"mode", mode}, {"oracle_calls", session.remote_calls()}}
                   .dump()
            << '\n';
  return 0;
}

int run_score(const Common& c, const std::string& nl, const std::string& query) {
  const auto s = load_schemas(c).front();
  const Grammar g = grammar_for(s, c);
  const OracleRegistry reg = make_registry(c);
  OracleSession session(reg);
  const double p = sql::score(nl, s, g, query, &session);
  std::cout << json{{"sql", sql::canonicalize(query)}, {"probability", p}}.dump() << '\n';
  return 0;
}

int run_enumerate(const Common& c, const std::string& nl, const std::vector<std::string>& values, std::size_t limit,
                  const std::string& db) {
  const auto s = load_schemas(c).front();
  const Grammar g = grammar_for(s, c);
  const auto r = enumerate_derivations(Goal{sql::query_atom(nl, s), std::nullopt}, g, limit);
  std::size_t failures = 0;
  for (const auto& d : r.derivations) {
    const auto q = sql::render_sql(d.tokens, s, values);
    if (db.empty()) {
      std::cout << q << '\n';
      continue;
    }
    const auto ex = sql::check_executable(q, db);
    failures += !ex.ok;
    std::cout << (ex.ok ? "ok    " : "FAIL  ") << q << (ex.ok ? "" : "  -- " + ex.detail) << '\n';
  }
  if (r.truncated) std::cerr << "stopped after " << limit << " queries (--limit)\n";
  return failures ? 1 : 0;
}

int run_validate(const std::string& db, const std::string& sql_file, const std::vector<std::string>& schema_files,
                 const std::string& db_id, bool create) {
  if (create) {
    Common c;
    c.schema_files = schema_files;
    c.db_id = db_id;
    sql::instantiate_database(load_schemas(c).front(), db);
  }
  std::ifstream in(sql_file);
  if (!in) throw std::runtime_error("cannot open " + sql_file);
  std::string line;
  std::size_t total = 0, failures = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++total;
    const auto r = sql::check_executable(line, db);
    failures += !r.ok;
    std::cout << (r.ok ? "ok    " : "FAIL  ") << line << (r.ok ? "" : "  -- " + r.detail) << '\n';
  }
  std::cout << total - failures << "/" << total << " executable\n";
  return failures ? 1 : 0;
}

int run_facts(const Common& c) {
  for (const auto& s : load_schemas(c)) {
    for (const auto& f : schema_to_facts(s)) std::cout << f.atom.to_string() << ".\n";
    for (const auto& f : domain_facts(s)) std::cout << f.atom.to_string() << ".\n";
  }
  return 0;
}

struct TrainArgs {
  std::string dataset;
  std::size_t epochs = 200;
  double lr = 0.05;
  std::uint64_t seed = 0;
  std::size_t batch = 0;
  std::string out;
  std::string trace;
  bool closed_form = false;
  bool remote = false;
};

// Oracle rules become learnable groups, trained per database, and the learned
// distributions are written out as an oracle table. With --remote-train the
// observed choices go to the oracle service instead.
int run_train(const Common& c, const TrainArgs& a) {
  const auto schemas = load_schemas(c);
  std::map<std::string, const Schema*> by_db;
  for (const auto& s : schemas) by_db[s.db_name] = &s;
  const auto data = read_dataset(a.dataset);

  std::map<std::string, std::vector<TrainingExample>> per_db;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    const auto& row = data.rows[i];
    const auto db = row.at("db").get<std::string>();
    auto it = by_db.find(db);
    if (it == by_db.end()) throw std::runtime_error("example " + std::to_string(i + 1) + ": no schema for db '" + db + "'");
    auto goal = sql::known_goal(row.at("nl").get<std::string>(), *it->second, row.at("sql").get<std::string>());
    if (!goal) {
      std::cerr << "skipping example " << i + 1 << ": query does not map onto the schema\n";
      continue;
    }
    per_db[db].push_back({std::move(*goal), 1.0, std::to_string(i + 1)});
  }

  if (a.remote) {
    const OracleRegistry reg = make_registry(c);
    for (const auto& [db, examples] : per_db) {
      const auto losses = train_oracles(supervised_items(examples, grammar_for(*by_db[db], c)), reg);
      for (const auto& [id, loss] : losses) std::cout << json{{"db", db}, {"oracle_id", id}, {"loss", loss}}.dump() << '\n';
    }
    return 0;
  }

  std::ofstream trace;
  if (!a.trace.empty()) trace.open(a.trace);
  TableOracle table;
  for (const auto& [db, examples] : per_db) {
    Grammar g = to_learnable(grammar_for(*by_db[db], c));
    json report{{"db", db}, {"examples", examples.size()}};
    if (a.closed_form) {
      const auto r = fit_closed_form(examples, g);
      report["mean_nll"] = r.mean_nll;
      report["quarantined"] = r.quarantined;
    } else {
      OptimizerConfig cfg;
      cfg.learning_rate = a.lr;
      cfg.epochs = a.epochs;
      cfg.seed = a.seed;
      cfg.batch_size = a.batch;
      FitOptions fo;
      if (trace.is_open()) fo.trace_out = &trace;
      const auto r = fit(examples, g, cfg, fo);
      report["mean_nll"] = r.trace.empty() ? 0.0 : r.trace.back().mean_loss;
      report["steps"] = r.steps;
      report["quarantined"] = r.quarantined;
    }
    export_learned_table(g, table);
    std::cout << report.dump() << '\n';
  }
  if (!a.out.empty()) table.save(a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sdcg: schema-constrained SQL generation with grammar-weighted language model oracles"};
  app.require_subcommand(1);

  Common c;
  std::string nl, mode = "exact", query, dataset, db, sql_file;
  std::vector<std::string> values;
  double budget = 1e6;
  std::size_t limit = 1000;
  bool create = false;
  TrainArgs ta;

  auto* gen = app.add_subcommand("gen", "generate the most probable query");
  add_common(gen, c, true);
  gen->add_option("--nl", nl, "question")->required();
  gen->add_option("--values", values, "gold condition values, in slot order");
  gen->add_option("--mode", mode, "exact | greedy")->check(CLI::IsMember({"exact", "greedy"}))->capture_default_str();
  gen->add_option("--budget", budget, "derivation budget for exact mode")->capture_default_str();

  auto* sc = app.add_subcommand("score", "probability of a query under the grammar");
  add_common(sc, c, true);
  sc->add_option("--nl", nl, "question")->required();
  sc->add_option("--sql", query, "query to score")->required();

  auto* tr = app.add_subcommand("train", "fit the oracle distributions on a dataset");
  add_common(tr, c, true);
  tr->add_option("--dataset", ta.dataset, "JSON lines {nl, db, sql, values}")->required();
  tr->add_option("--epochs", ta.epochs)->capture_default_str();
  tr->add_option("--lr", ta.lr)->capture_default_str();
  tr->add_option("--seed", ta.seed)->capture_default_str();
  tr->add_option("--batch", ta.batch, "mini-batch size, 0 for full batch")->capture_default_str();
  tr->add_option("--out", ta.out, "write the learned distributions as an oracle table");
  tr->add_option("--trace", ta.trace, "per-epoch loss as JSON lines");
  tr->add_flag("--closed-form", ta.closed_form, "use branch frequencies instead of gradient steps");
  tr->add_flag("--remote-train", ta.remote, "send observed choices to the oracle handles (/train)");

  auto* va = app.add_subcommand("validate", "execute queries against an SQLite database");
  va->add_option("--db", db, "SQLite database file")->required();
  va->add_option("--sql-file", sql_file, "one query per line")->required();
  va->add_option("--schema", c.schema_files, "schema to instantiate with --create");
  va->add_option("--db-id", c.db_id);
  va->add_flag("--create", create, "build a small database for the schema first");

  auto* en = app.add_subcommand("enumerate", "list derivable queries");
  add_common(en, c, false);
  en->add_option("--nl", nl, "question")->capture_default_str();
  en->add_option("--values", values, "condition values, in slot order");
  en->add_option("--limit", limit)->capture_default_str();
  en->add_option("--db", db, "also execute each query against this database");

  auto* fa = app.add_subcommand("facts", "print the schema facts");
  add_common(fa, c, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*gen) return run_gen(c, nl, values, mode, budget);
    if (*sc) return run_score(c, nl, query);
    if (*tr) return run_train(c, ta);
    if (*va) return run_validate(db, sql_file, c.schema_files, c.db_id, create);
    if (*en) return run_enumerate(c, nl, values, limit, db);
    if (*fa) return run_facts(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
