#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sdcg/sql.hpp"

namespace sdcg::sql {

using nlohmann::json;

namespace {

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

// one global map per direction; every identifier must translate the same way everywhere
void check_names(const Schema& s) {
  std::map<std::string, std::string> to_sem, to_orig;
  auto add = [&](const std::string& orig, const std::string& sem, const std::string& where) {
    if (sem.empty()) throw SchemaError(where + " has an empty semantic name");
    if (is_keyword(upper(sem)) || sem == kValueSlot)
      throw SchemaError(where + ": semantic name '" + sem + "' collides with an SQL keyword");
    auto [a, fresh_a] = to_sem.emplace(orig, sem);
    if (!fresh_a && a->second != sem)
      throw SchemaError("identifier '" + orig + "' has two semantic names: '" + a->second + "' and '" + sem + "'");
    auto [b, fresh_b] = to_orig.emplace(sem, orig);
    if (!fresh_b && b->second != orig)
      throw SchemaError("ambiguous semantic name '" + sem + "' is shared by '" + b->second + "' and '" + orig + "'");
  };
  for (const auto& t : s.tables) {
    add(t.name, t.semantic_name, "table " + t.name);
    for (const auto& c : t.columns) add(c.name, c.semantic_name, "column " + t.name + "." + c.name);
  }
}

}  // namespace

void validate_schema(const Schema& s) {
  if (s.db_name.empty()) throw SchemaError("schema has no database name");
  if (s.tables.empty()) throw SchemaError("schema " + s.db_name + " has no tables");
  std::set<std::string> tables;
  for (const auto& t : s.tables) {
    if (t.name.empty()) throw SchemaError("schema " + s.db_name + " has a table without a name");
    if (!tables.insert(t.name).second) throw SchemaError("duplicate table name '" + t.name + "'");
    if (t.columns.empty()) throw SchemaError("table '" + t.name + "' has no columns");
    std::set<std::string> cols;
    for (const auto& c : t.columns) {
      if (c.name.empty()) throw SchemaError("table '" + t.name + "' has a column without a name");
      if (!cols.insert(c.name).second)
        throw SchemaError("duplicate column name '" + c.name + "' in table '" + t.name + "'");
    }
  }
  auto has_column = [&s](const std::string& table, const std::string& column) {
    const Table* t = s.find_table(table);
    if (!t) return false;
    for (const auto& c : t->columns)
      if (c.name == column) return true;
    return false;
  };
  for (const auto& fk : s.foreign_keys) {
    if (!has_column(fk.table, fk.column))
      throw SchemaError("dangling foreign key: " + fk.table + "." + fk.column + " does not exist");
    if (!has_column(fk.ref_table, fk.ref_column))
      throw SchemaError("dangling foreign key: " + fk.table + "." + fk.column + " references missing " +
                        fk.ref_table + "." + fk.ref_column);
  }
  check_names(s);
}

Schema load_schema(const std::string& json_text) {
  Schema s;
  try {
    const json j = json::parse(json_text);
    s.db_name = j.at("db").get<std::string>();
    for (const auto& jt : j.at("tables")) {
      Table t;
      t.name = jt.at("name").get<std::string>();
      t.semantic_name = jt.value("semantic_name", t.name);
      for (const auto& jc : jt.at("columns")) {
        Column c;
        if (jc.is_string()) {
          c.name = jc.get<std::string>();
          c.semantic_name = c.name;
        } else {
          c.name = jc.at("name").get<std::string>();
          c.semantic_name = jc.value("semantic_name", c.name);
        }
        t.columns.push_back(std::move(c));
      }
      s.tables.push_back(std::move(t));
    }
    if (j.contains("foreign_keys"))
      for (const auto& jf : j.at("foreign_keys"))
        s.foreign_keys.push_back({jf.at("table").get<std::string>(), jf.at("column").get<std::string>(),
                                  jf.at("ref_table").get<std::string>(), jf.at("ref_column").get<std::string>()});
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed schema file: ") + e.what());
  }
  validate_schema(s);
  return s;
}

Schema load_schema_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw SchemaError("cannot open schema file " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return load_schema(buf.str());
}

std::string schema_to_json(const Schema& s) {
  json tables = json::array();
  for (const auto& t : s.tables) {
    json cols = json::array();
    for (const auto& c : t.columns) cols.push_back({{"name", c.name}, {"semantic_name", c.semantic_name}});
    tables.push_back({{"name", t.name}, {"semantic_name", t.semantic_name}, {"columns", cols}});
  }
  json fks = json::array();
  for (const auto& fk : s.foreign_keys)
    fks.push_back({{"table", fk.table}, {"column", fk.column}, {"ref_table", fk.ref_table}, {"ref_column", fk.ref_column}});
  return json{{"db", s.db_name}, {"tables", tables}, {"foreign_keys", fks}}.dump(2);
}

Schema import_spider(const std::string& json_text, const std::string& db_id) {
  Schema s;
  try {
    const json all = json::parse(json_text);
    const json* db = nullptr;
    for (const auto& d : all)
      if (d.at("db_id").get<std::string>() == db_id) db = &d;
    if (!db) throw SchemaError("database '" + db_id + "' is not in the Spider tables file");
    s.db_name = db_id;
    const auto& tnames = db->at("table_names_original");
    const auto& tsem = db->at("table_names");
    for (std::size_t i = 0; i < tnames.size(); ++i)
      s.tables.push_back({tnames[i].get<std::string>(), tsem.at(i).get<std::string>(), {}});
    const auto& cnames = db->at("column_names_original");
    const auto& csem = db->at("column_names");
    // column 0 is the [-1, "*"] placeholder
    std::vector<std::pair<int, std::string>> col_index(cnames.size(), {-1, ""});
    for (std::size_t i = 0; i < cnames.size(); ++i) {
      const int table = cnames[i].at(0).get<int>();
      if (table < 0) continue;
      if (static_cast<std::size_t>(table) >= s.tables.size())
        throw SchemaError("column " + std::to_string(i) + " refers to a missing table");
      const auto name = cnames[i].at(1).get<std::string>();
      s.tables[table].columns.push_back({name, csem.at(i).at(1).get<std::string>()});
      col_index[i] = {table, name};
    }
    for (const auto& fk : db->at("foreign_keys")) {
      const auto a = fk.at(0).get<std::size_t>(), b = fk.at(1).get<std::size_t>();
      if (a >= col_index.size() || b >= col_index.size() || col_index[a].first < 0 || col_index[b].first < 0)
        throw SchemaError("foreign key refers to a missing column");
      s.foreign_keys.push_back({s.tables[col_index[a].first].name, col_index[a].second,
                                s.tables[col_index[b].first].name, col_index[b].second});
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed Spider tables file: ") + e.what());
  }
  validate_schema(s);
  return s;
}

Schema random_schema(std::mt19937_64& rng, const RandomSchemaOptions& opts, const std::string& db_name) {
  static const char* nouns[] = {"orders", "clients", "items",  "stores",  "staff", "visits",
                                "routes", "cities",  "events", "vendors", "rooms", "courses"};
  static const char* attrs[] = {"id",    "name", "price", "code",   "rank",  "level", "status", "amount",
                                "email", "city", "score", "weight", "stock", "year",  "label",  "size"};
  auto pick = [&rng](std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng); };

  Schema s;
  s.db_name = db_name.empty() ? "random_" + std::to_string(pick(0, 999999)) : db_name;
  const std::size_t n = pick(opts.min_tables, opts.max_tables);
  std::vector<std::size_t> order(std::size(nouns));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t t = 0; t < n; ++t) {
    Table table;
    const std::string noun = nouns[order[t % order.size()]] + (t >= order.size() ? std::to_string(t) : "");
    table.name = noun;
    table.semantic_name = noun;
    const std::size_t m = pick(opts.min_columns, opts.max_columns);
    for (std::size_t c = 0; c < m; ++c) {
      // prefix t<k>_ keeps column names disjoint across tables
      const std::string attr = attrs[pick(0, std::size(attrs) - 1)];
      std::string name = "t" + std::to_string(t) + "_" + attr + std::to_string(c);
      table.columns.push_back({name, "t" + std::to_string(t) + " " + attr + " " + std::to_string(c)});
    }
    s.tables.push_back(std::move(table));
  }
  const std::size_t fks = n > 1 ? pick(0, opts.max_foreign_keys) : 0;
  for (std::size_t k = 0; k < fks; ++k) {
    const std::size_t a = pick(0, n - 1);
    std::size_t b = pick(0, n - 2);
    if (b >= a) ++b;
    const auto& ta = s.tables[a];
    const auto& tb = s.tables[b];
    s.foreign_keys.push_back(
        {ta.name, ta.columns[pick(0, ta.columns.size() - 1)].name, tb.name, tb.columns[pick(0, tb.columns.size() - 1)].name});
  }
  validate_schema(s);
  return s;
}

}  // namespace sdcg::sql
