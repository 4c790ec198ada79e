#include "sdcg/sqlite.hpp"

#include <sqlite3.h>

#include <cctype>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>

namespace sdcg::sql {

namespace {

std::mutex& file_mutex(const std::filesystem::path& p) {
  static std::mutex registry_mu;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::lock_guard lock(registry_mu);
  auto& m = locks[std::filesystem::absolute(p).lexically_normal().string()];
  if (!m) m = std::make_unique<std::mutex>();
  return *m;
}

struct Db {
  sqlite3* h = nullptr;
  ~Db() {
    if (h) sqlite3_close(h);
  }
};

std::string quote_ident(const std::string& s) {
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

void exec(sqlite3* h, const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(h, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown error";
    sqlite3_free(err);
    throw std::runtime_error("sqlite: " + msg + " in: " + sql);
  }
}

}  // namespace

ExecResult check_executable(const std::string& sql, const std::filesystem::path& db_file) {
  std::lock_guard lock(file_mutex(db_file));
  if (!std::filesystem::exists(db_file)) return {false, "database file " + db_file.string() + " does not exist"};
  Db db;
  if (sqlite3_open_v2(db_file.string().c_str(), &db.h, SQLITE_OPEN_READONLY, nullptr) != SQLITE_OK)
    return {false, std::string("cannot open database: ") + sqlite3_errmsg(db.h)};
  sqlite3_stmt* stmt = nullptr;
  const char* tail = nullptr;
  if (sqlite3_prepare_v2(db.h, sql.c_str(), static_cast<int>(sql.size()), &stmt, &tail) != SQLITE_OK)
    return {false, sqlite3_errmsg(db.h)};
  std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> guard(stmt, sqlite3_finalize);
  if (!stmt) return {false, "incomplete query: no statement"};
  for (const char* p = tail; p && *p; ++p)
    if (!std::isspace(static_cast<unsigned char>(*p)) && *p != ';') return {false, "more than one statement"};
  if (!sqlite3_stmt_readonly(stmt)) return {false, "statement would modify the database"};
  int rc;
  while ((rc = sqlite3_step(stmt)) == SQLITE_ROW) {
  }
  if (rc != SQLITE_DONE) return {false, sqlite3_errmsg(db.h)};
  return {true, ""};
}

void instantiate_database(const Schema& s, const std::filesystem::path& db_file, std::size_t rows, std::uint64_t seed) {
  std::lock_guard lock(file_mutex(db_file));
  std::filesystem::remove(db_file);
  Db db;
  if (sqlite3_open_v2(db_file.string().c_str(), &db.h, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE, nullptr) != SQLITE_OK)
    throw std::runtime_error("cannot create database " + db_file.string() + ": " + sqlite3_errmsg(db.h));
  std::mt19937_64 rng(seed);
  exec(db.h, "BEGIN");
  for (const auto& t : s.tables) {
    std::string ddl = "CREATE TABLE " + quote_ident(t.name) + " (";
    for (std::size_t i = 0; i < t.columns.size(); ++i) ddl += (i ? ", " : "") + quote_ident(t.columns[i].name);
    for (const auto& fk : s.foreign_keys)
      if (fk.table == t.name)
        ddl += ", FOREIGN KEY (" + quote_ident(fk.column) + ") REFERENCES " + quote_ident(fk.ref_table) + "(" +
               quote_ident(fk.ref_column) + ")";
    exec(db.h, ddl + ")");
    for (std::size_t r = 0; r < rows; ++r) {
      std::string ins = "INSERT INTO " + quote_ident(t.name) + " VALUES (";
      for (std::size_t i = 0; i < t.columns.size(); ++i) {
        // alternate integer and text cells
        const auto v = std::uniform_int_distribution<int>(0, 9)(rng);
        ins += (i ? ", " : "") + ((i + r) % 2 ? "'v" + std::to_string(v) + "'" : std::to_string(v));
      }
      exec(db.h, ins + ")");
    }
  }
  exec(db.h, "COMMIT");
}

}  // namespace sdcg::sql
