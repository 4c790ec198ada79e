#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sdcg/schema.hpp"

namespace sdcg::sql {

struct ExecResult {
  bool ok = false;
  std::string detail;  // engine message on failure
};

// Runs `sql` read-only against the database file and steps through every row.
// Access to one file is serialized.
ExecResult check_executable(const std::string& sql, const std::filesystem::path& db_file);

// Creates (or replaces) a SQLite database with one table per schema table and
// `rows` rows of synthetic data.
void instantiate_database(const Schema& s, const std::filesystem::path& db_file, std::size_t rows = 3,
                          std::uint64_t seed = 0);

}  // namespace sdcg::sql
