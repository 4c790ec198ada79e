#pragma once

#include <string>
#include <vector>

namespace sdcg {

struct Column {
  std::string name;
  std::string semantic_name;  // defaults to `name` when the source gives none
};

struct Table {
  std::string name;
  std::string semantic_name;
  std::vector<Column> columns;
};

struct ForeignKey {
  std::string table;
  std::string column;
  std::string ref_table;
  std::string ref_column;
};

// Database schema. Table and column order is significant: it fixes the
// answer indices presented to oracles.
struct Schema {
  std::string db_name;
  std::vector<Table> tables;
  std::vector<ForeignKey> foreign_keys;

  const Table* find_table(const std::string& name) const;
};

}  // namespace sdcg
