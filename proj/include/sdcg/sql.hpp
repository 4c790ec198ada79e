#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdcg/grammar.hpp"
#include "sdcg/oracle.hpp"
#include "sdcg/resolver.hpp"
#include "sdcg/schema.hpp"

namespace sdcg::sql {

class SchemaError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checks the schema invariants: nonempty, unique names, every table has a
// column, foreign keys resolve, and the name <-> semantic name maps are
// bijective and never collide with SQL keywords.
void validate_schema(const Schema& s);

// {"db", "tables": [{"name", "semantic_name"?, "columns": [name | {"name",
// "semantic_name"?}]}], "foreign_keys": [{"table", "column", "ref_table",
// "ref_column"}]}
Schema load_schema(const std::string& json_text);
Schema load_schema_file(const std::filesystem::path& file);
std::string schema_to_json(const Schema& s);

// Spider tables.json (a list of databases); picks `db_id`.
Schema import_spider(const std::string& json_text, const std::string& db_id);

// ---------------------------------------------------------------------------
// Tokens

class SqlSyntaxError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Stands for a condition or LIMIT value in grammar-side token sequences.
inline constexpr const char* kValueSlot = "<value>";

bool is_keyword(const std::string& token);

// Keywords uppercased, literals kept with their quotes, quoted identifiers
// unquoted, trailing semicolon dropped.
std::vector<std::string> tokenize(const std::string& sql);
// Single-space join; identifiers that would not survive re-tokenizing are
// backquoted.
std::string detokenize(const std::vector<std::string>& tokens);
std::string canonicalize(const std::string& sql);

// Replaces the literal after each comparison operator and after LIMIT by
// kValueSlot. Returns the replaced literals in order.
std::vector<std::string> abstract_values(std::vector<std::string>& tokens);
// Fills kValueSlot tokens in order; missing values become 1.
std::vector<std::string> fill_values(std::vector<std::string> tokens, const std::vector<std::string>& values);

class MappingError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NameDirection { to_semantic, to_original };

// Maps every identifier token between original and semantic names. Keywords,
// punctuation, literals and value slots pass through.
std::vector<std::string> map_semantic_names(const std::vector<std::string>& tokens, const Schema& s,
                                            NameDirection direction);

// ---------------------------------------------------------------------------
// Grammars

enum class Scope { basic, task1, task2 };
Scope parse_scope(const std::string& name);
std::string to_string(Scope scope);

// Rules only, without facts. The ablation variant draws every column from the
// whole database.
std::string grammar_rules(Scope scope, bool ablation, bool with_except);

Grammar build_dcg_grammar(const Schema& s, Scope scope);
Grammar build_cfg_ablation_grammar(const Schema& s, Scope scope);

Atom query_atom(const std::string& nl, const Schema& s);

// ---------------------------------------------------------------------------
// Generation and scoring

enum class Mode { exact, greedy };

class GenerationError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerateOptions {
  Mode mode = Mode::exact;
  std::vector<std::string> gold_values;
  // Exact mode refuses forests with more derivations than this.
  double exact_budget = 1e6;
  ResolveOptions resolve;
};

struct GenerationResult {
  std::string sql;
  // Semantic-name tokens with value slots, as derived.
  std::vector<std::string> tokens;
  double probability = 0.0;
  Derivation derivation;
  Mode mode = Mode::exact;
};

// `oracles` may be null when the grammar has no oracle rules.
GenerationResult generate(const std::string& nl, const Schema& s, const Grammar& g, OracleSession* oracles,
                          const GenerateOptions& opts = {});

// Probability of `sql` under the grammar; 0 when it cannot be derived.
double score(const std::string& nl, const Schema& s, const Grammar& g, const std::string& sql,
             OracleSession* oracles, const ResolveOptions& resolve = {});

// Goal with Known tokens for a query, or nullopt when the query cannot be
// tokenized or names an identifier outside the schema.
std::optional<Goal> known_goal(const std::string& nl, const Schema& s, const std::string& sql);

// Semantic tokens back to executable SQL.
std::string render_sql(const std::vector<std::string>& semantic_tokens, const Schema& s,
                       const std::vector<std::string>& gold_values = {});

// ---------------------------------------------------------------------------
// Fixture schemas

struct RandomSchemaOptions {
  std::size_t min_tables = 2, max_tables = 6;
  std::size_t min_columns = 2, max_columns = 10;
  std::size_t max_foreign_keys = 4;
};

// Column names are unique across tables, so no two tables share a column.
Schema random_schema(std::mt19937_64& rng, const RandomSchemaOptions& opts = {}, const std::string& db_name = "");

}  // namespace sdcg::sql
