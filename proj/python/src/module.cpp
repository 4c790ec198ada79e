#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sdcg/circuit.hpp"
#include "sdcg/sql.hpp"
#include "sdcg/sqlite.hpp"

namespace py = pybind11;
using namespace sdcg;

namespace {

// Python callable (oracle_id, prompt, domain) -> scores, softmaxed here; with
// probs=True it returns probabilities instead
class CallableOracle : public OracleHandle {
 public:
  CallableOracle(py::function fn, bool probs) : fn_(std::move(fn)), probs_(probs) {}
  OracleDistribution predict(const OracleRequest& req, const std::string& prompt) override {
    py::gil_scoped_acquire gil;
    auto raw = fn_(req.oracle_id, prompt, req.domain).cast<std::vector<double>>();
    if (!probs_) return normalize_distribution(raw, req.domain.size());
    OracleDistribution d{std::move(raw)};
    check_distribution(d, req.domain.size(), req.oracle_id);
    return d;
  }

 private:
  py::function fn_;
  bool probs_;
};

// Grammar plus the oracles it talks to, for one schema.
class Engine {
 public:
  Engine(Schema s, const std::string& scope, bool ablation)
      : schema_(std::move(s)),
        grammar_(ablation ? sql::build_cfg_ablation_grammar(schema_, sql::parse_scope(scope))
                          : sql::build_dcg_grammar(schema_, sql::parse_scope(scope))) {}

  void set_oracles(const std::vector<std::string>& specs) { registry_ = registry_from_specs(specs); }
  void set_oracle_function(py::function fn, const std::string& oracle_id, bool probs) {
    auto h = std::make_shared<CallableOracle>(std::move(fn), probs);
    if (oracle_id.empty())
      registry_.set_fallback(h);
    else
      registry_.add(oracle_id, h);
  }

  py::dict generate(const std::string& nl, const std::string& mode, const std::vector<std::string>& values,
                    double budget) {
    OracleSession session(registry_);
    sql::GenerateOptions o;
    if (mode != "exact" && mode != "greedy") throw std::invalid_argument("mode is exact or greedy");
    o.mode = mode == "greedy" ? sql::Mode::greedy : sql::Mode::exact;
    o.gold_values = values;
    o.exact_budget = budget;
    auto r = sql::generate(nl, schema_, grammar_, &session, o);
    py::dict d;
    d["sql"] = r.sql;
    d["tokens"] = r.tokens;
    d["probability"] = r.probability;
    d["mode"] = mode;
    return d;
  }

  double score(const std::string& nl, const std::string& query) {
    OracleSession session(registry_);
    return sql::score(nl, schema_, grammar_, query, &session);
  }

  std::vector<std::string> enumerate(const std::string& nl, std::size_t limit, const std::vector<std::string>& values) {
    auto r = enumerate_derivations(Goal{sql::query_atom(nl, schema_), std::nullopt}, grammar_, limit);
    std::vector<std::string> out;
    for (const auto& d : r.derivations) out.push_back(sql::render_sql(d.tokens, schema_, values));
    return out;
  }

  double count(const std::string& nl) { return derive(Goal{sql::query_atom(nl, schema_), std::nullopt}, grammar_).count_derivations(); }

  const Schema& schema() const { return schema_; }

 private:
  Schema schema_;
  Grammar grammar_;
  OracleRegistry registry_;
};

py::dict schema_dict(const Schema& s) {
  py::list tables;
  for (const auto& t : s.tables) {
    py::list cols;
    for (const auto& c : t.columns) cols.append(py::make_tuple(c.name, c.semantic_name));
    py::dict d;
    d["name"] = t.name;
    d["semantic_name"] = t.semantic_name;
    d["columns"] = cols;
    tables.append(d);
  }
  py::list fks;
  for (const auto& f : s.foreign_keys) fks.append(py::make_tuple(f.table, f.column, f.ref_table, f.ref_column));
  py::dict out;
  out["db"] = s.db_name;
  out["tables"] = tables;
  out["foreign_keys"] = fks;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Schema-constrained SQL generation with grammar-weighted oracles";

  py::register_exception<sql::SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<sql::SqlSyntaxError>(m, "SqlSyntaxError", PyExc_ValueError);
  py::register_exception<sql::MappingError>(m, "MappingError", PyExc_ValueError);
  py::register_exception<sql::GenerationError>(m, "GenerationError", PyExc_RuntimeError);
  auto oracle_error = py::register_exception<OracleError>(m, "OracleError", PyExc_RuntimeError);
  py::register_exception<ProtocolError>(m, "ProtocolError", oracle_error.ptr());

  py::class_<Schema>(m, "Schema")
      .def_readonly("db_name", &Schema::db_name)
      .def("to_dict", &schema_dict)
      .def("to_json", &sql::schema_to_json)
      .def("facts", [](const Schema& s) {
        std::vector<std::string> out;
        for (const auto& f : schema_to_facts(s)) out.push_back(f.atom.to_string());
        for (const auto& f : domain_facts(s)) out.push_back(f.atom.to_string());
        return out;
      })
      .def("__repr__", [](const Schema& s) { return "<Schema " + s.db_name + ", " + std::to_string(s.tables.size()) + " tables>"; });

  m.def("load_schema", &sql::load_schema, py::arg("json_text"));
  m.def("load_schema_file", &sql::load_schema_file, py::arg("path"));
  m.def("import_spider", &sql::import_spider, py::arg("json_text"), py::arg("db_id"));
  m.def(
      "random_schema",
      [](std::uint64_t seed, const std::string& name) {
        std::mt19937_64 rng(seed);
        return sql::random_schema(rng, {}, name);
      },
      py::arg("seed"), py::arg("name") = "");

  m.def("tokenize", &sql::tokenize, py::arg("sql"));
  m.def("detokenize", &sql::detokenize, py::arg("tokens"));
  m.def("canonicalize", &sql::canonicalize, py::arg("sql"));
  m.def(
      "build_prompt",
      [](const std::string& nl, const std::string& state, const std::vector<std::string>& domain, const std::string& prompt) {
        OracleRequest r;
        r.oracle_id = "python";
        r.nl = nl;
        r.state = state;
        r.domain = domain;
        r.prompt = prompt;
        return build_prompt(r);
      },
      py::arg("nl"), py::arg("state"), py::arg("domain"), py::arg("prompt") = "the answer should be Answer");

  m.def(
      "check_executable",
      [](const std::string& q, const std::filesystem::path& db) {
        auto r = sql::check_executable(q, db);
        return py::make_tuple(r.ok, r.detail);
      },
      py::arg("sql"), py::arg("db_file"));
  m.def("instantiate_database", &sql::instantiate_database, py::arg("schema"), py::arg("db_file"), py::arg("rows") = 3,
        py::arg("seed") = 0);

  py::class_<Engine>(m, "Engine")
      .def(py::init<Schema, const std::string&, bool>(), py::arg("schema"), py::arg("scope") = "task1",
           py::arg("ablation") = false)
      .def_property_readonly("schema", &Engine::schema)
      .def("set_oracles", &Engine::set_oracles, py::arg("specs"))
      .def("set_oracle_function", &Engine::set_oracle_function, py::arg("fn"), py::arg("oracle_id") = "",
           py::arg("probs") = false)
      .def("generate", &Engine::generate, py::arg("nl"), py::arg("mode") = "exact",
           py::arg("values") = std::vector<std::string>{}, py::arg("budget") = 1e6)
      .def("score", &Engine::score, py::arg("nl"), py::arg("sql"))
      .def("enumerate", &Engine::enumerate, py::arg("nl") = "", py::arg("limit") = 1000,
           py::arg("values") = std::vector<std::string>{})
      .def("count", &Engine::count, py::arg("nl") = "");
}
