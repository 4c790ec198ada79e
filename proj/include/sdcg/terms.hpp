#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace sdcg {

// Identity of a logic variable. The display name carried alongside it in a
// Term never participates in comparisons.
struct VarId {
  std::uint64_t value = 0;
  friend bool operator==(VarId, VarId) = default;
  friend auto operator<=>(VarId, VarId) = default;
};

struct VarIdHash {
  std::size_t operator()(VarId v) const noexcept { return std::hash<std::uint64_t>{}(v.value); }
};

// Immutable first-order term: a variable, a constant symbol or a compound
// f(t1, ..., tn). Copies share structure.
// 
// Lists use the usual cons encoding: "." cells terminated by the constant "[]".
class Term {
 public:
  enum class Kind { variable, constant, compound };

  // Defaults to the empty-list constant.
  Term();

  static Term variable(std::string name, VarId id);
  static Term constant(std::string symbol);
  static Term compound(std::string functor, std::vector<Term> args);
  static Term list(std::vector<Term> items, std::optional<Term> tail = std::nullopt);
  static Term nil();

  Kind kind() const noexcept;
  bool is_variable() const noexcept { return kind() == Kind::variable; }
  bool is_constant() const noexcept { return kind() == Kind::constant; }
  bool is_compound() const noexcept { return kind() == Kind::compound; }

  VarId var_id() const;
  const std::string& var_name() const;
  const std::string& symbol() const;
  const std::string& functor() const;
  std::span<const Term> args() const;
  std::size_t arity() const noexcept;

  bool is_ground() const;
  // Collects variables in first-occurrence order, without duplicates.
  void collect_variables(std::vector<Term>& out) const;

  // Structural equality; variables compare by id.
  friend bool operator==(const Term& a, const Term& b);

  // Prolog-like rendering; strings that are not plain lowercase atoms are quoted.
  std::string to_string() const;

  // Rendering with variables numbered by first occurrence, so two terms that
  // are variants of each other produce the same key.
  std::string variant_key() const;

 private:
  struct Node;
  explicit Term(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

std::ostream& operator<<(std::ostream& os, const Term& t);

// Quotes a symbol for rendering unless it is a plain lowercase identifier.
std::string quote_symbol(const std::string& symbol);

// Expands a proper list term into its items; nullopt if `t` is not a proper list.
std::optional<std::vector<Term>> list_items(const Term& t);

// A predicate applied to arguments. Atoms are identified by predicate and arity.
struct Atom {
  std::string predicate;
  std::vector<Term> args;

  std::size_t arity() const noexcept { return args.size(); }
  Term as_term() const;
  static Atom from_term(const Term& t);
  std::string to_string() const;
  friend bool operator==(const Atom&, const Atom&) = default;
};

// Idempotent, acyclic map from variable id to term. Bindings are stored fully
// dereferenced: binding a variable rewrites every existing binding through it.
class Substitution {
 public:
  std::optional<Term> lookup(VarId id) const;
  bool empty() const noexcept { return bindings_.empty(); }
  std::size_t size() const noexcept { return bindings_.size(); }

  // Binds `var` to `value` after resolving `value` through the current
  // bindings. Fails (returns false, leaves *this untouched) on occurs-check
  // violation or when `var` is already bound.
  bool bind(VarId var, const Term& value);

  Term apply(const Term& t) const;
  Atom apply(const Atom& a) const;

  const std::unordered_map<VarId, Term, VarIdHash>& bindings() const noexcept { return bindings_; }

 private:
  std::unordered_map<VarId, Term, VarIdHash> bindings_;
};

// Source of fresh variable ids. Thread-safe.
class FreshVars {
 public:
  explicit FreshVars(std::uint64_t first = 1'000'000) : next_(first) {}
  VarId next() noexcept { return VarId{next_.fetch_add(1, std::memory_order_relaxed)}; }

 private:
  std::atomic<std::uint64_t> next_;
};

// Most general unifier of t1 and t2 extending s, with occurs check.
std::optional<Substitution> unify(const Term& t1, const Term& t2, const Substitution& s);
std::optional<Substitution> unify(const Atom& a1, const Atom& a2, const Substitution& s);

bool occurs_in(VarId var, const Term& t);

Term apply_substitution(const Term& t, const Substitution& s);

// Replaces every variable in `terms` by a fresh one, consistently across the
// whole list.
std::vector<Term> rename_apart(std::span<const Term> terms, FreshVars& fresh);

// Consistent renaming over several calls: the same source variable maps to the
// same fresh variable for the lifetime of the renamer.
class Renamer {
 public:
  explicit Renamer(FreshVars& fresh) : fresh_(fresh) {}
  Term operator()(const Term& t);
  Atom operator()(const Atom& a);

 private:
  FreshVars& fresh_;
  std::unordered_map<VarId, Term, VarIdHash> map_;
};

}  // namespace sdcg
