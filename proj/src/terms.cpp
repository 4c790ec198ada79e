#include "sdcg/terms.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace sdcg {

namespace {
const std::string kNil = "[]";
const std::string kCons = ".";
}  // namespace

struct Term::Node {
  struct Var {
    std::string name;
    VarId id;
  };
  struct Const {
    std::string symbol;
  };
  struct Compound {
    std::string functor;
    std::vector<Term> args;
    bool ground;
  };
  std::variant<Var, Const, Compound> data;
};

Term::Term() : Term(nil()) {}

Term Term::variable(std::string name, VarId id) {
  return Term(std::make_shared<const Node>(Node{Node::Var{std::move(name), id}}));
}

Term Term::constant(std::string symbol) {
  return Term(std::make_shared<const Node>(Node{Node::Const{std::move(symbol)}}));
}

Term Term::compound(std::string functor, std::vector<Term> args) {
  if (functor.empty()) throw std::invalid_argument("compound term needs a nonempty functor");
  if (args.empty()) return constant(std::move(functor));
  bool ground = true;
  for (const auto& a : args) ground = ground && a.is_ground();
  return Term(std::make_shared<const Node>(Node{Node::Compound{std::move(functor), std::move(args), ground}}));
}

Term Term::nil() {
  static const Term n{std::make_shared<const Node>(Node{Node::Const{kNil}})};
  return n;
}

Term Term::list(std::vector<Term> items, std::optional<Term> tail) {
  Term out = tail ? *tail : nil();
  for (auto it = items.rbegin(); it != items.rend(); ++it) out = compound(kCons, {*it, out});
  return out;
}

Term::Kind Term::kind() const noexcept {
  return static_cast<Kind>(node_->data.index());
}

VarId Term::var_id() const { return std::get<Node::Var>(node_->data).id; }
const std::string& Term::var_name() const { return std::get<Node::Var>(node_->data).name; }
const std::string& Term::symbol() const { return std::get<Node::Const>(node_->data).symbol; }
const std::string& Term::functor() const { return std::get<Node::Compound>(node_->data).functor; }

std::span<const Term> Term::args() const {
  if (auto* c = std::get_if<Node::Compound>(&node_->data)) return c->args;
  return {};
}

std::size_t Term::arity() const noexcept { return args().size(); }

bool Term::is_ground() const {
  switch (kind()) {
    case Kind::variable: return false;
    case Kind::constant: return true;
    case Kind::compound: return std::get<Node::Compound>(node_->data).ground;
  }
  return false;
}

void Term::collect_variables(std::vector<Term>& out) const {
  switch (kind()) {
    case Kind::variable:
      for (const auto& v : out)
        if (v.var_id() == var_id()) return;
      out.push_back(*this);
      return;
    case Kind::constant: return;
    case Kind::compound:
      if (is_ground()) return;
      for (const auto& a : args()) a.collect_variables(out);
  }
}

bool operator==(const Term& a, const Term& b) {
  if (a.node_ == b.node_) return true;
  if (a.kind() != b.kind()) return false;
  switch (a.kind()) {
    case Term::Kind::variable: return a.var_id() == b.var_id();
    case Term::Kind::constant: return a.symbol() == b.symbol();
    case Term::Kind::compound: {
      if (a.functor() != b.functor() || a.arity() != b.arity()) return false;
      auto aa = a.args();
      auto bb = b.args();
      for (std::size_t i = 0; i < aa.size(); ++i)
        if (!(aa[i] == bb[i])) return false;
      return true;
    }
  }
  return false;
}

std::string quote_symbol(const std::string& s) {
  bool plain = !s.empty() && std::islower(static_cast<unsigned char>(s[0]));
  for (char c : s) plain = plain && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
  if (plain || s == kNil) return s;
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::optional<std::vector<Term>> list_items(const Term& t) {
  std::vector<Term> items;
  Term cur = t;
  while (cur.is_compound() && cur.functor() == kCons && cur.arity() == 2) {
    items.push_back(cur.args()[0]);
    cur = cur.args()[1];
  }
  if (cur.is_constant() && cur.symbol() == kNil) return items;
  return std::nullopt;
}

namespace {

using VarNamer = std::function<void(std::ostream&, const Term&)>;

void render(std::ostream& os, const Term& t, const VarNamer& name_var) {
  switch (t.kind()) {
    case Term::Kind::variable: name_var(os, t); return;
    case Term::Kind::constant: os << quote_symbol(t.symbol()); return;
    case Term::Kind::compound: break;
  }
  if (t.functor() == kCons && t.arity() == 2) {
    os << '[';
    Term cur = t;
    bool first = true;
    while (cur.is_compound() && cur.functor() == kCons && cur.arity() == 2) {
      if (!first) os << ", ";
      first = false;
      render(os, cur.args()[0], name_var);
      cur = cur.args()[1];
    }
    if (!(cur.is_constant() && cur.symbol() == kNil)) {
      os << " | ";
      render(os, cur, name_var);
    }
    os << ']';
    return;
  }
  os << quote_symbol(t.functor()) << '(';
  bool first = true;
  for (const auto& a : t.args()) {
    if (!first) os << ", ";
    first = false;
    render(os, a, name_var);
  }
  os << ')';
}

}  // namespace

std::string Term::to_string() const {
  std::ostringstream os;
  render(os, *this, [](std::ostream& o, const Term& v) { o << v.var_name(); });
  return os.str();
}

std::string Term::variant_key() const {
  std::ostringstream os;
  std::vector<VarId> seen;
  render(os, *this, [&seen](std::ostream& o, const Term& v) {
    std::size_t i = 0;
    while (i < seen.size() && seen[i] != v.var_id()) ++i;
    if (i == seen.size()) seen.push_back(v.var_id());
    o << "_G" << i;
  });
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Term& t) { return os << t.to_string(); }

Term Atom::as_term() const {
  return args.empty() ? Term::constant(predicate) : Term::compound(predicate, args);
}

Atom Atom::from_term(const Term& t) {
  if (t.is_constant()) return Atom{t.symbol(), {}};
  if (t.is_compound()) return Atom{t.functor(), {t.args().begin(), t.args().end()}};
  throw std::invalid_argument("a variable is not an atom: " + t.to_string());
}

std::string Atom::to_string() const { return as_term().to_string(); }

// ---------------------------------------------------------------------------

std::optional<Term> Substitution::lookup(VarId id) const {
  auto it = bindings_.find(id);
  if (it == bindings_.end()) return std::nullopt;
  return it->second;
}

bool occurs_in(VarId var, const Term& t) {
  switch (t.kind()) {
    case Term::Kind::variable: return t.var_id() == var;
    case Term::Kind::constant: return false;
    case Term::Kind::compound:
      if (t.is_ground()) return false;
      for (const auto& a : t.args())
        if (occurs_in(var, a)) return true;
      return false;
  }
  return false;
}

namespace {

Term replace_var(const Term& t, VarId var, const Term& value) {
  switch (t.kind()) {
    case Term::Kind::variable: return t.var_id() == var ? value : t;
    case Term::Kind::constant: return t;
    case Term::Kind::compound: {
      if (t.is_ground() || !occurs_in(var, t)) return t;
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const auto& a : t.args()) args.push_back(replace_var(a, var, value));
      return Term::compound(t.functor(), std::move(args));
    }
  }
  return t;
}

}  // namespace

Term Substitution::apply(const Term& t) const {
  if (bindings_.empty()) return t;
  switch (t.kind()) {
    case Term::Kind::variable: {
      auto it = bindings_.find(t.var_id());
      return it == bindings_.end() ? t : it->second;
    }
    case Term::Kind::constant: return t;
    case Term::Kind::compound: {
      if (t.is_ground()) return t;
      std::vector<Term> args;
      args.reserve(t.arity());
      bool changed = false;
      for (const auto& a : t.args()) {
        args.push_back(apply(a));
        changed = changed || !(args.back() == a);
      }
      return changed ? Term::compound(t.functor(), std::move(args)) : t;
    }
  }
  return t;
}

Atom Substitution::apply(const Atom& a) const {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back(apply(t));
  return out;
}

bool Substitution::bind(VarId var, const Term& value) {
  if (bindings_.contains(var)) return false;
  Term resolved = apply(value);
  if (resolved.is_variable() && resolved.var_id() == var) return true;
  if (occurs_in(var, resolved)) return false;
  for (auto& [id, bound] : bindings_) bound = replace_var(bound, var, resolved);
  bindings_.emplace(var, std::move(resolved));
  return true;
}

Term apply_substitution(const Term& t, const Substitution& s) { return s.apply(t); }

namespace {

bool unify_into(Substitution& s, const Term& lhs, const Term& rhs) {
  Term a = lhs.is_variable() ? s.apply(lhs) : lhs;
  Term b = rhs.is_variable() ? s.apply(rhs) : rhs;
  if (a.is_variable() && b.is_variable() && a.var_id() == b.var_id()) return true;
  if (a.is_variable()) return s.bind(a.var_id(), b);
  if (b.is_variable()) return s.bind(b.var_id(), a);
  if (a.is_constant() || b.is_constant())
    return a.is_constant() && b.is_constant() && a.symbol() == b.symbol();
  if (a.functor() != b.functor() || a.arity() != b.arity()) return false;
  auto aa = a.args();
  auto bb = b.args();
  for (std::size_t i = 0; i < aa.size(); ++i)
    if (!unify_into(s, aa[i], bb[i])) return false;
  return true;
}

}  // namespace

std::optional<Substitution> unify(const Term& t1, const Term& t2, const Substitution& s) {
  Substitution out = s;
  if (!unify_into(out, t1, t2)) return std::nullopt;
  return out;
}

std::optional<Substitution> unify(const Atom& a1, const Atom& a2, const Substitution& s) {
  if (a1.predicate != a2.predicate || a1.arity() != a2.arity()) return std::nullopt;
  Substitution out = s;
  for (std::size_t i = 0; i < a1.args.size(); ++i)
    if (!unify_into(out, a1.args[i], a2.args[i])) return std::nullopt;
  return out;
}

Term Renamer::operator()(const Term& t) {
  switch (t.kind()) {
    case Term::Kind::variable: {
      auto it = map_.find(t.var_id());
      if (it != map_.end()) return it->second;
      Term fresh = Term::variable(t.var_name(), fresh_.next());
      map_.emplace(t.var_id(), fresh);
      return fresh;
    }
    case Term::Kind::constant: return t;
    case Term::Kind::compound: {
      if (t.is_ground()) return t;
      std::vector<Term> args;
      args.reserve(t.arity());
      for (const auto& a : t.args()) args.push_back((*this)(a));
      return Term::compound(t.functor(), std::move(args));
    }
  }
  return t;
}

Atom Renamer::operator()(const Atom& a) {
  Atom out{a.predicate, {}};
  out.args.reserve(a.args.size());
  for (const auto& t : a.args) out.args.push_back((*this)(t));
  return out;
}

std::vector<Term> rename_apart(std::span<const Term> terms, FreshVars& fresh) {
  Renamer rename(fresh);
  std::vector<Term> out;
  out.reserve(terms.size());
  for (const auto& t : terms) out.push_back(rename(t));
  return out;
}

}  // namespace sdcg
