#include <cctype>
#include <charconv>
#include <map>

#include "expansion.hpp"
#include "sdcg/grammar.hpp"

namespace sdcg {

namespace {

enum class Tok {
  atom,
  var,
  string,
  number,
  lparen,
  rparen,
  lbracket,
  rbracket,
  lbrace,
  rbrace,
  comma,
  bar,
  end,
  colons,
  arrow,
  newline,
  eof
};

struct Token {
  Tok kind;
  std::string text;
  std::size_t line;
  std::size_t column;
};

const char* describe(Tok k) {
  switch (k) {
    case Tok::atom: return "atom";
    case Tok::var: return "variable";
    case Tok::string: return "string";
    case Tok::number: return "number";
    case Tok::lparen: return "'('";
    case Tok::rparen: return "')'";
    case Tok::lbracket: return "'['";
    case Tok::rbracket: return "']'";
    case Tok::lbrace: return "'{'";
    case Tok::rbrace: return "'}'";
    case Tok::comma: return "','";
    case Tok::bar: return "'|'";
    case Tok::end: return "'.'";
    case Tok::colons: return "'::'";
    case Tok::arrow: return "'-->'";
    case Tok::newline: return "end of line";
    case Tok::eof: return "end of input";
  }
  return "?";
}

// Newlines are only significant outside brackets; inside them they are
// ordinary whitespace.
std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  int depth = 0;
  auto advance = [&](std::size_t n = 1) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto push = [&](Tok kind, std::string text, std::size_t l, std::size_t c) {
    out.push_back({kind, std::move(text), l, c});
  };
  while (i < src.size()) {
    char c = src[i];
    std::size_t l = line, cl = col;
    if (c == '\n') {
      if (depth == 0) push(Tok::newline, "", l, cl);
      advance();
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance();
      continue;
    }
    if (c == '%') {
      while (i < src.size() && src[i] != '\n') advance();
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = i;
      while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) advance();
      std::string word(src.substr(start, i - start));
      bool is_var = std::isupper(static_cast<unsigned char>(word[0])) || word[0] == '_';
      push(is_var ? Tok::var : Tok::atom, word, l, cl);
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t start = i;
      advance();
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
      if (i + 1 < src.size() && src[i] == '.' && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
        advance();
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
      }
      if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
        std::size_t save_i = i, save_line = line, save_col = col;
        advance();
        if (i < src.size() && (src[i] == '+' || src[i] == '-')) advance();
        if (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) {
          while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) advance();
        } else {
          i = save_i;
          line = save_line;
          col = save_col;
        }
      }
      push(Tok::number, std::string(src.substr(start, i - start)), l, cl);
      continue;
    }
    if (c == '"' || c == '\'') {
      char quote = c;
      advance();
      std::string text;
      while (true) {
        if (i >= src.size() || src[i] == '\n') throw GrammarError(l, cl, "unterminated string");
        char d = src[i];
        if (d == quote) {
          advance();
          break;
        }
        if (d == '\\' && i + 1 < src.size()) {
          char e = src[i + 1];
          text += e == 'n' ? '\n' : e == 't' ? '\t' : e;
          advance(2);
          continue;
        }
        text += d;
        advance();
      }
      push(Tok::string, std::move(text), l, cl);
      continue;
    }
    if (src.substr(i, 3) == "-->") {
      push(Tok::arrow, "-->", l, cl);
      advance(3);
      continue;
    }
    if (src.substr(i, 2) == "::") {
      push(Tok::colons, "::", l, cl);
      advance(2);
      continue;
    }
    switch (c) {
      case '(': ++depth; push(Tok::lparen, "(", l, cl); break;
      case ')': --depth; push(Tok::rparen, ")", l, cl); break;
      case '[': ++depth; push(Tok::lbracket, "[", l, cl); break;
      case ']': --depth; push(Tok::rbracket, "]", l, cl); break;
      case '{': ++depth; push(Tok::lbrace, "{", l, cl); break;
      case '}': --depth; push(Tok::rbrace, "}", l, cl); break;
      case ',': push(Tok::comma, ",", l, cl); break;
      case '|': push(Tok::bar, "|", l, cl); break;
      case '.': push(Tok::end, ".", l, cl); break;
      default: throw GrammarError(l, cl, std::string("unexpected character '") + c + "'");
    }
    if (depth < 0) throw GrammarError(l, cl, "unbalanced closing bracket");
    advance();
  }
  out.push_back({Tok::eof, "", line, col});
  return out;
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Grammar parse() {
    Grammar g;
    while (true) {
      skip_newlines();
      if (peek().kind == Tok::eof) break;
      parse_clause(g);
    }
    return g;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  const Token& take() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (peek().kind != k) return false;
    ++pos_;
    return true;
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k)
      fail(peek(), std::string("expected ") + what + ", found " + describe(peek().kind) +
                       (peek().text.empty() ? "" : " '" + peek().text + "'"));
    return take();
  }
  void skip_newlines() {
    while (peek().kind == Tok::newline) ++pos_;
  }
  [[noreturn]] static void fail(const Token& at, const std::string& msg) {
    throw GrammarError(at.line, at.column, msg);
  }

  Term variable(const std::string& name) {
    if (name == "_") return Term::variable("_", VarId{next_var_++});
    auto it = vars_.find(name);
    if (it != vars_.end()) return it->second;
    Term v = Term::variable(name, VarId{next_var_++});
    vars_.emplace(name, v);
    return v;
  }

  Term parse_term() {
    const Token& t = take();
    switch (t.kind) {
      case Tok::var: return variable(t.text);
      case Tok::number:
      case Tok::string: return Term::constant(t.text);
      case Tok::lbracket: return parse_list_rest(t);
      case Tok::atom: {
        if (!accept(Tok::lparen)) return Term::constant(t.text);
        std::vector<Term> args;
        if (peek().kind == Tok::rparen) fail(peek(), "empty argument list");
        do {
          args.push_back(parse_term());
        } while (accept(Tok::comma));
        expect(Tok::rparen, "')'");
        return Term::compound(t.text, std::move(args));
      }
      default: fail(t, std::string("expected a term, found ") + describe(t.kind));
    }
  }

  Term parse_list_rest(const Token&) {
    if (accept(Tok::rbracket)) return Term::nil();
    std::vector<Term> items;
    std::optional<Term> tail;
    do {
      items.push_back(parse_term());
    } while (accept(Tok::comma));
    if (accept(Tok::bar)) tail = parse_term();
    expect(Tok::rbracket, "']'");
    return Term::list(std::move(items), tail);
  }

  Atom parse_atom(const char* role) {
    const Token& at = peek();
    Term t = parse_term();
    if (t.is_variable()) fail(at, std::string(role) + " cannot be a variable");
    return Atom::from_term(t);
  }

  std::vector<BodyItem> parse_body() {
    std::vector<BodyItem> body;
    do {
      skip_newlines();
      const Token& at = peek();
      if (accept(Tok::lbracket)) {
        Terminals term;
        if (!accept(Tok::rbracket)) {
          do {
            term.tokens.push_back(parse_term());
          } while (accept(Tok::comma));
          if (peek().kind == Tok::bar) fail(peek(), "terminal lists cannot have a tail");
          expect(Tok::rbracket, "']'");
        }
        body.emplace_back(std::move(term));
      } else if (accept(Tok::lbrace)) {
        do {
          body.emplace_back(EmbeddedGoal{parse_atom("an embedded goal")});
        } while (accept(Tok::comma));
        expect(Tok::rbrace, "'}'");
      } else {
        if (at.kind == Tok::number || at.kind == Tok::string) fail(at, "terminals must be written inside [ ]");
        body.emplace_back(NonTerminal{parse_atom("a body item")});
      }
    } while (accept(Tok::comma));
    // A lone [] denotes the empty production.
    if (body.size() == 1)
      if (auto* t = std::get_if<Terminals>(&body.front()); t && t->tokens.empty()) body.clear();
    return body;
  }

  DomainSpec domain_spec(const Token& at, const Term& t) {
    auto a = t.args();
    auto inputs = list_items(a[1]);
    if (!inputs || inputs->empty() || inputs->size() > 2)
      fail(at, "probability source inputs must be a list of one or two terms ([NL] or [NL, State])");
    if (!a[2].is_variable()) fail(at, "probability source output must be a variable");
    if (a[3].is_variable()) fail(at, "probability source domain goal must be an atom");
    if (!a[4].is_constant()) fail(at, "probability source prompt must be a string");
    return DomainSpec{*inputs, a[2], Atom::from_term(a[3]), a[4].symbol()};
  }

  ProbabilitySource to_source(const Token& at, const Term& t) {
    if (t.is_constant()) {
      double p = 0;
      const std::string& s = t.symbol();
      auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), p);
      if (ec != std::errc{} || end != s.data() + s.size())
        fail(at, "unknown probability source '" + s + "'");
      if (!(p >= 0.0 && p <= 1.0)) fail(at, "static probability " + s + " outside [0, 1]");
      return prob::Static{p};
    }
    if (t.is_compound()) {
      const std::string& f = t.functor();
      if (f == "learnable" && t.arity() == 1) {
        if (!t.args()[0].is_constant()) fail(at, "learnable group must be a name");
        return prob::Learnable{t.args()[0].symbol(), std::nullopt, 0};
      }
      if ((f == "learnable" || f == "oracle") && t.arity() == 5) {
        if (!t.args()[0].is_constant()) fail(at, f + " id must be a name");
        DomainSpec d = domain_spec(at, t);
        if (f == "oracle") return prob::Oracle{t.args()[0].symbol(), std::move(d)};
        return prob::Learnable{t.args()[0].symbol(), std::move(d), 0};
      }
      fail(at, "unknown probability source '" + f + "/" + std::to_string(t.arity()) + "'");
    }
    fail(at, "probability source cannot be a variable");
  }

  static void check_source_variables(const Token& at, const GrammarRule& rule) {
    const DomainSpec* d = nullptr;
    if (const auto* o = std::get_if<prob::Oracle>(&rule.prob)) d = &o->domain;
    if (const auto* l = std::get_if<prob::Learnable>(&rule.prob); l && l->domain) d = &*l->domain;
    if (!d) return;
    std::vector<Term> rule_vars;
    rule.head.as_term().collect_variables(rule_vars);
    for (const auto& item : rule.body) {
      std::visit(
          [&rule_vars](const auto& it) {
            using T = std::decay_t<decltype(it)>;
            if constexpr (std::is_same_v<T, Terminals>) {
              for (const auto& tok : it.tokens) tok.collect_variables(rule_vars);
            } else {
              it.atom.as_term().collect_variables(rule_vars);
            }
          },
          item);
    }
    std::vector<Term> used = d->inputs;
    used.push_back(d->output);
    std::vector<Term> source_vars;
    for (const auto& t : used) t.collect_variables(source_vars);
    for (const auto& v : source_vars) {
      bool found = false;
      for (const auto& r : rule_vars) found = found || r.var_id() == v.var_id();
      if (!found) fail(at, "variable " + v.var_name() + " used in probability source but absent from the rule");
    }
  }

  void end_clause(bool require_dot) {
    if (accept(Tok::end)) return;
    if (!require_dot && (peek().kind == Tok::newline || peek().kind == Tok::eof)) return;
    fail(peek(), require_dot ? "facts must end with '.'" : "expected end of clause");
  }

  void parse_clause(Grammar& g) {
    vars_.clear();
    next_var_ = 1;
    const Token& start = peek();
    Term first = parse_term();
    std::optional<ProbabilitySource> source;
    if (accept(Tok::colons)) {
      source = to_source(start, first);
      skip_newlines();
      first = parse_term();
    }
    if (first.is_variable()) fail(start, "clause head cannot be a variable");
    Atom head = Atom::from_term(first);
    if (accept(Tok::arrow)) {
      GrammarRule rule{std::move(head), parse_body(), prob::Certain{}, start.line};
      if (peek().kind == Tok::colons) {
        const Token& at = take();
        if (source) fail(at, "a rule carries at most one probability source");
        skip_newlines();
        const Token& src_at = peek();
        source = to_source(src_at, parse_term());
      }
      if (source) rule.prob = std::move(*source);
      check_source_variables(start, rule);
      end_clause(false);
      // number variables by position so equal rules compare equal however written
      FreshVars canon(1);
      g.add_rule(detail::rename_rule(rule, canon));
      return;
    }
    if (source) fail(start, "facts cannot carry a probability");
    if (!first.is_ground()) fail(start, "facts must be ground");
    end_clause(true);
    g.add_fact(Fact{std::move(head)});
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::map<std::string, Term> vars_;
  std::uint64_t next_var_ = 1;
};

}  // namespace

Grammar parse_grammar_source(std::string_view text) {
  return Parser(lex(text)).parse();
}

}  // namespace sdcg
