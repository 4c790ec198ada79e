#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "sdcg/sql.hpp"

namespace sdcg::sql {

namespace {

const std::set<std::string>& keywords() {
  static const std::set<std::string> k{"SELECT", "FROM",   "WHERE", "GROUP",   "BY",    "HAVING", "ORDER",
                                       "ASC",    "DESC",   "LIMIT", "EXCEPT",  "UNION", "INTERSECT",
                                       "DISTINCT", "COUNT", "SUM",  "AVG",     "MIN",   "MAX",    "AND",
                                       "OR",     "NOT",    "LIKE",  "IN",      "AS",    "JOIN",   "ON",
                                       "BETWEEN", "IS",    "NULL"};
  return k;
}

const std::set<std::string>& comparison_ops() {
  static const std::set<std::string> ops{"=", "!=", "<>", "<", ">", "<=", ">=", "LIKE"};
  return ops;
}

bool is_punct(const std::string& t) {
  return t == "(" || t == ")" || t == "," || t == "*" || comparison_ops().contains(t);
}

bool is_number(const std::string& t) {
  if (t.empty()) return false;
  std::size_t i = (t[0] == '-') ? 1 : 0;
  bool digit = false, dot = false;
  for (; i < t.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(t[i]))) {
      digit = true;
    } else if (t[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digit;
}

bool is_literal(const std::string& t) { return t.size() >= 2 && (t[0] == '\'' || t[0] == '"') && t.back() == t[0]; }

bool is_plain_word(const std::string& t) {
  if (t.empty() || !(std::isalpha(static_cast<unsigned char>(t[0])) || t[0] == '_')) return false;
  return std::all_of(t.begin(), t.end(),
                     [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; });
}

std::string upper(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

bool is_identifier(const std::string& t) {
  return !is_keyword(t) && !is_punct(t) && !is_number(t) && !is_literal(t) && t != kValueSlot;
}

}  // namespace

bool is_keyword(const std::string& token) { return keywords().contains(token); }

std::vector<std::string> tokenize(const std::string& sql) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = sql.size();
  auto fail = [&](const std::string& what) {
    throw SqlSyntaxError(what + " at offset " + std::to_string(i) + " in: " + sql);
  };
  while (i < n) {
    const char c = sql[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      std::string lit(1, c);
      for (;;) {
        if (j >= n) fail("unterminated string literal");
        if (sql[j] == c) {
          if (j + 1 < n && sql[j + 1] == c) {
            lit += c;
            lit += c;
            j += 2;
            continue;
          }
          break;
        }
        lit += sql[j++];
      }
      lit += c;
      out.push_back(lit);
      i = j + 1;
    } else if (c == '`' || c == '[') {
      const char close = c == '`' ? '`' : ']';
      const std::size_t j = sql.find(close, i + 1);
      if (j == std::string::npos) fail("unterminated quoted identifier");
      if (j == i + 1) fail("empty quoted identifier");
      out.push_back(sql.substr(i + 1, j - i - 1));
      i = j + 1;
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               ((c == '.' || c == '-') && i + 1 < n && std::isdigit(static_cast<unsigned char>(sql[i + 1])))) {
      std::size_t j = i + 1;
      while (j < n && (std::isdigit(static_cast<unsigned char>(sql[j])) || sql[j] == '.')) ++j;
      out.push_back(sql.substr(i, j - i));
      i = j;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < n && (std::isalnum(static_cast<unsigned char>(sql[j])) || sql[j] == '_' || sql[j] == '.')) ++j;
      std::string word = sql.substr(i, j - i);
      const std::string up = upper(word);
      out.push_back(is_keyword(up) ? up : word);
      i = j;
    } else if (c == '<' && sql.compare(i, std::string(kValueSlot).size(), kValueSlot) == 0) {
      out.emplace_back(kValueSlot);
      i += std::string(kValueSlot).size();
    } else if (c == '!' || c == '<' || c == '>') {
      if (i + 1 < n && (sql[i + 1] == '=' || (c == '<' && sql[i + 1] == '>'))) {
        out.push_back(sql.substr(i, 2));
        i += 2;
      } else if (c == '!') {
        fail("unexpected '!'");
      } else {
        out.emplace_back(1, c);
        ++i;
      }
    } else if (c == '=' || c == '(' || c == ')' || c == ',' || c == '*') {
      out.emplace_back(1, c);
      ++i;
    } else if (c == ';') {
      // only a trailing semicolon is accepted
      std::size_t j = i + 1;
      while (j < n && std::isspace(static_cast<unsigned char>(sql[j]))) ++j;
      if (j != n) fail("statement continues after ';'");
      i = n;
    } else {
      fail(std::string("unexpected character '") + c + "'");
    }
  }
  return out;
}

std::string detokenize(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    const bool needs_quotes = is_identifier(t) && (!is_plain_word(t) || is_keyword(upper(t)));
    out += needs_quotes ? "`" + t + "`" : t;
  }
  return out;
}

std::string canonicalize(const std::string& sql) { return detokenize(tokenize(sql)); }

std::vector<std::string> abstract_values(std::vector<std::string>& tokens) {
  std::vector<std::string> values;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    if (!(comparison_ops().contains(tokens[i]) || tokens[i] == "LIMIT")) continue;
    auto& next = tokens[i + 1];
    if (is_literal(next) || is_number(next) || next == kValueSlot) {
      if (next != kValueSlot) values.push_back(next);
      next = kValueSlot;
    }
  }
  return values;
}

std::vector<std::string> fill_values(std::vector<std::string> tokens, const std::vector<std::string>& values) {
  std::size_t k = 0;
  for (auto& t : tokens) {
    if (t != kValueSlot) continue;
    if (k < values.size()) {
      const std::string& v = values[k++];
      if (is_number(v) || is_literal(v)) {
        t = v;
      } else {
        std::string q = "'";
        for (char c : v) q += c == '\'' ? std::string("''") : std::string(1, c);
        t = q + "'";
      }
    } else {
      t = "1";
    }
  }
  return tokens;
}

std::vector<std::string> map_semantic_names(const std::vector<std::string>& tokens, const Schema& s,
                                            NameDirection direction) {
  std::map<std::string, std::string> m;
  auto add = [&](const std::string& orig, const std::string& sem) {
    const auto& from = direction == NameDirection::to_semantic ? orig : sem;
    const auto& to = direction == NameDirection::to_semantic ? sem : orig;
    auto [it, fresh] = m.emplace(from, to);
    if (!fresh && it->second != to)
      throw MappingError("identifier '" + from + "' maps to both '" + it->second + "' and '" + to + "'");
  };
  for (const auto& t : s.tables) {
    add(t.name, t.semantic_name);
    for (const auto& c : t.columns) add(c.name, c.semantic_name);
  }
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::vector<std::string> missing;
  for (const auto& t : tokens) {
    if (!is_identifier(t)) {
      out.push_back(t);
      continue;
    }
    auto it = m.find(t);
    if (it == m.end()) {
      missing.push_back(t);
      out.push_back(t);
    } else {
      out.push_back(it->second);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& x : missing) list += (list.empty() ? "'" : ", '") + x + "'";
    throw MappingError("identifiers not in schema " + s.db_name + ": " + list);
  }
  return out;
}

}  // namespace sdcg::sql
