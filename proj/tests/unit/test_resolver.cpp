#include <doctest.h>

#include <set>

#include "sdcg/resolver.hpp"
#include "support/random_grammar.hpp"
#include "unit/fixtures.hpp"

using namespace sdcg;

namespace {

Goal known(std::vector<std::string> tokens) { return {fixtures::query_goal(), std::move(tokens)}; }

const char* kExample1b = R"(
query(DB) --> ["SELECT"], column(DB, T), ["FROM"], table(DB, T).
column(DB, T) --> {column_domain(DB, T, C)}, [C].
table(DB, T) --> [T].
)";

Grammar example_1b() {
  Grammar g = parse_grammar_source(kExample1b);
  for (auto& f : domain_facts(fixtures::dog_kennels())) g.add_fact(f);
  return g;
}

Goal example_goal() { return {Atom{"query", {Term::constant("dog_kennels")}}, std::nullopt}; }

}  // namespace

TEST_CASE("known sequence has exactly one derivation") {
  auto f = derive(known({"SELECT", "prof_id", "FROM", "Treatments"}), fixtures::query_grammar());
  CHECK(f.count_derivations() == 1.0);
  auto ds = support::forest_derivations(f);
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].tokens == std::vector<std::string>{"SELECT", "prof_id", "FROM", "Treatments"});
  // query, table (oracle branch 3), column (oracle branch 3), token, token
  auto leaves = ds[0].derivation.leaves();
  REQUIRE(leaves.size() == 2);
  CHECK(std::get<OracleLeaf>(leaves[0]).key.oracle_id == "table_lm");
  CHECK(std::get<OracleLeaf>(leaves[0]).index == 2);
  CHECK(std::get<OracleLeaf>(leaves[1]).key.oracle_id == "column_lm");
  CHECK(std::get<OracleLeaf>(leaves[1]).index == 2);
  // only the surviving table's column request is recorded... plus the table request
  CHECK(f.requests().size() >= 2);
  CHECK(f.requests()[0].domain == std::vector<std::string>{"Dogs", "Professionals", "Treatments"});
}

TEST_CASE("schema mismatch gives an empty forest") {
  auto f = derive(known({"SELECT", "treat_id", "FROM", "Dogs"}), fixtures::query_grammar());
  CHECK(f.empty());
  CHECK(f.count_derivations() == 0.0);
}

TEST_CASE("unknown tokens enumerate every table/column pair") {
  auto f = derive({fixtures::query_goal(), std::nullopt}, fixtures::query_grammar());
  CHECK(f.count_derivations() == 7.0);

  auto g = example_1b();
  auto f2 = derive(example_goal(), g);
  CHECK(f2.count_derivations() == 7.0);
  auto e = enumerate_derivations(example_goal(), g, 100);
  CHECK_FALSE(e.truncated);
  REQUIRE(e.derivations.size() == 7);
  std::set<std::vector<std::string>> distinct;
  for (const auto& d : e.derivations) distinct.insert(d.tokens);
  CHECK(distinct.size() == 7);
  CHECK(distinct.count({"SELECT", "abandoned_yn", "FROM", "Dogs"}));
  CHECK_FALSE(distinct.count({"SELECT", "treat_id", "FROM", "Dogs"}));
  CHECK(support::sorted_keys(support::forest_derivations(f2)) == support::sorted_keys(e.derivations));
}

TEST_CASE("known enumeration is the matching subset") {
  auto g = example_1b();
  auto all = enumerate_derivations(example_goal(), g, 100);
  std::vector<std::string> seq{"SELECT", "dog_id", "FROM", "Treatments"};
  auto sub = enumerate_derivations({example_goal().atom, seq}, g, 100);
  std::vector<DerivedSequence> expect;
  for (const auto& d : all.derivations)
    if (d.tokens == seq) expect.push_back(d);
  REQUIRE(expect.size() == 1);
  CHECK(support::sorted_keys(sub.derivations) == support::sorted_keys(expect));
}

TEST_CASE("two rules producing the same sequence") {
  Grammar g = parse_grammar_source("s --> [\"a\"]\ns --> [\"a\"]");
  auto e = enumerate_derivations({Atom{"s", {}}, std::nullopt}, g, 10);
  REQUIRE(e.derivations.size() == 2);
  CHECK(e.derivations[0].tokens == e.derivations[1].tokens);
  CHECK_FALSE(e.derivations[0].derivation == e.derivations[1].derivation);
  CHECK(derive({Atom{"s", {}}, std::vector<std::string>{"a"}}, g).count_derivations() == 2.0);
}

TEST_CASE("enumeration truncates at max") {
  auto e = enumerate_derivations(example_goal(), example_1b(), 3);
  CHECK(e.truncated);
  CHECK(e.derivations.size() == 3);
  auto exact = enumerate_derivations(example_goal(), example_1b(), 7);
  CHECK_FALSE(exact.truncated);
}

TEST_CASE("for_each_derivation honours the limit") {
  auto f = derive(example_goal(), example_1b());
  std::size_t seen = 0;
  CHECK(f.for_each_derivation([&](const DerivedSequence&) { return ++seen, true; }, 4) == 4);
  CHECK(seen == 4);
}

TEST_CASE("resolution errors") {
  SUBCASE("unknown nonterminal") {
    Grammar g = parse_grammar_source("s --> t(X)");
    CHECK_THROWS_WITH_AS(derive({Atom{"s", {}}, std::nullopt}, g), doctest::Contains("t/1"), ResolutionError);
    CHECK_THROWS_AS(enumerate_derivations({Atom{"s", {}}, std::nullopt}, g, 5), ResolutionError);
  }
  SUBCASE("depth limit names the predicate") {
    Grammar g = parse_grammar_source("s --> [\"a\"], s\ns --> []");
    std::vector<std::string> many(600, "a");
    CHECK_THROWS_WITH_AS(derive({Atom{"s", {}}, many}, g), doctest::Contains("s/0"), ResolutionError);
    CHECK_THROWS_WITH_AS(enumerate_derivations({Atom{"s", {}}, many}, g, 5), doctest::Contains("s/0"),
                         ResolutionError);
    std::vector<std::string> few(20, "a");
    CHECK(derive({Atom{"s", {}}, few}, g).count_derivations() == 1.0);
  }
  SUBCASE("left recursion") {
    Grammar g = parse_grammar_source("s --> s, [\"a\"]\ns --> [\"a\"]");
    CHECK_THROWS_AS(derive({Atom{"s", {}}, std::vector<std::string>{"a", "a"}}, g), ResolutionError);
  }
  SUBCASE("empty oracle domain") {
    Grammar g = parse_grammar_source(
        "dom(\"x\", \"1\").\ns(T) --> [C] :: oracle(lm, [\"q\"], C, dom(T, C), \"p\")");
    CHECK_NOTHROW(derive({Atom{"s", {Term::constant("x")}}, std::nullopt}, g));
    CHECK_THROWS_AS(derive({Atom{"s", {Term::constant("y")}}, std::nullopt}, g), ResolutionError);
  }
  SUBCASE("unbound terminal with unknown tokens") {
    Grammar g = parse_grammar_source("s(X) --> [X]");
    CHECK_THROWS_AS(derive({Atom{"s", {Term::variable("X", VarId{1})}}, std::nullopt}, g), ResolutionError);
    auto f = derive({Atom{"s", {Term::variable("X", VarId{1})}}, std::vector<std::string>{"z"}}, g);
    CHECK(f.count_derivations() == 1.0);
  }
}

TEST_CASE("forest matches plain SLD and is tabling-neutral on random grammars") {
  std::mt19937_64 rng(1234);
  int checked = 0, known_checked = 0;
  for (int round = 0; round < 150; ++round) {
    auto rg = support::random_grammar(rng);
    auto e = enumerate_derivations(rg.goal, rg.grammar, 10'000);
    if (e.truncated) continue;
    ++checked;
    auto keys = support::sorted_keys(e.derivations);
    auto on = derive(rg.goal, rg.grammar, {.tabling = true});
    auto off = derive(rg.goal, rg.grammar, {.tabling = false});
    INFO(rg.source);
    CHECK(on.count_derivations() == static_cast<double>(e.derivations.size()));
    CHECK(support::sorted_keys(support::forest_derivations(on)) == keys);
    CHECK(support::sorted_keys(support::forest_derivations(off)) == keys);
    CHECK(support::sorted_keys(support::forest_derivations(derive(rg.goal, rg.grammar))) == keys);

    if (!e.derivations.empty()) {
      const auto& seq = e.derivations[rng() % e.derivations.size()].tokens;
      std::vector<DerivedSequence> expect;
      for (const auto& d : e.derivations)
        if (d.tokens == seq) expect.push_back(d);
      Goal g{rg.goal.atom, seq};
      CHECK(support::sorted_keys(support::forest_derivations(derive(g, rg.grammar))) ==
            support::sorted_keys(expect));
      CHECK(support::sorted_keys(enumerate_derivations(g, rg.grammar, 10'000).derivations) ==
            support::sorted_keys(expect));
      ++known_checked;
    }
  }
  CHECK(checked > 100);
  CHECK(known_checked > 50);
}

TEST_CASE("replay reproduces the derivation chosen by a tree") {
  auto f = derive(known({"SELECT", "prof_id", "FROM", "Treatments"}), fixtures::query_grammar());
  auto ds = support::forest_derivations(f);
  REQUIRE(ds.size() == 1);
  // root alternative: the only one of the root answer
  const auto& root = f.answer(f.roots()[0]);
  REQUIRE(root.alternatives.size() == 1);
  std::function<DerivationTree(DerivationForest::ChildRef)> first = [&](DerivationForest::ChildRef r) {
    DerivationTree t;
    t.alternative = f.answer(r).alternatives.front();
    for (const auto& item : f.alternatives()[t.alternative].items)
      if (const auto* c = std::get_if<DerivationForest::ChildRef>(&item)) t.children.push_back(first(*c));
    return t;
  };
  auto seq = f.replay(first(f.roots()[0]));
  CHECK(seq == ds[0]);
}

TEST_CASE("greedy follows the most probable branch") {
  Grammar g = parse_grammar_source(R"(
    0.4 :: s --> ["a"], t
    0.6 :: s --> ["b"], t
    0.5 :: t --> ["x"]
    0.5 :: t --> ["y"]
  )");
  Parameters params;
  LeafProbability prob = [&](const LeafHandle& h, const OracleRequest*) { return params.value(h); };
  auto r = greedy_derive({Atom{"s", {}}, std::nullopt}, g, prob);
  REQUIRE(r);
  CHECK(r->tokens == std::vector<std::string>{"b", "x"});
  // a failing best branch backtracks to the next one
  auto k = greedy_derive({Atom{"s", {}}, std::vector<std::string>{"a", "y"}}, g, prob);
  REQUIRE(k);
  CHECK(k->tokens == std::vector<std::string>{"a", "y"});
  CHECK_FALSE(greedy_derive({Atom{"s", {}}, std::vector<std::string>{"c"}}, g, prob));
}
