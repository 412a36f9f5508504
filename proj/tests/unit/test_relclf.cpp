#include <cmath>
#include <map>

#include "doctest.h"
#include "fixtures.hpp"
#include "learning.hpp"
#include "mathkg/error.hpp"
#include "mathkg/random.hpp"
#include "mathkg/relclf.hpp"
#include "mathkg/text.hpp"
#include "oracles.hpp"

using namespace mathkg;

namespace {

std::vector<std::string> toks(std::string_view s) { return surfaces(tokenize(s)); }

// cross-entropy recomputed from scratch: scores = sum of feature rows
double reference_loss(const MaxEntModel& m, const std::vector<ErcExample>& xs, double l2) {
  double total = 0.0;
  for (const auto& ex : xs) {
    std::vector<double> s(kNumLabels, 0.0);
    for (const auto& f : relation_features(ex.tokens, ex.e1, ex.e2, m.rules())) {
      if (const auto* row = m.find(f)) {
        for (std::size_t l = 0; l < kNumLabels; ++l) s[l] += (*row)[l];
      }
    }
    double z = 0.0;
    for (double v : s) z += std::exp(v);
    total += -(s[index_of(ex.label)] - std::log(z));
  }
  double reg = 0.0;
  for (std::size_t i = 0; i < m.num_features(); ++i) {
    for (double w : m.row_at(i)) reg += w * w;
  }
  return total / static_cast<double>(xs.size()) + 0.5 * l2 * reg;
}

}  // namespace

TEST_CASE("rule templates are validated") {
  const auto r = make_rule("aff", "E1 is a Special kind of E2", RelLabel::AffFwd);
  CHECK(r.items == std::vector<std::string>{"E1", "is", "a", "special", "kind", "of", "E2"});
  CHECK(template_text(r) == "E1 is a special kind of E2");
  CHECK_THROWS_AS(make_rule("x", "E1 is", RelLabel::AffFwd), InvalidArgument);
  CHECK_THROWS_AS(make_rule("x", "E2 is E1", RelLabel::AffFwd), InvalidArgument);
  CHECK_THROWS_AS(make_rule("x", "E1 E1 E2", RelLabel::AffFwd), InvalidArgument);
  CHECK_THROWS_AS(make_rule("x", "E1 is E2", RelLabel::NA), InvalidArgument);
}

TEST_CASE("bundled rules file parses and round-trips") {
  const auto rules = read_rules(fixtures::data_dir() / "rules.json");
  CHECK(rules.size() == 7);
  CHECK(parse_rules(rules_to_json(rules)) == rules);
  CHECK_THROWS(parse_rules("[{\"id\": \"a\", \"template\": \"E1 x E2\", \"relation\": \"Foo\"}]"));
  CHECK_THROWS(parse_rules("{}"));
}

TEST_CASE("patterns match literally, with wildcards and leading slack") {
  const auto aff = make_rule("aff", "E1 is a special kind of E2", RelLabel::AffFwd);
  const auto t1 = toks("An isosceles triangle is a special kind of triangle.");
  const std::vector<EntityMention> m1 = {{{1, 3}, "isosceles triangle", EntityClass::Con},
                                         {{8, 9}, "triangle", EntityClass::Con}};
  const auto h1 = match_patterns(t1, m1, {aff});
  REQUIRE(h1.size() == 1);
  CHECK(h1[0].label == RelLabel::AffFwd);
  CHECK(h1[0].rule_id == "aff");

  const auto ant = make_rule("ant", "E1 must not be E2", RelLabel::AntFwd);
  const auto t2 = toks("If a number is even, it must not be odd.");
  const std::vector<EntityMention> m2 = {{{4, 5}, "even", EntityClass::Con}, {{10, 11}, "odd", EntityClass::Con}};
  REQUIRE(match_patterns(t2, m2, {ant}).size() == 1);
  CHECK(match_patterns(t2, m2, {ant}, {.leading_slack = 1}).empty());

  const auto star = make_rule("s", "E1 belongs to * * which called E2", RelLabel::EquFwd);
  const auto t3 = toks("x belongs to the figure which called y");
  const std::vector<EntityMention> m3 = {{{0, 1}, "x", EntityClass::Con}, {{7, 8}, "y", EntityClass::Con}};
  CHECK(match_patterns(t3, m3, {star}).size() == 1);
  // wildcard-led gaps get no slack
  const auto t4 = toks("x belongs to the big figure which called y");
  const std::vector<EntityMention> m4 = {{{0, 1}, "x", EntityClass::Con}, {{8, 9}, "y", EntityClass::Con}};
  CHECK(match_patterns(t4, m4, {star}).empty());

  const auto pro = make_rule("p", "E1 of a E2", RelLabel::ProBwd);
  const auto t5 = toks("The area of a parallelogram");
  const std::vector<EntityMention> m5 = {{{1, 2}, "area", EntityClass::Con}, {{4, 5}, "p", EntityClass::Con}};
  CHECK(match_patterns(t5, m5, {pro})[0].label == RelLabel::ProBwd);
}

TEST_CASE("pattern discovery keeps repeated gaps with a unique majority") {
  std::vector<ErcExample> xs;
  auto add = [&](std::string_view s, RelLabel l) {
    ErcExample e;
    e.tokens = toks(s);
    e.e1 = {0, 1};
    e.e2 = {e.tokens.size() - 1, e.tokens.size()};
    e.label = l;
    xs.push_back(e);
  };
  add("a is required for b", RelLabel::DepFwd);
  add("c is required for d", RelLabel::DepFwd);
  add("e is Required for f", RelLabel::AffFwd);
  add("g touches h", RelLabel::SynFwd);
  add("i touches j", RelLabel::AntFwd);
  add("k once l", RelLabel::SynFwd);
  add("m is required for n", RelLabel::NA);
  const auto rules = discover_patterns(xs, 2);
  REQUIRE(rules.size() == 1);
  CHECK(template_text(rules[0]) == "E1 is required for E2");
  CHECK(rules[0].relation == RelLabel::DepFwd);
  CHECK(rules[0].id == "auto-001");
}

TEST_CASE("relation features for one pair") {
  const auto t = toks("so x is part of y here");
  const auto f = relation_features(t, {1, 2}, {5, 6}, {});
  const std::vector<std::string> want = {"bias",        "btw=is",      "btw=part",   "btw=of",      "m1=x",
                                         "m2=y",        "m1[-2]=BOS",  "m1[-1]=so",  "m1[+1]=is",   "m1[+2]=part",
                                         "m2[-2]=part", "m2[-1]=of",   "m2[+1]=here", "m2[+2]=EOS"};
  REQUIRE(f.size() == want.size() + 1);
  CHECK(std::vector<std::string>(f.begin(), f.end() - 1) == want);
  CHECK(f.back().rfind("dist=", 0) == 0);
  CHECK_THROWS_AS(relation_features(t, {1, 3}, {2, 4}, {}), InvalidArgument);
  CHECK_THROWS_AS(relation_features(t, {5, 6}, {1, 2}, {}), InvalidArgument);
  CHECK_THROWS_AS(relation_features(t, {1, 1}, {2, 3}, {}), InvalidArgument);
  CHECK_THROWS_AS(relation_features(t, {1, 2}, {6, 8}, {}), InvalidArgument);
}

TEST_CASE("loss matches a from-scratch cross-entropy") {
  const auto xs = learning::separable_erc();
  auto m = train_classifier(xs, {.epochs = 2, .seed = 4});
  CHECK(maxent_loss(m, xs, 0.0) == doctest::Approx(reference_loss(m, xs, 0.0)).epsilon(1e-12));
  CHECK(maxent_loss(m, xs, 0.3) == doctest::Approx(reference_loss(m, xs, 0.3)).epsilon(1e-12));
  // untrained model: uniform softmax
  auto zero = train_classifier(xs, {.epochs = 0});
  CHECK(maxent_loss(zero, xs, 0.0) == doctest::Approx(std::log(13.0)));
}

TEST_CASE("analytic gradient agrees with central differences") {
  const auto xs = learning::separable_erc();
  auto m = train_classifier(xs, {.epochs = 1, .seed = 2});
  Rng rng(8);
  for (std::size_t i = 0; i < m.num_features(); ++i) {
    for (auto& w : m.row_at(i)) w += rng.uniform(-0.5, 0.5);
  }
  const double l2 = 0.05;
  std::vector<MaxEntModel::Row> grad;
  maxent_loss(m, xs, l2, &grad);
  std::vector<double> analytic, numeric;
  const double h = 1e-5;
  for (int k = 0; k < 50; ++k) {
    const auto f = rng.uniform_index(m.num_features());
    const auto l = rng.uniform_index(kNumLabels);
    double& w = m.row_at(f)[l];
    const double saved = w;
    w = saved + h;
    const double up = maxent_loss(m, xs, l2);
    w = saved - h;
    const double down = maxent_loss(m, xs, l2);
    w = saved;
    analytic.push_back(grad[f][l]);
    numeric.push_back((up - down) / (2 * h));
  }
  CHECK(oracle::max_relative_error(analytic, numeric) < 1e-6);
}

TEST_CASE("13-label separable set is learned") {
  const auto xs = learning::separable_erc();
  const auto m = train_classifier(xs, {.epochs = 200, .seed = 0});
  CHECK(accuracy(m, xs) == 1.0);
  for (const auto& ex : xs) {
    double sum = 0.0;
    for (double p : classify_relation(m, ex.tokens, ex.e1, ex.e2).probabilities) sum += p;
    CHECK(sum == doctest::Approx(1.0));
  }
}

TEST_CASE("adding a constant to a feature row leaves predictions unchanged") {
  const auto xs = learning::separable_erc();
  auto m = train_classifier(xs, {.epochs = 20});
  std::vector<RelationPrediction> before;
  for (const auto& ex : xs) before.push_back(classify_relation(m, ex.tokens, ex.e1, ex.e2));
  for (auto& w : m.row_at(m.index_of_feature("bias"))) w += 3.25;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const auto after = classify_relation(m, xs[i].tokens, xs[i].e1, xs[i].e2);
    CHECK(after.label == before[i].label);
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      CHECK(after.probabilities[l] == doctest::Approx(before[i].probabilities[l]).epsilon(1e-12));
    }
  }
}

TEST_CASE("fired patterns become features and the model carries its rules") {
  const auto rule = make_rule("ant", "E1 must not be E2", RelLabel::AntFwd);
  ErcExample ex;
  ex.tokens = toks("even must not be odd");
  ex.e1 = {0, 1};
  ex.e2 = {4, 5};
  ex.label = RelLabel::AntFwd;
  const auto f = relation_features(ex.tokens, ex.e1, ex.e2, {rule});
  CHECK(f.back() == "pat=ant");
  const auto m = train_classifier({ex}, {.epochs = 5}, {rule});
  CHECK(m.find("pat=ant") != nullptr);
  CHECK(m.rules().size() == 1);
}

TEST_CASE("model JSON round-trip") {
  const auto xs = learning::separable_erc();
  const auto m = train_classifier(xs, {.epochs = 10}, {make_rule("r", "E1 cue0 E2", RelLabel::DepFwd)});
  const auto text = maxent_to_json(m);
  const auto back = maxent_from_json(text);
  CHECK(maxent_to_json(back) == text);
  CHECK(back.rules() == m.rules());
  for (const auto& ex : xs) {
    CHECK(classify_relation(back, ex.tokens, ex.e1, ex.e2).probabilities ==
          classify_relation(m, ex.tokens, ex.e1, ex.e2).probabilities);
  }
  fixtures::TempDir dir("maxent");
  save_maxent(dir.path() / "m.json", m);
  CHECK(maxent_to_json(load_maxent(dir.path() / "m.json")) == text);
  CHECK_THROWS(maxent_from_json("[]"));
  CHECK_THROWS_AS(train_classifier({}, {}), InvalidArgument);
}

namespace {

ErcExample pair_example(std::string_view sentence, std::string_view e1, std::string_view e2, RelLabel label) {
  ErcExample ex;
  ex.tokens = toks(sentence);
  auto find = [&](std::string_view phrase, std::size_t from) {
    const auto p = toks(phrase);
    for (std::size_t i = from; i + p.size() <= ex.tokens.size(); ++i) {
      bool ok = true;
      for (std::size_t k = 0; k < p.size(); ++k) ok = ok && text::to_lower(ex.tokens[i + k]) == p[k];
      if (ok) return Span{i, i + p.size()};
    }
    FAIL("phrase not found: " << phrase);
    return Span{};
  };
  ex.e1 = find(e1, 0);
  ex.e2 = find(e2, ex.e1.end);
  ex.label = label;
  return ex;
}

std::vector<ErcExample> table1_examples() {
  return {
      pair_example("Learning addition helps us understand the definition of subtraction.", "addition", "subtraction",
                   RelLabel::DepFwd),
      pair_example("An isosceles triangle is a special kind of triangle.", "isosceles triangle", "triangle",
                   RelLabel::AffFwd),
      pair_example("orthogon belongs to plane geometry which called rectangle", "orthogon", "rectangle",
                   RelLabel::EquFwd),
      pair_example("if a number is even, it must not be odd", "even", "odd", RelLabel::AntFwd),
      pair_example("Circles are both axial symmetric and centrally symmetric figure", "axial symmetric",
                   "symmetric figure", RelLabel::SynFwd),
      pair_example("the area of a parallelogram is base times height", "area", "parallelogram", RelLabel::ProFwd),
      pair_example("orthogon belongs to plane geometry which called rectangle", "orthogon", "plane geometry",
                   RelLabel::NA),
      pair_example("An isosceles triangle is a special kind of triangle.", "an", "isosceles triangle", RelLabel::NA),
  };
}

}  // namespace

TEST_CASE("six relation example sentences are classified to their labels after training") {
  const auto xs = table1_examples();
  const auto m = train_classifier(xs, {.epochs = 200, .seed = 0});
  for (const auto& ex : xs) {
    CHECK(to_string(classify_relation(m, ex.tokens, ex.e1, ex.e2).label) == to_string(ex.label));
  }
  const auto held_out = pair_example("Learning multiplication helps us understand division", "multiplication",
                                     "division", RelLabel::DepFwd);
  CHECK(classify_relation(m, held_out.tokens, held_out.e1, held_out.e2).label == RelLabel::DepFwd);
}

TEST_CASE("zero-weight model is uniform and picks the first label") {
  const auto xs = learning::separable_erc();
  const auto m = train_classifier(xs, {.epochs = 0});
  const auto p = classify_relation(m, xs[5].tokens, xs[5].e1, xs[5].e2);
  CHECK(p.label == RelLabel::DepFwd);
  for (double v : p.probabilities) CHECK(v == doctest::Approx(1.0 / 13.0));
  CHECK_THROWS_AS(classify_relation(m, xs[5].tokens, xs[5].e1, xs[5].e1), InvalidArgument);
}

TEST_CASE("firing set is unchanged by unrelated trailing tokens") {
  const auto rules = read_rules(fixtures::data_dir() / "rules.json");
  auto t = toks("if a number is even, it must not be odd");
  const std::vector<EntityMention> m = {{{4, 5}, "even", EntityClass::Con}, {{10, 11}, "odd", EntityClass::Con}};
  const auto before = match_patterns(t, m, rules);
  CHECK(before.size() == 1);
  for (const char* extra : {"and", "so", "on", "."}) {
    t.push_back(extra);
    CHECK(match_patterns(t, m, rules) == before);
  }
  CHECK(match_patterns(toks("nothing to see"), {}, rules).empty());
}
