#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"
#include "mathkg/embed.hpp"
#include "mathkg/error.hpp"
#include "mathkg/search.hpp"
#include "oracles.hpp"

using namespace mathkg;

namespace {

const KnowledgeGraph& fixture() {
  static const KnowledgeGraph g = load_graph(fixtures::data_dir() / "fixtures" / "search");
  return g;
}

const EmbeddingTable& fixture_table() {
  static const EmbeddingTable t = [] {
    TransEOptions o;
    o.dim = 16;
    o.epochs = 100;
    o.learning_rate = 0.05;
    return train_transe(fixture(), o);
  }();
  return t;
}

std::set<std::string> words(const std::string& s) {
  std::set<std::string> out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.insert(w);
  return out;
}

// λ = 1 ranking from scratch; questions are lowercase space-separated words
std::vector<std::pair<std::string, double>> lexical_oracle(const KnowledgeGraph& g, const std::string& topic,
                                                           const std::string& question, std::size_t k,
                                                           std::size_t top_n) {
  const auto q = words(question);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [id, d] : oracle::relaxation_distances(g, {topic}, k)) {
    if (id == topic) continue;
    std::set<std::string> name_words;
    for (const auto& n : g.at(id).names) {
      for (const auto& w : words(n)) name_words.insert(w);
    }
    std::size_t hit = 0;
    for (const auto& w : name_words) hit += q.contains(w) ? 1 : 0;
    out.emplace_back(id, static_cast<double>(hit) / static_cast<double>(name_words.size()));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (out.size() > top_n) out.resize(top_n);
  return out;
}

}  // namespace

TEST_CASE("topic of the radius question is triangle") {
  CHECK(detect_topic_entity("the circumscribed circle radius of a triangle", fixture()) == "triangle");
}

TEST_CASE("longest name wins") {
  CHECK(detect_topic_entity("Is every isosceles triangle a polygon?", fixture()) == "isosceles triangle");
  CHECK(detect_topic_entity("polygon or triangle", fixture()) == "polygon");  // earliest of equal length
}

TEST_CASE("no topic entity") {
  CHECK_THROWS_AS(detect_topic_entity("hello world", fixture()), NoTopicEntity);
  CHECK_THROWS_AS(answer_question("hello world", fixture(), fixture_table()), NoTopicEntity);
}

TEST_CASE("tagger fallback picks the entity with the largest token overlap") {
  CrfModel tagger;
  tagger.weights("digit=0")[index_of(Tag::O)] = 1.0;
  tagger.weights("w0=circle")[index_of(Tag::BCon)] = 5.0;
  tagger.weights("w0=radius")[index_of(Tag::ICon)] = 5.0;
  CHECK_THROWS_AS(detect_topic_entity("what is the circle radius", fixture()), NoTopicEntity);
  // both radius entities overlap in two tokens; the smaller id is kept
  CHECK(detect_topic_entity("what is the circle radius", fixture(), &tagger) == "circumscribed circle radius");
}

TEST_CASE("radius question: top result and its path") {
  const auto ans = answer_question("the circumscribed circle radius of a triangle", fixture(), fixture_table());
  CHECK(ans.topic == "triangle");
  REQUIRE_FALSE(ans.results.empty());
  const auto& top = ans.results[0];
  CHECK(top.entity == "circumscribed circle radius");
  REQUIRE(top.path.size() == 1);
  CHECK(top.path[0] == PathStep{"triangle", Relation::Pro, Direction::Forward, "circumscribed circle radius"});
  CHECK(top.lexical_score == 1.0);
}

TEST_CASE("result invariants on the fixture") {
  for (const char* q : {"triangle area", "law of sines and the circumscribed circle radius", "polygon",
                        "right triangle hypotenuse"}) {
    for (double lambda : {0.0, 0.3, 1.0}) {
      const auto ans = answer_question(q, fixture(), fixture_table(), {.k = 2, .lambda = lambda, .top_n = 5});
      CHECK(ans.results.size() <= 5);
      for (std::size_t i = 0; i < ans.results.size(); ++i) {
        const auto& r = ans.results[i];
        CHECK(r.score == doctest::Approx(lambda * r.lexical_score + (1 - lambda) * r.embedding_score));
        CHECK(r.score >= 0.0);
        CHECK(r.score <= 1.0);
        CHECK(oracle::replays(fixture(), ans.topic, r.entity, r.path));
        CHECK(r.path.size() <= 2);
        if (i > 0) {
          const auto& p = ans.results[i - 1];
          CHECK((p.score > r.score || (p.score == r.score && p.entity < r.entity)));
        }
      }
    }
  }
}

TEST_CASE("embedding score follows signed relation vectors") {
  EmbeddingTable t(1, {"a", "b", "c"});
  t.entity("a")[0] = 0.0;
  t.entity("b")[0] = 1.0;
  t.entity("c")[0] = 3.0;
  t.relation(Relation::Dep)[0] = 1.0;
  t.relation(Relation::Aff)[0] = -1.0;
  // a -Dep-> b  then c -Aff-> b traversed backward: 0 + 1 - (-1) = 2, |2 - 3| = 1
  const std::vector<PathStep> path = {{"a", Relation::Dep, Direction::Forward, "b"},
                                      {"b", Relation::Aff, Direction::Backward, "c"}};
  CHECK(path_embedding_score(t, "a", path) == doctest::Approx(0.5));
  CHECK(path_embedding_score(t, "a", {{"a", Relation::Dep, Direction::Forward, "b"}}) == 1.0);
}

TEST_CASE("isolated topic gives no results") {
  KnowledgeGraph g = fixture();
  KnowledgeEntity e;
  e.id = "lonely point";
  e.names = {"lonely point"};
  g.add_entity(e);
  CHECK(answer_question("a lonely point", g, fixture_table()).results.empty());
}

TEST_CASE("bad options") {
  CHECK_THROWS_AS(answer_question("triangle", fixture(), fixture_table(), {.k = 0}), InvalidArgument);
  CHECK_THROWS_AS(answer_question("triangle", fixture(), fixture_table(), {.lambda = 1.5}), InvalidArgument);
}

TEST_CASE("lambda = 1 ranking equals a lexical oracle on random questions") {
  const auto& g = fixture();
  std::vector<std::string> vocab;
  for (const auto& [id, e] : g.entities()) {
    for (const auto& w : words(id)) vocab.push_back(w);
  }
  vocab.insert(vocab.end(), {"what", "is", "the", "of", "a", "how"});
  Rng rng(31);
  int answered = 0;
  for (int trial = 0; trial < 200 && answered < 50; ++trial) {
    std::string q;
    const auto n = 2 + rng.uniform_index(6);
    for (std::size_t i = 0; i < n; ++i) q += (i ? " " : "") + vocab[rng.uniform_index(vocab.size())];
    SearchAnswer ans;
    try {
      ans = answer_question(q, g, fixture_table(), {.k = 2, .lambda = 1.0, .top_n = 4});
    } catch (const NoTopicEntity&) {
      continue;
    }
    ++answered;
    INFO(q);
    const auto want = lexical_oracle(g, ans.topic, q, 2, 4);
    REQUIRE(ans.results.size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      CHECK(ans.results[i].entity == want[i].first);
      CHECK(ans.results[i].lexical_score == doctest::Approx(want[i].second).epsilon(1e-12));
    }
  }
  CHECK(answered == 50);
}

TEST_CASE("answer JSON") {
  const auto ans = answer_question("the circumscribed circle radius of a triangle", fixture(), fixture_table(),
                                   {.top_n = 2});
  const auto j = nlohmann::json::parse(search_answer_to_json(ans));
  CHECK(j["topic"] == "triangle");
  CHECK(j["results"].size() == 2);
  CHECK(j["results"][0]["path"][0]["relation"] == "Pro");
  CHECK(j["results"][0]["path"][0]["direction"] == "forward");
}
