#include <deque>
#include <map>
#include <set>

#include "doctest.h"
#include "fixtures.hpp"
#include "mathkg/error.hpp"
#include "mathkg/graphstore.hpp"
#include "oracles.hpp"

using namespace mathkg;

namespace {

std::set<std::string> ids(const KnowledgeGraph& g) {
  std::set<std::string> out;
  for (const auto& [id, e] : g.entities()) out.insert(id);
  return out;
}

std::set<std::string> keys(const std::map<std::string, std::size_t>& m) {
  std::set<std::string> out;
  for (const auto& [k, v] : m) out.insert(k);
  return out;
}

// Independent queue BFS over the triple list; neighbors visited in
// (relation name, neighbor id, forward first) order.
std::vector<std::string> reference_path_nodes(const KnowledgeGraph& g, const std::string& from, const std::string& to) {
  std::map<std::string, std::vector<std::tuple<std::string, std::string, int>>> adj;
  for (const auto& t : g.triples()) {
    adj[t.head].emplace_back(std::string(to_string(t.relation)), t.tail, 0);
    adj[t.tail].emplace_back(std::string(to_string(t.relation)), t.head, 1);
  }
  for (auto& [k, v] : adj) std::sort(v.begin(), v.end());
  std::map<std::string, std::string> parent{{from, ""}};
  std::deque<std::string> q{from};
  while (!q.empty()) {
    auto cur = q.front();
    q.pop_front();
    for (const auto& [rel, nb, dir] : adj[cur]) {
      if (parent.emplace(nb, cur).second) q.push_back(nb);
    }
  }
  if (!parent.contains(to)) return {};
  std::vector<std::string> out;
  for (std::string at = to; !at.empty(); at = parent[at]) out.insert(out.begin(), at);
  return out;
}

}  // namespace

TEST_CASE("add and query") {
  KnowledgeGraph g;
  g.add_entity(oracle::entity("a"));
  g.add_entity(oracle::entity("b"));
  g.add_triple({"a", Relation::Dep, "b", 0.5, Provenance::Classifier});
  g.add_triple({"a", Relation::Dep, "b", 0.7, Provenance::Pattern});
  CHECK(g.num_triples() == 1);
  CHECK(g.find_triple("a", Relation::Dep, "b")->confidence == 0.7);
  CHECK(g.neighbors("a").size() == 1);
  CHECK(g.neighbors("b")[0].direction == Direction::Backward);
  try {
    g.add_triple({"a", Relation::Dep, "zzz", 0.5, Provenance::Manual});
    FAIL("expected NotFoundError");
  } catch (const NotFoundError& e) {
    CHECK(std::string(e.what()).find("zzz") != std::string::npos);
  }
  CHECK_THROWS_AS(g.add_triple({"a", Relation::Dep, "a", 0.5, Provenance::Manual}), InvalidArgument);
  g.add_triple({"b", Relation::Syn, "a", 0.5, Provenance::Manual});
  CHECK(g.has_triple("a", Relation::Syn, "b"));
  CHECK(g.triples()[1].head == "a");

  auto a2 = oracle::entity("a");
  a2.names.insert("alpha");
  a2.attributes["x"] = "1";
  g.add_entity(a2);
  CHECK(g.at("a").names.contains("alpha"));
  CHECK(g.at("a").attributes.at("x") == "1");
  CHECK_THROWS_AS(g.at("nope"), NotFoundError);
}

TEST_CASE("k = 0 keeps only seeds and the triples among them") {
  KnowledgeGraph g;
  for (const char* id : {"a", "b", "c"}) g.add_entity(oracle::entity(id));
  g.add_triple({"a", Relation::Dep, "b", 0.5, Provenance::Manual});
  g.add_triple({"b", Relation::Dep, "c", 0.5, Provenance::Manual});
  const auto s = k_hop_subgraph(g, {"a", "b"}, 0);
  CHECK(ids(s) == std::set<std::string>{"a", "b"});
  CHECK(s.num_triples() == 1);
  CHECK_THROWS_AS(k_hop_subgraph(g, {"q"}, 1), NotFoundError);
}

TEST_CASE("radius fixture: triangle reaches circumscribed circle radius in one hop") {
  const auto g = load_graph(fixtures::data_dir() / "fixtures" / "search");
  const auto s = k_hop_subgraph(g, {"triangle"}, 1);
  CHECK(s.contains("circumscribed circle radius"));
  const auto p = shortest_path(g, "triangle", "circumscribed circle radius");
  REQUIRE(p);
  REQUIRE(p->size() == 1);
  CHECK((*p)[0] == PathStep{"triangle", Relation::Pro, Direction::Forward, "circumscribed circle radius"});
  CHECK(shortest_path(g, "triangle", "triangle")->empty());
}

TEST_CASE("k-hop matches the relaxation oracle on random graphs") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_graph(rng, 50, 60 + rng.uniform_index(40));
    std::vector<std::string> seeds = {"n0" + std::to_string(rng.uniform_index(10))};
    if (trial % 3 == 0) seeds.push_back("n" + std::to_string(10 + rng.uniform_index(40)));
    std::set<std::string> prev;
    for (std::size_t k = 0; k <= 4; ++k) {
      const auto want = oracle::relaxation_distances(g, seeds, k);
      CHECK(hop_distances(g, seeds, k) == want);
      const auto sub = k_hop_subgraph(g, seeds, k);
      const auto got = ids(sub);
      CHECK(got == keys(want));
      // induced: every original triple with both ends inside is kept
      std::size_t inside = 0;
      for (const auto& t : g.triples()) inside += got.contains(t.head) && got.contains(t.tail) ? 1 : 0;
      CHECK(sub.num_triples() == inside);
      CHECK(std::includes(got.begin(), got.end(), prev.begin(), prev.end()));
      prev = got;
    }
    // large k: whole connected component(s)
    CHECK(ids(k_hop_subgraph(g, seeds, 50)) == keys(oracle::relaxation_distances(g, seeds, 50)));
  }
}

TEST_CASE("shortest paths match exhaustive search on small graphs") {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 4 + rng.uniform_index(9);
    const auto g = oracle::random_graph(rng, n, n + rng.uniform_index(n));
    for (int q = 0; q < 5; ++q) {
      const auto from = "n0" + std::to_string(rng.uniform_index(std::min<std::size_t>(n, 10)));
      const auto to = "n0" + std::to_string(rng.uniform_index(std::min<std::size_t>(n, 10)));
      const auto got = shortest_path(g, from, to);
      const auto want = oracle::exhaustive_shortest(g, from, to);
      REQUIRE(got.has_value() == want.has_value());
      if (!got) continue;
      CHECK(got->size() == *want);
      CHECK(oracle::replays(g, from, to, *got));
      std::vector<std::string> nodes{from};
      for (const auto& s : *got) nodes.push_back(s.to);
      CHECK(nodes == reference_path_nodes(g, from, to));
    }
  }
}

TEST_CASE("save, load, save is byte identical") {
  Rng rng(3);
  const auto g = oracle::random_graph(rng, 30, 60);
  fixtures::TempDir a("g1"), b("g2");
  save_graph(g, a.path());
  const auto loaded = load_graph(a.path());
  save_graph(loaded, b.path());
  CHECK(fixtures::slurp(a.path() / "triples.tsv") == fixtures::slurp(b.path() / "triples.tsv"));
  CHECK(fixtures::slurp(a.path() / "entities.jsonl") == fixtures::slurp(b.path() / "entities.jsonl"));
  CHECK(loaded.triples() == g.triples());
  CHECK(graph_manifest(loaded) == graph_manifest(g));
}

TEST_CASE("empty and corrupt files") {
  fixtures::TempDir d("gempty");
  { std::ofstream(d.path() / "entities.jsonl"); }
  { std::ofstream(d.path() / "triples.tsv"); }
  const auto g = load_graph(d.path());
  CHECK(g.num_entities() == 0);
  CHECK(g.num_triples() == 0);

  {
    std::ofstream(d.path() / "entities.jsonl") << "{\"id\":\"a\"}\n{\"id\":\"b\"}\n";
    std::ofstream(d.path() / "triples.tsv") << "a\tDep\tb\t0.5\tmanual\na\tDep\tmissing\t0.5\tmanual\n";
  }
  try {
    load_graph(d.path());
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("manifest counts relations") {
  const auto g = load_graph(fixtures::data_dir() / "fixtures" / "search");
  const auto m = graph_manifest(g);
  CHECK(m.find("\"triples\": 11") != std::string::npos);
  CHECK(m.find("\"Pro\": 5") != std::string::npos);
  CHECK(m.find("\"Aff\": 5") != std::string::npos);
  CHECK(m.find("\"Equ\": 0") != std::string::npos);
}
