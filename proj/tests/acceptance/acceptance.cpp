// One PASS/FAIL line per acceptance criterion. Exit status is the number
// of failed criteria.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "bundled.hpp"
#include "fault_oracle.hpp"
#include "fixtures.hpp"
#include "graphs.hpp"
#include "learning.hpp"
#include "mathkg/embed.hpp"
#include "mathkg/faults.hpp"
#include "mathkg/relclf.hpp"
#include "mathkg/search.hpp"
#include "mathkg/tagger.hpp"
#include "oracles.hpp"
#include "soundness.hpp"

using namespace mathkg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void fail(const std::string& why) {
    if (ok) detail << "first failure: " << why << "; ";
    ok = false;
  }
};

// ---- Viterbi ---------------------------------------------------------

void viterbi_exactness(Outcome& o) {
  Rng rng(20240501);
  const std::vector<std::string> vocab = {"the", "law", "of", "sines", "triangle", "is", "a", "7"};
  std::size_t ties = 0;
  for (int m = 0; m < 200; ++m) {
    const std::size_t n = 1 + rng.uniform_index(8);
    std::vector<std::string> tokens;
    for (std::size_t i = 0; i < n; ++i) tokens.push_back(vocab[rng.uniform_index(vocab.size())]);
    CrfModel model;
    const auto feats = sentence_features(tokens);
    for (const auto& fs_at : feats) {
      for (const auto& f : fs_at) {
        for (auto& w : model.weights(f)) w = rng.uniform(-1.0, 1.0);
      }
    }
    for (auto& row : model.transitions()) {
      for (auto& w : row) w = rng.uniform(-1.0, 1.0);
    }
    for (auto& w : model.start()) w = rng.uniform(-1.0, 1.0);
    // emissions summed here, not by the library
    std::vector<std::array<double, kNumTags>> em(n);
    for (std::size_t i = 0; i < n; ++i) {
      em[i].fill(0.0);
      for (const auto& f : extract_features(tokens, i)) {
        const auto* row = model.find(f);
        for (std::size_t t = 0; t < kNumTags; ++t) em[i][t] += (*row)[t];
      }
    }
    const auto got = decode(model, tokens);
    const auto want = oracle::brute_force_decode(em, model.transitions(), model.start());
    const double s = sequence_score(em, model.transitions(), model.start(), got);
    if (s - want.score != 0.0) o.fail("score gap " + std::to_string(s - want.score) + " in model " + std::to_string(m));
    if (want.ties == 1 && got != want.tags) o.fail("tags differ in model " + std::to_string(m));
    ties += want.ties > 1 ? 1 : 0;
  }
  o.detail << "200 models, lengths 1-8, tied optima " << ties;
}

// ---- gradients --------------------------------------------------------

void gradient_checks(Outcome& o) {
  Rng rng(77);
  const double h = 1e-6;
  {
    const auto xs = learning::separable_erc();
    auto m = train_classifier(xs, {.epochs = 1});
    for (std::size_t i = 0; i < m.num_features(); ++i) {
      for (auto& w : m.row_at(i)) w = rng.uniform(-1.0, 1.0);
    }
    std::vector<double> analytic, numeric;
    for (int k = 0; k < 50; ++k) {
      const auto f = rng.uniform_index(m.num_features());
      const auto l = rng.uniform_index(kNumLabels);
      std::vector<MaxEntModel::Row> grad;
      maxent_loss(m, xs, 0.01, &grad);
      double& w = m.row_at(f)[l];
      const double saved = w;
      w = saved + h;
      const double up = maxent_loss(m, xs, 0.01);
      w = saved - h;
      const double down = maxent_loss(m, xs, 0.01);
      w = saved;
      analytic.push_back(grad[f][l]);
      numeric.push_back((up - down) / (2 * h));
    }
    const double err = oracle::max_relative_error(analytic, numeric);
    if (err > 1e-4) o.fail("maxent relative error " + std::to_string(err));
    o.detail << "maxent max rel err " << err << "; ";
  }
  {
    const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
    std::vector<double> analytic, numeric;
    while (analytic.size() < 50) {
      EmbeddingTable t(6, ids);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        for (auto& v : t.entity_at(i)) v = rng.uniform(-1.0, 1.0);
      }
      for (Relation r : kAllRelations) {
        for (auto& v : t.relation(r)) v = rng.uniform(-1.0, 1.0);
      }
      const TriplePair p{ids[rng.uniform_index(5)], ids[rng.uniform_index(5)], ids[rng.uniform_index(5)],
                         ids[rng.uniform_index(5)], kAllRelations[rng.uniform_index(6)]};
      MarginGradient g;
      if (margin_loss(t, p, 2.0, &g) <= 0.0) continue;
      const auto k = rng.uniform_index(6);
      double* w;
      double a;
      if (rng.coin()) {
        w = &t.relation(p.relation)[k];
        a = g.relations.at(p.relation)[k];
      } else {
        const std::string id = std::vector<std::string>{p.head, p.tail, p.neg_head, p.neg_tail}[rng.uniform_index(4)];
        w = &t.entity(id)[k];
        a = g.entities.at(id)[k];
      }
      const double saved = *w;
      *w = saved + h;
      const double up = margin_loss(t, p, 2.0);
      *w = saved - h;
      const double down = margin_loss(t, p, 2.0);
      *w = saved;
      if (up <= 0.0 || down <= 0.0) continue;
      analytic.push_back(a);
      numeric.push_back((up - down) / (2 * h));
    }
    const double err = oracle::max_relative_error(analytic, numeric);
    if (err > 1e-4) o.fail("transe relative error " + std::to_string(err));
    o.detail << "transe max rel err " << err;
  }
}

// ---- separable learning ----------------------------------------------

void separable_learning(Outcome& o) {
  const auto ker = learning::separable_ker();
  std::size_t epochs_needed = 0;
  for (std::size_t e = 1; e <= 20 && !epochs_needed; ++e) {
    const auto model = train_tagger(ker, {.epochs = e, .seed = 0});
    std::vector<std::vector<Tag>> pred;
    for (const auto& ex : ker) pred.push_back(decode(model, ex.tokens));
    if (evaluate_spans(ker, pred).f1 == 1.0) epochs_needed = e;
  }
  if (!epochs_needed) o.fail("tagger F1 < 1 after 20 epochs");
  o.detail << "tagger F1=1 after " << epochs_needed << " epoch(s) on " << ker.size() << " sentences; ";

  const auto erc = learning::separable_erc();
  const auto m = train_classifier(erc, {.epochs = 200, .seed = 0});
  const double acc = accuracy(m, erc);
  if (acc != 1.0) o.fail("classifier accuracy " + std::to_string(acc));
  o.detail << "classifier accuracy " << acc << " on 13 labels";
}

// ---- distant supervision ----------------------------------------------

void distant_soundness(Outcome& o) {
  fixtures::TempDir d("acc-distant");
  const auto cfg = bundled::config(d.path());
  stage_ingest(cfg, fixtures::data_dir() / "corpus.jsonl");
  stage_build_datasets(cfg);
  const auto r = soundness::check(d.path());
  for (const auto& p : r.problems) o.fail(p);
  if (!r.ok()) o.fail("empty datasets");
  o.detail << r.ker_spans << " KER spans, " << r.ker_bad << " off-gazetteer; " << r.erc_positives
           << " ERC positives (" << r.erc_by_seed << " seed, " << r.erc_by_rule << " rule), " << r.erc_bad
           << " unsupported";
}

// ---- TransE ---------------------------------------------------------

void transe_fit(Outcome& o) {
  const auto g = graphs::transe_fixture();
  const TransEOptions opts;  // defaults
  double initial = 0.0;
  const auto t = train_transe(g, opts, [&](std::size_t epoch, const EmbeddingTable& tab) {
    if (epoch == 0) initial = full_margin_loss(tab, g, opts.margin);
  });
  const double final_loss = full_margin_loss(t, g, opts.margin);
  const auto m = evaluate_tails(t, g, g.triples());
  if (m.hits_at_1 < 0.9) o.fail("hits@1 " + std::to_string(m.hits_at_1));
  if (!(final_loss < initial)) o.fail("loss did not decrease");
  o.detail << "hits@1 " << m.hits_at_1 << ", loss " << initial << " -> " << final_loss << " (dim " << opts.dim
           << ", " << opts.epochs << " epochs)";
}

// ---- graph ------------------------------------------------------------

void graph_oracles(Outcome& o) {
  Rng rng(1234);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_graph(rng, 50, 50 + rng.uniform_index(60));
    const std::vector<std::string> seeds = {"n" + std::to_string(10 + rng.uniform_index(40))};
    for (std::size_t k = 0; k <= 3; ++k) {
      const auto want = oracle::relaxation_distances(g, seeds, k);
      std::set<std::string> want_ids, got_ids;
      for (const auto& [id, dd] : want) want_ids.insert(id);
      const auto sub = k_hop_subgraph(g, seeds, k);
      for (const auto& [id, e] : sub.entities()) got_ids.insert(id);
      if (want_ids != got_ids) o.fail("k-hop nodes differ in graph " + std::to_string(trial));
      // induced: every edge of g with both ends kept, nothing else
      std::vector<Triple> want_edges;
      for (const auto& t : g.triples()) {
        if (want_ids.contains(t.head) && want_ids.contains(t.tail)) want_edges.push_back(t);
      }
      if (sub.triples() != want_edges) o.fail("k-hop edges differ in graph " + std::to_string(trial));
    }
  }
  std::size_t paths = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 3 + rng.uniform_index(10);
    const auto g = oracle::random_graph(rng, n, n + rng.uniform_index(n));
    const auto from = "n0" + std::to_string(rng.uniform_index(std::min<std::size_t>(n, 10)));
    const auto to = "n0" + std::to_string(rng.uniform_index(std::min<std::size_t>(n, 10)));
    const auto got = shortest_path(g, from, to);
    const auto want = oracle::exhaustive_shortest(g, from, to);
    if (got.has_value() != want.has_value() || (got && (got->size() != *want || !oracle::replays(g, from, to, *got)))) {
      o.fail("shortest path mismatch in graph " + std::to_string(trial));
    }
    paths += got ? 1 : 0;
  }
  fixtures::TempDir a("acc-g1"), b("acc-g2");
  const auto g = oracle::random_graph(rng, 40, 90);
  save_graph(g, a.path());
  save_graph(load_graph(a.path()), b.path());
  for (const char* f : {"entities.jsonl", "triples.tsv"}) {
    if (fixtures::slurp(a.path() / f) != fixtures::slurp(b.path() / f)) o.fail(std::string(f) + " differs on re-save");
  }
  o.detail << "100 k-hop graphs x k=0..3, 100 path queries (" << paths << " reachable), round-trip bytes equal";
}

// ---- faults -------------------------------------------------------------

void faults_oracle(Outcome& o) {
  const auto table = fault_oracle::load();
  const auto dir = fixtures::data_dir() / "fixtures" / "faults";
  const auto report = analyze_student(load_graph(dir), read_answers(dir / "answers.jsonl"), table.student,
                                      {table.k, table.gamma, table.threshold});
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
  if (report.mastery.points.size() != table.mastery.size()) o.fail("mastery size");
  bool boundary = false;
  for (const auto& [id, want] : table.mastery) {
    boundary |= std::get<0>(want) == 2 && std::get<1>(want) == 3 && std::get<2>(want) == "failed";
  }
  if (!boundary) o.fail("fixture lacks the 2 correct / 3 incorrect point");
  for (const auto& [id, want] : table.mastery) {
    const auto& [c, i, status] = want;
    const auto got = report.mastery.at(id);
    if (got.correct != c || got.incorrect != i || to_string(got.status()) != status) o.fail("mastery of " + id);
  }
  if (report.trees.size() != table.trees.size()) o.fail("tree count");
  std::size_t nodes = 0;
  for (const auto& tree : report.trees) {
    if (!table.trees.contains(tree.root)) {
      o.fail("unexpected root " + tree.root);
      continue;
    }
    std::map<std::string, std::pair<std::size_t, double>> got;
    for (const auto& n : tree.nodes) got[n.id] = {n.depth, n.score};
    const auto& want = table.trees.at(tree.root);
    if (got.size() != want.size()) o.fail("node set of " + tree.root);
    for (const auto& [id, depth, score] : want) {
      if (!got.contains(id) || got[id].first != depth || !close(got[id].second, score)) o.fail(tree.root + "/" + id);
    }
    if (tree.evidence_paths != table.evidence.at(tree.root)) o.fail("evidence of " + tree.root);
    nodes += tree.nodes.size();
  }
  if (report.sources.size() != table.ranking.size()) o.fail("ranking length");
  for (std::size_t i = 0; i < std::min(report.sources.size(), table.ranking.size()); ++i) {
    if (report.sources[i].first != table.ranking[i].first || !close(report.sources[i].second, table.ranking[i].second)) {
      o.fail("ranking position " + std::to_string(i + 1));
    }
  }
  o.detail << table.mastery.size() << " points, " << report.trees.size() << " trees / " << nodes << " nodes, "
           << table.ranking.size() << " ranked sources";
}

// ---- search -------------------------------------------------------------

void search_reproduction(Outcome& o) {
  const auto g = load_graph(fixtures::data_dir() / "fixtures" / "search");
  const auto table = train_transe(g, {});
  const auto ans = answer_question("the circumscribed circle radius of a triangle", g, table);
  const std::vector<PathStep> fig = {{"triangle", Relation::Pro, Direction::Forward, "circumscribed circle radius"}};
  if (ans.topic != "triangle") o.fail("topic " + ans.topic);
  if (ans.results.empty() || ans.results[0].entity != "circumscribed circle radius" || ans.results[0].path != fig) {
    o.fail("top result");
  }

  std::vector<std::string> vocab = {"what", "is", "the", "of", "a"};
  for (const auto& [id, e] : g.entities()) {
    std::istringstream in(id);
    for (std::string w; in >> w;) vocab.push_back(w);
  }
  auto words = [](const std::string& s) {
    std::set<std::string> out;
    std::istringstream in(s);
    for (std::string w; in >> w;) out.insert(w);
    return out;
  };
  Rng rng(55);
  int answered = 0;
  while (answered < 50) {
    std::string q;
    const auto n = 2 + rng.uniform_index(6);
    for (std::size_t i = 0; i < n; ++i) q += (i ? " " : "") + vocab[rng.uniform_index(vocab.size())];
    SearchAnswer got;
    try {
      got = answer_question(q, g, table, {.k = 2, .lambda = 1.0, .top_n = 5});
    } catch (const NoTopicEntity&) {
      continue;
    }
    ++answered;
    const auto qw = words(q);
    std::vector<std::pair<std::string, double>> want;
    for (const auto& [id, dd] : oracle::relaxation_distances(g, {got.topic}, 2)) {
      if (id == got.topic) continue;
      std::set<std::string> nw;
      for (const auto& name : g.at(id).names) {
        for (const auto& w : words(name)) nw.insert(w);
      }
      std::size_t hit = 0;
      for (const auto& w : nw) hit += qw.contains(w) ? 1 : 0;
      want.emplace_back(id, static_cast<double>(hit) / static_cast<double>(nw.size()));
    }
    std::sort(want.begin(), want.end(),
              [](const auto& a, const auto& b) { return a.second != b.second ? a.second > b.second : a.first < b.first; });
    if (want.size() > 5) want.resize(5);
    bool same = want.size() == got.results.size();
    for (std::size_t i = 0; same && i < want.size(); ++i) {
      same = want[i].first == got.results[i].entity && std::abs(want[i].second - got.results[i].score) <= 1e-12;
    }
    if (!same) o.fail("lambda=1 ranking differs for \"" + q + "\"");
  }
  o.detail << "top result via 1-step Pro path; 50 random lambda=1 queries agree with the lexical oracle";
}

// ---- end to end -----------------------------------------------------------

void end_to_end(Outcome& o) {
  fixtures::TempDir a("acc-e2e-a"), b("acc-e2e-b");
  bundled::run(a.path());
  bundled::run(b.path());
  for (const char* f : {"entities.jsonl", "triples.tsv", "embeddings.json", "manifest.json"}) {
    if (fixtures::slurp(a.path() / f) != fixtures::slurp(b.path() / f)) o.fail(std::string(f) + " differs");
  }
  const auto manifest = fixtures::slurp(a.path() / "manifest.json");
  if (manifest != fixtures::slurp(bundled::frozen_manifest())) o.fail("manifest differs from the frozen copy");
  const auto j = nlohmann::json::parse(manifest);
  o.detail << j["entities"] << " entities, " << j["triples"] << " triples, relations " << j["relations"].dump();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"viterbi-exactness", viterbi_exactness},     {"gradient-checks", gradient_checks},
      {"separable-learning", separable_learning},   {"distant-soundness", distant_soundness},
      {"transe-fit", transe_fit},                   {"graph-oracles", graph_oracles},
      {"faults-oracle", faults_oracle},             {"search-reproduction", search_reproduction},
      {"end-to-end-determinism", end_to_end},
  };
  const std::map<std::string, double> budgets = {
      {"viterbi-exactness", 10.0}, {"gradient-checks", 30.0}, {"transe-fit", 20.0}};
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run(o);
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (auto it = budgets.find(name); it != budgets.end() && secs > it->second) {
      o.fail("over the " + std::to_string(static_cast<int>(it->second)) + " s budget");
    }
    failed += o.ok ? 0 : 1;
    std::printf("%s %-24s %.2fs  %s\n", o.ok ? "PASS" : "FAIL", name.c_str(), secs, o.detail.str().c_str());
  }
  return failed;
}
