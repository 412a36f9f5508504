#include "mathkg/search.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "json.hpp"
#include "mathkg/corpus.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

namespace {

std::vector<std::string> lowered_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(s)) out.push_back(text::to_lower(t.surface));
  return out;
}

bool secondary_origin(const KnowledgeEntity& e) {
  auto it = e.attributes.find("origin");
  return it != e.attributes.end() && it->second != "document";
}

struct Match {
  std::size_t length = 0;
  std::size_t start = 0;
  std::string id;

  // longer, then earlier, then smaller id
  bool better_than(const Match& o) const {
    if (length != o.length) return length > o.length;
    if (start != o.start) return start < o.start;
    return id < o.id;
  }
};

std::optional<Match> best_name_match(const std::vector<std::string>& q, const KnowledgeGraph& graph, bool secondary) {
  std::optional<Match> best;
  for (const auto& [id, e] : graph.entities()) {
    if (secondary_origin(e) != secondary) continue;
    for (const auto& name : e.names) {
      const auto n = lowered_tokens(name);
      if (n.empty() || n.size() > q.size()) continue;
      for (std::size_t s = 0; s + n.size() <= q.size(); ++s) {
        if (!std::equal(n.begin(), n.end(), q.begin() + static_cast<std::ptrdiff_t>(s))) continue;
        Match m{n.size(), s, id};
        if (!best || m.better_than(*best)) best = m;
        break;  // later starts of the same name never win
      }
    }
  }
  return best;
}

}  // namespace

std::string detect_topic_entity(std::string_view question, const KnowledgeGraph& graph, const CrfModel* tagger) {
  const auto q = lowered_tokens(question);
  if (q.empty()) throw NoTopicEntity();
  for (bool secondary : {false, true}) {
    if (auto m = best_name_match(q, graph, secondary)) return m->id;
  }
  if (tagger) {
    std::vector<std::string> raw;
    for (const auto& t : tokenize(question)) raw.push_back(t.surface);
    const auto tags = decode(*tagger, raw);
    for (const auto& span : spans_from_tags(tags)) {
      std::set<std::string> span_tokens(q.begin() + static_cast<std::ptrdiff_t>(span.span.start),
                                        q.begin() + static_cast<std::ptrdiff_t>(span.span.end));
      std::size_t best_overlap = 0;
      std::string best_id;
      for (const auto& [id, e] : graph.entities()) {
        std::set<std::string> name_tokens;
        for (const auto& name : e.names) {
          for (auto& t : lowered_tokens(name)) name_tokens.insert(std::move(t));
        }
        std::size_t overlap = 0;
        for (const auto& t : span_tokens) overlap += name_tokens.count(t);
        if (overlap > best_overlap) {
          best_overlap = overlap;
          best_id = id;
        }
      }
      if (best_overlap > 0) return best_id;
    }
  }
  throw NoTopicEntity();
}

double lexical_score(std::string_view question, const KnowledgeEntity& entity) {
  const auto qv = lowered_tokens(question);
  const std::set<std::string> q(qv.begin(), qv.end());
  std::set<std::string> n;
  for (const auto& name : entity.names) {
    for (auto& t : lowered_tokens(name)) n.insert(std::move(t));
  }
  if (n.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& t : n) hit += q.count(t);
  return static_cast<double>(hit) / static_cast<double>(n.size());
}

double path_embedding_score(const EmbeddingTable& table, const std::string& topic, const std::vector<PathStep>& path) {
  const std::string& end = path.empty() ? topic : path.back().to;
  if (!table.contains(topic) || !table.contains(end)) return 0.0;
  const auto h = table.entity(topic);
  const auto t = table.entity(end);
  std::vector<double> v(h.begin(), h.end());
  for (const auto& step : path) {
    const auto r = table.relation(step.relation);
    const double sign = step.direction == Direction::Forward ? 1.0 : -1.0;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += sign * r[i];
  }
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double d = v[i] - t[i];
    s += d * d;
  }
  return 1.0 / (1.0 + std::sqrt(s));
}

SearchAnswer answer_question(std::string_view question, const KnowledgeGraph& graph, const EmbeddingTable& table,
                             const SearchOptions& options, const CrfModel* tagger) {
  if (!(options.lambda >= 0.0 && options.lambda <= 1.0)) throw InvalidArgument("lambda must be in [0, 1]");
  if (options.k == 0) throw InvalidArgument("k must be >= 1");
  SearchAnswer answer;
  answer.topic = detect_topic_entity(question, graph, tagger);
  // the BFS tree restricted to depth k covers exactly the k-hop subgraph,
  // and its paths are the tie-broken shortest paths
  const auto tree = bfs_tree(graph, answer.topic, options.k);
  for (std::size_t i = 1; i < tree.size(); ++i) {
    SearchResult r;
    r.entity = tree[i].id;
    r.path = tree_path(tree, i);
    r.lexical_score = lexical_score(question, graph.at(r.entity));
    r.embedding_score = path_embedding_score(table, answer.topic, r.path);
    r.score = options.lambda * r.lexical_score + (1.0 - options.lambda) * r.embedding_score;
    answer.results.push_back(std::move(r));
  }
  std::sort(answer.results.begin(), answer.results.end(), [](const SearchResult& a, const SearchResult& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.entity < b.entity;
  });
  if (answer.results.size() > options.top_n) answer.results.resize(options.top_n);
  return answer;
}

std::string search_answer_to_json(const SearchAnswer& answer) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["topic"] = answer.topic;
  ordered_json results = ordered_json::array();
  for (const auto& r : answer.results) {
    ordered_json o;
    o["entity"] = r.entity;
    o["score"] = r.score;
    o["lexical_score"] = r.lexical_score;
    o["embedding_score"] = r.embedding_score;
    ordered_json path = ordered_json::array();
    for (const auto& s : r.path) {
      ordered_json step;
      step["from"] = s.from;
      step["relation"] = to_string(s.relation);
      step["direction"] = to_string(s.direction);
      step["to"] = s.to;
      path.push_back(std::move(step));
    }
    o["path"] = std::move(path);
    results.push_back(std::move(o));
  }
  j["results"] = std::move(results);
  return j.dump();
}

}  // namespace mathkg
