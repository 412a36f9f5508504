#include "mathkg/graphstore.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

namespace {

bool edge_less(const Edge& a, const Edge& b) {
  const auto ra = to_string(a.relation);
  const auto rb = to_string(b.relation);
  if (ra != rb) return ra < rb;
  if (a.neighbor != b.neighbor) return a.neighbor < b.neighbor;
  return a.direction < b.direction;
}

void insert_edge(std::vector<Edge>& list, Edge e) {
  list.insert(std::upper_bound(list.begin(), list.end(), e, edge_less), std::move(e));
}

}  // namespace

std::string_view to_string(Direction d) { return d == Direction::Forward ? "forward" : "backward"; }

void KnowledgeGraph::add_entity(const KnowledgeEntity& entity) {
  if (entity.id.empty()) throw InvalidArgument("entity id must be non-empty");
  auto [it, inserted] = entities_.emplace(entity.id, entity);
  auto& stored = it->second;
  if (!inserted) {
    stored.names.insert(entity.names.begin(), entity.names.end());
    for (const auto& [k, v] : entity.attributes) stored.attributes.emplace(k, v);
  }
  stored.names.insert(stored.id);
  adjacency_.try_emplace(entity.id);
}

void KnowledgeGraph::add_triple(const Triple& triple) {
  if (!contains(triple.head)) throw NotFoundError(triple.head);
  if (!contains(triple.tail)) throw NotFoundError(triple.tail);
  if (triple.head == triple.tail) throw InvalidArgument("self-loop on '" + triple.head + "'");
  if (!(triple.confidence >= 0.0 && triple.confidence <= 1.0)) {
    throw InvalidArgument("confidence outside [0, 1]");
  }
  Triple t = triple;
  if (is_symmetric(t.relation) && t.tail < t.head) std::swap(t.head, t.tail);
  Key key{t.head, t.relation, t.tail};
  auto [it, inserted] = triples_.emplace(key, t);
  if (!inserted) {
    it->second.confidence = std::max(it->second.confidence, t.confidence);
    it->second.provenance = it->second.provenance | t.provenance;
    return;
  }
  insert_edge(adjacency_[t.head], {t.relation, Direction::Forward, t.tail});
  insert_edge(adjacency_[t.tail], {t.relation, Direction::Backward, t.head});
}

const KnowledgeEntity* KnowledgeGraph::entity(std::string_view id) const {
  auto it = entities_.find(id);
  return it == entities_.end() ? nullptr : &it->second;
}

const KnowledgeEntity& KnowledgeGraph::at(std::string_view id) const {
  if (const auto* e = entity(id)) return *e;
  throw NotFoundError(std::string(id));
}

std::vector<Triple> KnowledgeGraph::triples() const {
  std::vector<Triple> out;
  out.reserve(triples_.size());
  for (const auto& [k, t] : triples_) out.push_back(t);
  return out;
}

std::optional<Triple> KnowledgeGraph::find_triple(std::string_view head, Relation r, std::string_view tail) const {
  std::string h(head), t(tail);
  if (is_symmetric(r) && t < h) std::swap(h, t);
  auto it = triples_.find(Key{h, r, t});
  if (it == triples_.end()) return std::nullopt;
  return it->second;
}

bool KnowledgeGraph::has_triple(std::string_view head, Relation r, std::string_view tail) const {
  return find_triple(head, r, tail).has_value();
}

const std::vector<Edge>& KnowledgeGraph::neighbors(std::string_view id) const {
  static const std::vector<Edge> kEmpty;
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? kEmpty : it->second;
}

std::map<std::string, std::size_t> hop_distances(const KnowledgeGraph& g, const std::vector<std::string>& seeds,
                                                 std::size_t k) {
  std::map<std::string, std::size_t> dist;
  std::deque<std::string> queue;
  for (const auto& s : seeds) {
    if (!g.contains(s)) throw NotFoundError(s);
    if (dist.emplace(s, 0).second) queue.push_back(s);
  }
  while (!queue.empty()) {
    auto cur = std::move(queue.front());
    queue.pop_front();
    const auto d = dist[cur];
    if (d == k) continue;
    for (const auto& e : g.neighbors(cur)) {
      if (dist.emplace(e.neighbor, d + 1).second) queue.push_back(e.neighbor);
    }
  }
  return dist;
}

KnowledgeGraph k_hop_subgraph(const KnowledgeGraph& g, const std::vector<std::string>& seeds, std::size_t k) {
  const auto dist = hop_distances(g, seeds, k);
  KnowledgeGraph sub;
  for (const auto& [id, d] : dist) sub.add_entity(g.at(id));
  for (const auto& [id, d] : dist) {
    for (const auto& e : g.neighbors(id)) {
      if (e.direction != Direction::Forward || !dist.contains(e.neighbor)) continue;
      sub.add_triple(*g.find_triple(id, e.relation, e.neighbor));
    }
  }
  return sub;
}

std::vector<BfsNode> bfs_tree(const KnowledgeGraph& g, const std::string& root, std::size_t k) {
  if (!g.contains(root)) throw NotFoundError(root);
  std::vector<BfsNode> nodes;
  std::set<std::string, std::less<>> seen{root};
  nodes.push_back({root, 0, std::nullopt, std::nullopt});
  for (std::size_t head = 0; head < nodes.size(); ++head) {
    if (nodes[head].depth == k) continue;
    // copy: push_back below may reallocate
    const std::string cur = nodes[head].id;
    const std::size_t depth = nodes[head].depth;
    for (const auto& e : g.neighbors(cur)) {
      if (!seen.insert(e.neighbor).second) continue;
      nodes.push_back({e.neighbor, depth + 1, head, e});
    }
  }
  return nodes;
}

std::vector<PathStep> tree_path(const std::vector<BfsNode>& tree, std::size_t node) {
  std::vector<PathStep> steps;
  while (tree[node].parent) {
    const auto p = *tree[node].parent;
    steps.push_back({tree[p].id, tree[node].via->relation, tree[node].via->direction, tree[node].id});
    node = p;
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

std::optional<std::vector<PathStep>> shortest_path(const KnowledgeGraph& g, const std::string& from,
                                                   const std::string& to) {
  if (!g.contains(from)) throw NotFoundError(from);
  if (!g.contains(to)) throw NotFoundError(to);
  if (from == to) return std::vector<PathStep>{};
  const auto tree = bfs_tree(g, from, g.num_entities());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (tree[i].id == to) return tree_path(tree, i);
  }
  return std::nullopt;
}

void save_graph(const KnowledgeGraph& g, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "entities.jsonl", std::ios::binary);
    if (!out) throw Error("cannot write " + (dir / "entities.jsonl").string());
    for (const auto& [id, e] : g.entities()) out << entity_to_json(e) << '\n';
  }
  std::ofstream out(dir / "triples.tsv", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "triples.tsv").string());
  write_triples(out, g.triples());
}

KnowledgeGraph load_graph(const std::filesystem::path& dir) {
  KnowledgeGraph g;
  const auto epath = dir / "entities.jsonl";
  if (std::filesystem::exists(epath)) {
    std::ifstream in(epath);
    for (const auto& e : read_entities(in, epath.string())) g.add_entity(e);
  }
  const auto tpath = dir / "triples.tsv";
  if (std::filesystem::exists(tpath)) {
    std::ifstream in(tpath);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      try {
        g.add_triple(parse_triple_line(line));
      } catch (const Error& e) {
        throw ParseError(tpath.string(), lineno, e.what());
      }
    }
  }
  return g;
}

std::string graph_manifest(const KnowledgeGraph& g) {
  nlohmann::ordered_json m;
  std::size_t con = 0, leg = 0;
  for (const auto& [id, e] : g.entities()) (e.entity_class == EntityClass::Leg ? leg : con)++;
  m["entities"] = g.num_entities();
  m["concept_entities"] = con;
  m["theorem_entities"] = leg;
  m["triples"] = g.num_triples();
  nlohmann::ordered_json rel;
  for (Relation r : kAllRelations) rel[std::string(to_string(r))] = 0;
  for (const auto& t : g.triples()) rel[std::string(to_string(t.relation))] = rel[std::string(to_string(t.relation))].get<std::size_t>() + 1;
  m["relations"] = rel;
  return m.dump(2) + "\n";
}

}  // namespace mathkg
