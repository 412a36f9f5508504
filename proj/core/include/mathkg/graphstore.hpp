#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mathkg/fusion.hpp"
#include "mathkg/triple.hpp"

namespace mathkg {

/// Forward follows a stored triple head -> tail, Backward goes tail -> head.
enum class Direction : std::uint8_t { Forward, Backward };

std::string_view to_string(Direction d);

struct Edge {
  Relation relation;
  Direction direction;
  std::string neighbor;

  bool operator==(const Edge&) const = default;
};

struct PathStep {
  std::string from;
  Relation relation;
  Direction direction;
  std::string to;

  bool operator==(const PathStep&) const = default;
};

/// Directed multigraph of canonical entities. Triples are kept unique per
/// (head, relation, tail) and every triple is traversable both ways.
/// Adjacency lists are ordered by (relation name, neighbor id, direction),
/// which is the expansion order of every traversal below.
class KnowledgeGraph {
 public:
  /// Upsert: names and attributes of an existing entity are merged in,
  /// existing attribute values win. The class of the first insert is kept.
  void add_entity(const KnowledgeEntity& entity);

  /// Symmetric relations are stored head < tail; a duplicate keeps the
  /// larger confidence and the union of provenance. Throws NotFoundError
  /// for an unknown endpoint and InvalidArgument for a self-loop or a
  /// confidence outside [0, 1].
  void add_triple(const Triple& triple);

  bool contains(std::string_view id) const { return entities_.contains(id); }
  const KnowledgeEntity* entity(std::string_view id) const;
  /// Throws NotFoundError.
  const KnowledgeEntity& at(std::string_view id) const;

  const std::map<std::string, KnowledgeEntity, std::less<>>& entities() const { return entities_; }
  /// Sorted by (head, relation, tail).
  std::vector<Triple> triples() const;
  std::optional<Triple> find_triple(std::string_view head, Relation r, std::string_view tail) const;
  /// True when the triple is stored, honoring symmetric orientation.
  bool has_triple(std::string_view head, Relation r, std::string_view tail) const;

  /// Empty for unknown ids.
  const std::vector<Edge>& neighbors(std::string_view id) const;

  std::size_t num_entities() const { return entities_.size(); }
  std::size_t num_triples() const { return triples_.size(); }

 private:
  using Key = std::tuple<std::string, Relation, std::string>;
  std::map<std::string, KnowledgeEntity, std::less<>> entities_;
  std::map<Key, Triple> triples_;
  std::map<std::string, std::vector<Edge>, std::less<>> adjacency_;
};

/// Hop distance of every node within `k` hops of any seed (undirected BFS).
/// Throws NotFoundError for an unknown seed.
std::map<std::string, std::size_t> hop_distances(const KnowledgeGraph& g, const std::vector<std::string>& seeds,
                                                 std::size_t k);

/// Induced subgraph on every node within k hops of the seeds.
KnowledgeGraph k_hop_subgraph(const KnowledgeGraph& g, const std::vector<std::string>& seeds, std::size_t k);

struct BfsNode {
  std::string id;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;  // index into the node list
  std::optional<Edge> via;            // edge taken from the parent
};

/// BFS tree from `root` up to depth k, nodes in discovery order. A node's
/// parent is the first node (in BFS order) that reaches it when edges are
/// expanded in adjacency order.
std::vector<BfsNode> bfs_tree(const KnowledgeGraph& g, const std::string& root, std::size_t k);

/// Root-to-node steps through a bfs_tree.
std::vector<PathStep> tree_path(const std::vector<BfsNode>& tree, std::size_t node);

/// Shortest path by hop count using the bfs_tree tie-break; empty when
/// from == to, nullopt when unreachable. Throws NotFoundError.
std::optional<std::vector<PathStep>> shortest_path(const KnowledgeGraph& g, const std::string& from,
                                                   const std::string& to);

/// Writes entities.jsonl and triples.tsv under `dir` (created if needed).
void save_graph(const KnowledgeGraph& g, const std::filesystem::path& dir);
/// Missing files read as empty. Throws ParseError with the file and line
/// for corrupt content or dangling triple endpoints.
KnowledgeGraph load_graph(const std::filesystem::path& dir);

/// Counts per class and per relation, relations in Dep, Aff, Equ, Ant,
/// Syn, Pro order. Pretty-printed JSON with a trailing newline.
std::string graph_manifest(const KnowledgeGraph& g);

}  // namespace mathkg
