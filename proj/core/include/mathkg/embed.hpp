#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mathkg/graphstore.hpp"

namespace mathkg {

/// Entity and relation vectors of a common dimension. Entities are kept in
/// id order; relations are the six canonical relation types.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::size_t dim, std::vector<std::string> entity_ids);

  std::size_t dim() const { return dim_; }
  const std::vector<std::string>& entity_ids() const { return ids_; }
  bool contains(std::string_view id) const { return index_.contains(std::string(id)); }

  /// Throw NotFoundError for an unknown id.
  std::span<const double> entity(std::string_view id) const;
  std::span<double> entity(std::string_view id);
  std::span<const double> entity_at(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }
  std::span<double> entity_at(std::size_t i) { return {data_.data() + i * dim_, dim_}; }
  std::size_t index_of(std::string_view id) const;

  std::span<const double> relation(Relation r) const;
  std::span<double> relation(Relation r);

  /// Scales every entity vector to unit L2 norm (zero vectors stay zero).
  void normalize_entities();

  bool operator==(const EmbeddingTable&) const = default;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<double> data_;
  std::array<std::vector<double>, kAllRelations.size()> relations_;
};

/// ||h + r - t||_2. Throws NotFoundError.
double score_triple(const EmbeddingTable& table, std::string_view head, Relation r, std::string_view tail);

struct TransEOptions {
  std::size_t dim = 50;
  double margin = 1.0;
  double learning_rate = 0.01;
  std::size_t epochs = 200;
  std::size_t negatives_per_positive = 1;
  std::uint64_t seed = 0;
};

/// A positive triple and a corruption of it, by id.
struct TriplePair {
  std::string head, tail;
  std::string neg_head, neg_tail;
  Relation relation = Relation::Dep;
};

/// Gradient of one margin term over the parameters it touches.
struct MarginGradient {
  std::map<std::string, std::vector<double>> entities;
  std::map<Relation, std::vector<double>> relations;
};

/// max(0, margin + d(h + r, t) - d(h' + r, t')). The gradient is that of
/// the hinge's active branch, and empty when the hinge is inactive.
double margin_loss(const EmbeddingTable& table, const TriplePair& pair, double margin,
                   MarginGradient* gradient = nullptr);

/// Mean margin loss over every stored triple against every corruption
/// (head or tail replaced by any entity) that is not itself stored.
double full_margin_loss(const EmbeddingTable& table, const KnowledgeGraph& graph, double margin);

/// Uniform init in [-6/sqrt(dim), 6/sqrt(dim)], relation vectors scaled to
/// unit norm once and entities normalized. Each epoch shuffles the
/// triples, draws negatives by corrupting head or tail (fair coin) with a
/// uniform entity, rejecting stored triples, takes an SGD step on every
/// violated margin and renormalizes entities. Throws InvalidArgument for an
/// empty graph, dim == 0 or margin <= 0.
EmbeddingTable train_transe(const KnowledgeGraph& graph, const TransEOptions& options);
/// Same, with `on_epoch(epoch, table)` called after the initial
/// normalization (epoch 0) and after every epoch.
template <typename OnEpoch>
EmbeddingTable train_transe(const KnowledgeGraph& graph, const TransEOptions& options, OnEpoch&& on_epoch);

/// Every entity with its score for (head, r, ?), ascending, ties by id.
std::vector<std::pair<std::string, double>> rank_tails(const EmbeddingTable& table, const KnowledgeGraph& graph,
                                                       std::string_view head, Relation r);

struct LinkPredictionMetrics {
  double mean_rank = 0.0;
  double hits_at_1 = 0.0;
  double hits_at_10 = 0.0;
};

/// 1-based raw rank of each triple's tail in rank_tails.
LinkPredictionMetrics evaluate_tails(const EmbeddingTable& table, const KnowledgeGraph& graph,
                                     const std::vector<Triple>& triples);
double hits_at_k(const EmbeddingTable& table, const KnowledgeGraph& graph, const std::vector<Triple>& triples,
                 std::size_t k);

/// {"dim", "entities": {id: [...]}, "relations": {label: [...]}} with
/// round-trip exact floats.
std::string embeddings_to_json(const EmbeddingTable& table);
EmbeddingTable embeddings_from_json(std::string_view json_text);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table);
EmbeddingTable load_embeddings(const std::filesystem::path& path);

namespace detail {
using EpochCallback = void (*)(void*, std::size_t, const EmbeddingTable&);
EmbeddingTable train_transe_impl(const KnowledgeGraph& graph, const TransEOptions& options, EpochCallback cb,
                                 void* ctx);
}  // namespace detail

template <typename OnEpoch>
EmbeddingTable train_transe(const KnowledgeGraph& graph, const TransEOptions& options, OnEpoch&& on_epoch) {
  auto thunk = [](void* ctx, std::size_t epoch, const EmbeddingTable& t) {
    (*static_cast<std::remove_reference_t<OnEpoch>*>(ctx))(epoch, t);
  };
  return detail::train_transe_impl(graph, options, thunk, &on_epoch);
}

}  // namespace mathkg
