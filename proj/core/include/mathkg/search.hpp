#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathkg/embed.hpp"
#include "mathkg/error.hpp"
#include "mathkg/graphstore.hpp"
#include "mathkg/tagger.hpp"

namespace mathkg {

/// Raised when no entity of the graph can be anchored in a question.
class NoTopicEntity : public Error {
 public:
  NoTopicEntity() : Error("no topic entity") {}
};

/// Longest match of any entity name or alias (lowercased tokens) in the
/// question; ties by earliest start, then id. Entities whose origin
/// attribute marks them as recalled from infobox values or free text are
/// only tried when no other entity matches. With a tagger, its predicted
/// spans are matched by token overlap as a last resort. Throws
/// NoTopicEntity.
std::string detect_topic_entity(std::string_view question, const KnowledgeGraph& graph,
                                const CrfModel* tagger = nullptr);

struct SearchResult {
  std::string entity;
  double score = 0.0;
  double lexical_score = 0.0;
  double embedding_score = 0.0;
  std::vector<PathStep> path;
};

struct SearchOptions {
  std::size_t k = 2;
  double lambda = 0.5;
  std::size_t top_n = 10;
};

struct SearchAnswer {
  std::string topic;
  std::vector<SearchResult> results;
};

/// |question tokens ∩ name tokens| / |name tokens| over all names of the
/// entity, as lowercased token sets.
double lexical_score(std::string_view question, const KnowledgeEntity& entity);

/// 1 / (1 + ||v_topic + sum of signed relation vectors - v_end||); 0 when
/// an endpoint has no vector.
double path_embedding_score(const EmbeddingTable& table, const std::string& topic, const std::vector<PathStep>& path);

/// Ranks every non-topic entity within k hops of the topic entity by
/// lambda * lexical + (1 - lambda) * embedding, descending, ties by id.
/// Throws InvalidArgument for lambda outside [0, 1] or k == 0.
SearchAnswer answer_question(std::string_view question, const KnowledgeGraph& graph, const EmbeddingTable& table,
                             const SearchOptions& options = {}, const CrfModel* tagger = nullptr);

std::string search_answer_to_json(const SearchAnswer& answer);

}  // namespace mathkg
