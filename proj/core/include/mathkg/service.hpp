#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mathkg/embed.hpp"
#include "mathkg/faults.hpp"
#include "mathkg/graphstore.hpp"
#include "mathkg/search.hpp"
#include "mathkg/tagger.hpp"

namespace mathkg {

struct ServiceConfig {
  SearchOptions search;
  FaultOptions faults;
  std::size_t subgraph_k = 1;
};

/// Immutable read side; replaced as a whole on reload.
struct Snapshot {
  KnowledgeGraph graph;
  EmbeddingTable embeddings;
  std::optional<CrfModel> tagger;
};

/// Graph, embeddings and tagger snapshot plus the append-only answer log.
/// Readers take a shared_ptr to the current snapshot; reload swaps it.
/// Answer appends are serialized and hit the log file before returning.
class AppState {
 public:
  /// Loads the graph, embeddings.json, tagger.json and answers.jsonl from
  /// data_dir; the last three are optional.
  AppState(std::filesystem::path data_dir, ServiceConfig config = {});
  /// In-memory state; `answer_log` (optional) receives appends.
  AppState(Snapshot snapshot, std::vector<AnswerRecord> answers, std::optional<std::filesystem::path> answer_log,
           ServiceConfig config = {});

  std::shared_ptr<const Snapshot> snapshot() const;
  void reload();

  void append_answer(const AnswerRecord& r);
  std::vector<AnswerRecord> answers() const;

  const ServiceConfig& config() const { return config_; }

 private:
  std::optional<std::filesystem::path> data_dir_;
  std::optional<std::filesystem::path> answer_log_;
  ServiceConfig config_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  mutable std::mutex answers_mutex_;
  std::vector<AnswerRecord> answers_;
};

Snapshot load_snapshot(const std::filesystem::path& data_dir);

struct Response {
  int status = 200;
  std::string body;
};

using QueryParams = std::multimap<std::string, std::string>;

/// Routes (path already percent-decoded):
///   GET  /api/health
///   GET  /api/entity/{id}
///   GET  /api/subgraph?seed=..[&seed=..]&k=
///   GET  /api/search?q=&k=&lambda=&top=
///   POST /api/answers            body: AnswerRecord JSON
///   GET  /api/faults?student=[&k=&gamma=&threshold=]
///   POST /api/reload
/// Errors are {"error": message} with 400, 404 or 500.
Response handle_request(AppState& state, std::string_view method, std::string_view path, const QueryParams& query,
                        std::string_view body);

}  // namespace mathkg
