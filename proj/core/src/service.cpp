#include "mathkg/service.hpp"

#include <charconv>
#include <ctime>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/fusion.hpp"
#include "mathkg/pipeline.hpp"
#include "mathkg/text.hpp"

namespace fs = std::filesystem;

namespace mathkg {

using nlohmann::ordered_json;

Snapshot load_snapshot(const fs::path& data_dir) {
  Snapshot s;
  s.graph = load_graph(data_dir);
  if (fs::exists(data_dir / files::kEmbeddings)) s.embeddings = load_embeddings(data_dir / files::kEmbeddings);
  if (fs::exists(data_dir / files::kTagger)) s.tagger = load_crf(data_dir / files::kTagger);
  return s;
}

AppState::AppState(fs::path data_dir, ServiceConfig config)
    : data_dir_(data_dir), answer_log_(data_dir / files::kAnswers), config_(config) {
  snapshot_ = std::make_shared<const Snapshot>(load_snapshot(data_dir));
  answers_ = read_answers(*answer_log_);
}

AppState::AppState(Snapshot snapshot, std::vector<AnswerRecord> answers, std::optional<fs::path> answer_log,
                   ServiceConfig config)
    : answer_log_(std::move(answer_log)),
      config_(config),
      snapshot_(std::make_shared<const Snapshot>(std::move(snapshot))),
      answers_(std::move(answers)) {}

std::shared_ptr<const Snapshot> AppState::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return snapshot_;
}

void AppState::reload() {
  if (!data_dir_) return;
  auto fresh = std::make_shared<const Snapshot>(load_snapshot(*data_dir_));
  std::lock_guard lock(snapshot_mutex_);
  snapshot_ = std::move(fresh);
}

void AppState::append_answer(const AnswerRecord& r) {
  std::lock_guard lock(answers_mutex_);
  if (answer_log_) mathkg::append_answer(*answer_log_, r);
  answers_.push_back(r);
}

std::vector<AnswerRecord> AppState::answers() const {
  std::lock_guard lock(answers_mutex_);
  return answers_;
}

namespace {

class BadRequest : public Error {
 public:
  using Error::Error;
};

Response json_response(int status, const ordered_json& j) { return {status, j.dump()}; }

Response error_response(int status, const std::string& message) {
  ordered_json j;
  j["error"] = message;
  return json_response(status, j);
}

std::optional<std::string> param(const QueryParams& q, const std::string& key) {
  auto it = q.find(key);
  if (it == q.end()) return std::nullopt;
  return it->second;
}

std::size_t size_param(const QueryParams& q, const std::string& key, std::size_t fallback) {
  auto v = param(q, key);
  if (!v) return fallback;
  std::size_t out = 0;
  auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw BadRequest("parameter '" + key + "' must be a non-negative integer");
  }
  return out;
}

double double_param(const QueryParams& q, const std::string& key, double fallback) {
  auto v = param(q, key);
  if (!v) return fallback;
  try {
    return text::parse_double(*v);
  } catch (const Error&) {
    throw BadRequest("parameter '" + key + "' must be a number");
  }
}

ordered_json triple_json(const Triple& t) {
  ordered_json o;
  o["head"] = t.head;
  o["relation"] = to_string(t.relation);
  o["tail"] = t.tail;
  o["confidence"] = t.confidence;
  o["provenance"] = to_string(t.provenance);
  return o;
}

Response get_health(const AppState& state) {
  const auto snap = state.snapshot();
  ordered_json j;
  j["status"] = "ok";
  j["entities"] = snap->graph.num_entities();
  j["triples"] = snap->graph.num_triples();
  j["embedding_dim"] = snap->embeddings.dim();
  j["answers"] = state.answers().size();
  return json_response(200, j);
}

Response get_entity(const AppState& state, const std::string& id) {
  const auto snap = state.snapshot();
  const auto* e = snap->graph.entity(id);
  if (!e) throw NotFoundError(id);
  return {200, entity_to_json(*e)};
}

Response get_subgraph(const AppState& state, const QueryParams& q) {
  std::vector<std::string> seeds;
  auto [lo, hi] = q.equal_range("seed");
  for (auto it = lo; it != hi; ++it) seeds.push_back(it->second);
  if (seeds.empty()) throw BadRequest("missing parameter 'seed'");
  const std::size_t k = size_param(q, "k", state.config().subgraph_k);
  const auto snap = state.snapshot();
  const auto sub = k_hop_subgraph(snap->graph, seeds, k);
  ordered_json j;
  j["seeds"] = seeds;
  j["k"] = k;
  ordered_json ents = ordered_json::array();
  for (const auto& [id, e] : sub.entities()) ents.push_back(ordered_json::parse(entity_to_json(e)));
  j["entities"] = std::move(ents);
  ordered_json triples = ordered_json::array();
  for (const auto& t : sub.triples()) triples.push_back(triple_json(t));
  j["triples"] = std::move(triples);
  return json_response(200, j);
}

Response get_search(const AppState& state, const QueryParams& q) {
  auto question = param(q, "q");
  if (!question || question->find_first_not_of(" \t") == std::string::npos) throw BadRequest("missing parameter 'q'");
  SearchOptions opts = state.config().search;
  opts.k = size_param(q, "k", opts.k);
  opts.lambda = double_param(q, "lambda", opts.lambda);
  opts.top_n = size_param(q, "top", opts.top_n);
  if (opts.k == 0) throw BadRequest("k must be >= 1");
  if (!(opts.lambda >= 0.0 && opts.lambda <= 1.0)) throw BadRequest("lambda must be in [0, 1]");
  const auto snap = state.snapshot();
  try {
    const auto answer =
        answer_question(*question, snap->graph, snap->embeddings, opts, snap->tagger ? &*snap->tagger : nullptr);
    return {200, search_answer_to_json(answer)};
  } catch (const NoTopicEntity& e) {
    return error_response(404, e.what());
  }
}

Response post_answer(AppState& state, std::string_view body) {
  AnswerRecord r;
  try {
    auto j = nlohmann::json::parse(body);
    if (j.is_object() && !j.contains("timestamp")) {
      j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    }
    r = answer_from_json(j.dump());
  } catch (const nlohmann::json::parse_error&) {
    throw BadRequest("body is not valid JSON");
  } catch (const Error& e) {
    throw BadRequest(e.what());
  }
  const auto snap = state.snapshot();
  for (const auto& kp : r.knowledge_points) {
    if (!snap->graph.contains(kp)) throw NotFoundError(kp);
  }
  state.append_answer(r);
  return {200, answer_to_json(r)};
}

Response get_faults(const AppState& state, const QueryParams& q) {
  auto student = param(q, "student");
  if (!student || student->empty()) throw BadRequest("missing parameter 'student'");
  FaultOptions opts = state.config().faults;
  opts.k = size_param(q, "k", opts.k);
  opts.gamma = double_param(q, "gamma", opts.gamma);
  opts.evidence_threshold = double_param(q, "threshold", opts.evidence_threshold);
  if (opts.k == 0) throw BadRequest("k must be >= 1");
  if (!(opts.gamma > 0.0 && opts.gamma <= 1.0)) throw BadRequest("gamma must be in (0, 1]");
  const auto snap = state.snapshot();
  const auto report = analyze_student(snap->graph, state.answers(), *student, opts);
  return {200, fault_report_to_json(report)};
}

}  // namespace

Response handle_request(AppState& state, std::string_view method, std::string_view path, const QueryParams& query,
                        std::string_view body) {
  try {
    constexpr std::string_view kEntityPrefix = "/api/entity/";
    if (method == "GET") {
      if (path == "/api/health") return get_health(state);
      if (path.starts_with(kEntityPrefix) && path.size() > kEntityPrefix.size()) {
        return get_entity(state, std::string(path.substr(kEntityPrefix.size())));
      }
      if (path == "/api/subgraph") return get_subgraph(state, query);
      if (path == "/api/search") return get_search(state, query);
      if (path == "/api/faults") return get_faults(state, query);
    } else if (method == "POST") {
      if (path == "/api/answers") return post_answer(state, body);
      if (path == "/api/reload") {
        state.reload();
        return get_health(state);
      }
    }
    return error_response(404, "no route for " + std::string(method) + " " + std::string(path));
  } catch (const BadRequest& e) {
    return error_response(400, e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, e.what());
  } catch (const NotFoundError& e) {
    return error_response(404, e.what());
  } catch (const std::exception& e) {
    return error_response(500, e.what());
  }
}

}  // namespace mathkg
