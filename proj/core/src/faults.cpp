#include "mathkg/faults.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>

#include "json.hpp"
#include "mathkg/error.hpp"

namespace mathkg {

using nlohmann::ordered_json;

std::string_view to_string(MasteryStatus s) {
  switch (s) {
    case MasteryStatus::Failed: return "failed";
    case MasteryStatus::Mastered: return "mastered";
    case MasteryStatus::Unobserved: return "unobserved";
  }
  return "?";
}

std::string answer_to_json(const AnswerRecord& r) {
  ordered_json j;
  j["student_id"] = r.student_id;
  j["question_id"] = r.question_id;
  j["knowledge_points"] = r.knowledge_points;
  j["correct"] = r.correct;
  j["timestamp"] = r.timestamp;
  return j.dump();
}

AnswerRecord answer_from_json(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error&) {
    throw Error("answer: invalid JSON");
  }
  if (!j.is_object()) throw Error("answer: expected an object");
  AnswerRecord r;
  try {
    r.student_id = j.at("student_id").get<std::string>();
    r.question_id = j.at("question_id").get<std::string>();
    r.knowledge_points = j.at("knowledge_points").get<std::vector<std::string>>();
    r.correct = j.at("correct").get<bool>();
    r.timestamp = j.contains("timestamp") ? j["timestamp"].get<std::int64_t>() : 0;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("answer: ") + e.what());
  }
  if (r.student_id.empty()) throw Error("answer: empty student_id");
  if (r.knowledge_points.empty()) throw Error("answer: knowledge_points must not be empty");
  for (const auto& kp : r.knowledge_points) {
    if (kp.empty()) throw Error("answer: empty knowledge point");
  }
  return r;
}

std::vector<AnswerRecord> read_answers(std::istream& in, const std::string& source) {
  std::vector<AnswerRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      out.push_back(answer_from_json(line));
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

std::vector<AnswerRecord> read_answers(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_answers(in, path.string());
}

void append_answer(const std::filesystem::path& path, const AnswerRecord& r) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw Error("cannot append to " + path.string());
  out << answer_to_json(r) << '\n';
  out.flush();
  if (!out) throw Error("write failed: " + path.string());
}

MasteryStatus PointStats::status() const {
  if (correct == 0 && incorrect == 0) return MasteryStatus::Unobserved;
  return incorrect > correct ? MasteryStatus::Failed : MasteryStatus::Mastered;
}

double PointStats::failure_rate() const {
  const std::size_t n = correct + incorrect;
  if (n == 0) return 0.5;
  return static_cast<double>(incorrect) / static_cast<double>(n);
}

PointStats MasteryStats::at(std::string_view id) const {
  auto it = points.find(id);
  return it == points.end() ? PointStats{} : it->second;
}

std::vector<std::string> MasteryStats::failed() const {
  std::vector<std::string> out;
  for (const auto& [id, s] : points) {
    if (s.status() == MasteryStatus::Failed) out.push_back(id);
  }
  return out;
}

MasteryStats compute_mastery(const std::vector<AnswerRecord>& records, std::string_view student_id) {
  MasteryStats stats;
  for (const auto& r : records) {
    if (r.student_id != student_id) continue;
    std::set<std::string> seen(r.knowledge_points.begin(), r.knowledge_points.end());
    for (const auto& kp : seen) {
      auto& s = stats.points[kp];
      (r.correct ? s.correct : s.incorrect) += 1;
    }
  }
  return stats;
}

FaultTree build_fault_tree(const KnowledgeGraph& graph, const MasteryStats& stats, const std::string& root,
                           const FaultOptions& options) {
  if (!graph.contains(root)) throw NotFoundError(root);
  if (stats.status(root) != MasteryStatus::Failed) throw InvalidArgument("fault tree root is not failed: " + root);
  if (options.k == 0) throw InvalidArgument("fault tree: k must be >= 1");
  if (!(options.gamma > 0.0 && options.gamma <= 1.0)) throw InvalidArgument("fault tree: gamma must be in (0, 1]");

  FaultTree tree;
  tree.root = root;
  const auto bfs = bfs_tree(graph, root, options.k);
  tree.nodes.reserve(bfs.size());
  for (const auto& b : bfs) {
    FaultNode n;
    n.id = b.id;
    n.depth = b.depth;
    n.parent = b.parent;
    n.via = b.via;
    n.failure_rate = stats.at(b.id).failure_rate();
    n.score = n.failure_rate * std::pow(options.gamma, static_cast<double>(b.depth));
    tree.nodes.push_back(std::move(n));
  }
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].score < options.evidence_threshold) continue;
    std::vector<std::string> path;
    for (std::optional<std::size_t> at = i; at; at = tree.nodes[*at].parent) path.push_back(tree.nodes[*at].id);
    std::reverse(path.begin(), path.end());
    tree.evidence_paths.push_back(std::move(path));
  }
  return tree;
}

std::vector<std::pair<std::string, double>> rank_fault_sources(const std::vector<FaultTree>& trees) {
  if (trees.empty()) throw InvalidArgument("nothing to analyze");
  std::set<std::string> roots;
  for (const auto& t : trees) roots.insert(t.root);
  std::map<std::string, double> total;
  for (const auto& t : trees) {
    for (const auto& n : t.nodes) {
      if (!roots.contains(n.id)) total[n.id] += n.score;
    }
  }
  std::vector<std::pair<std::string, double>> out(total.begin(), total.end());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

FaultReport analyze_student(const KnowledgeGraph& graph, const std::vector<AnswerRecord>& records,
                            std::string_view student_id, const FaultOptions& options) {
  FaultReport report;
  report.student_id = std::string(student_id);
  report.mastery = compute_mastery(records, student_id);
  for (const auto& id : report.mastery.failed()) {
    report.trees.push_back(build_fault_tree(graph, report.mastery, id, options));
  }
  if (!report.trees.empty()) report.sources = rank_fault_sources(report.trees);
  return report;
}

namespace {

ordered_json tree_json(const FaultTree& tree) {
  ordered_json j;
  j["root"] = tree.root;
  ordered_json nodes = ordered_json::array();
  for (const auto& n : tree.nodes) {
    ordered_json o;
    o["id"] = n.id;
    o["depth"] = n.depth;
    o["parent"] = n.parent ? ordered_json(tree.nodes[*n.parent].id) : ordered_json(nullptr);
    if (n.via) {
      o["relation"] = to_string(n.via->relation);
      o["direction"] = to_string(n.via->direction);
    } else {
      o["relation"] = nullptr;
      o["direction"] = nullptr;
    }
    o["failure_rate"] = n.failure_rate;
    o["score"] = n.score;
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  j["evidence_paths"] = tree.evidence_paths;
  return j;
}

}  // namespace

std::string fault_tree_to_json(const FaultTree& tree) { return tree_json(tree).dump(); }

std::string fault_report_to_json(const FaultReport& report) {
  ordered_json j;
  j["student_id"] = report.student_id;
  ordered_json mastery = ordered_json::array();
  for (const auto& [id, s] : report.mastery.points) {
    ordered_json o;
    o["id"] = id;
    o["correct"] = s.correct;
    o["incorrect"] = s.incorrect;
    o["status"] = to_string(s.status());
    mastery.push_back(std::move(o));
  }
  j["mastery"] = std::move(mastery);
  ordered_json trees = ordered_json::array();
  for (const auto& t : report.trees) trees.push_back(tree_json(t));
  j["trees"] = std::move(trees);
  ordered_json sources = ordered_json::array();
  for (const auto& [id, score] : report.sources) {
    ordered_json o;
    o["id"] = id;
    o["score"] = score;
    sources.push_back(std::move(o));
  }
  j["sources"] = std::move(sources);
  if (report.trees.empty()) j["message"] = "nothing to analyze";
  return j.dump();
}

}  // namespace mathkg
