#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathkg/graphstore.hpp"

namespace mathkg {

struct AnswerRecord {
  std::string student_id;
  std::string question_id;
  std::vector<std::string> knowledge_points;
  bool correct = false;
  std::int64_t timestamp = 0;

  bool operator==(const AnswerRecord&) const = default;
};

/// {"student_id","question_id","knowledge_points","correct","timestamp"}.
std::string answer_to_json(const AnswerRecord& r);
/// Throws Error on malformed JSON, missing fields, an empty student id or
/// an empty knowledge point list.
AnswerRecord answer_from_json(std::string_view line);
std::vector<AnswerRecord> read_answers(std::istream& in, const std::string& source = "<stream>");
/// Missing file reads as an empty log.
std::vector<AnswerRecord> read_answers(const std::filesystem::path& path);
/// Appends one line and flushes before returning.
void append_answer(const std::filesystem::path& path, const AnswerRecord& r);

enum class MasteryStatus : std::uint8_t { Failed, Mastered, Unobserved };

std::string_view to_string(MasteryStatus s);

struct PointStats {
  std::size_t correct = 0;
  std::size_t incorrect = 0;

  /// Failed iff incorrect > correct.
  MasteryStatus status() const;
  /// incorrect / (incorrect + correct), or the 0.5 prior when unobserved.
  double failure_rate() const;

  bool operator==(const PointStats&) const = default;
};

struct MasteryStats {
  std::map<std::string, PointStats, std::less<>> points;

  /// Counts for an id; zeros when never observed.
  PointStats at(std::string_view id) const;
  MasteryStatus status(std::string_view id) const { return at(id).status(); }
  /// Failed points in id order.
  std::vector<std::string> failed() const;
};

/// Every record of the student adds one to the correct or incorrect count
/// of each knowledge point it lists (duplicates within a record count once).
MasteryStats compute_mastery(const std::vector<AnswerRecord>& records, std::string_view student_id);

struct FaultOptions {
  std::size_t k = 2;
  double gamma = 0.5;
  double evidence_threshold = 0.25;
};

struct FaultNode {
  std::string id;
  std::size_t depth = 0;
  std::optional<std::size_t> parent;
  std::optional<Edge> via;
  double failure_rate = 0.0;
  double score = 0.0;
};

struct FaultTree {
  std::string root;
  std::vector<FaultNode> nodes;  // BFS order, root first
  /// Root-to-node id lists for every non-root node scoring at or above the
  /// evidence threshold, in node order.
  std::vector<std::vector<std::string>> evidence_paths;
};

/// BFS tree of the k-hop neighborhood of a failed root, scored as
/// failure_rate * gamma^depth. Throws InvalidArgument when the root is not
/// failed, k == 0 or gamma is outside (0, 1]; NotFoundError for an unknown
/// root.
FaultTree build_fault_tree(const KnowledgeGraph& graph, const MasteryStats& stats, const std::string& root,
                           const FaultOptions& options = {});

/// Sum of node scores over the trees a node appears in, descending, ties
/// by id. Any id that roots one of the trees is left out. Throws
/// InvalidArgument("nothing to analyze") for an empty list.
std::vector<std::pair<std::string, double>> rank_fault_sources(const std::vector<FaultTree>& trees);

struct FaultReport {
  std::string student_id;
  MasteryStats mastery;
  std::vector<FaultTree> trees;                         // one per failed point, id order
  std::vector<std::pair<std::string, double>> sources;  // empty without trees
};

/// Mastery, one tree per failed point and the source ranking. A failed
/// point missing from the graph raises NotFoundError.
FaultReport analyze_student(const KnowledgeGraph& graph, const std::vector<AnswerRecord>& records,
                            std::string_view student_id, const FaultOptions& options = {});

std::string fault_tree_to_json(const FaultTree& tree);
/// Pretty-free single-line JSON with fixed field order.
std::string fault_report_to_json(const FaultReport& report);

}  // namespace mathkg
