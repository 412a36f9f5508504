#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "mathkg/embed.hpp"
#include "mathkg/relclf.hpp"
#include "mathkg/tagger.hpp"

namespace mathkg {

/// Everything a pipeline stage reads from or writes to lives in data_dir.
/// File names are fixed (see README).
struct PipelineConfig {
  std::filesystem::path data_dir;
  /// Hand-written pattern rules and manual triples; empty means
  /// data_dir/rules.json and data_dir/manual.tsv, each used only if present.
  std::filesystem::path rules_file;
  std::filesystem::path manual_file;
  std::uint64_t seed = 0;
  double min_tfidf = 6.0;
  double na_ratio = 1.0;
  std::size_t pattern_min_count = 2;
  std::size_t tagger_epochs = 10;
  MaxEntOptions relclf;
  /// Classifier triples below this probability are dropped.
  double min_confidence = 0.5;
  TransEOptions transe;
};

/// MATHKG_DATA_DIR if set, else "data".
std::filesystem::path default_data_dir();

namespace files {
inline constexpr const char* kDocuments = "documents.jsonl";
inline constexpr const char* kGazetteer = "gazetteer.tsv";
inline constexpr const char* kSeeds = "seeds.tsv";
inline constexpr const char* kRules = "rules.json";        // optional hand-written input
inline constexpr const char* kPatterns = "patterns.json";  // rules + discovered
inline constexpr const char* kKer = "ker.conll";
inline constexpr const char* kErc = "erc.tsv";
inline constexpr const char* kTagger = "tagger.json";
inline constexpr const char* kRelclf = "relclf.json";
inline constexpr const char* kMentions = "mentions.tsv";
inline constexpr const char* kRawTriples = "raw_triples.tsv";
inline constexpr const char* kManual = "manual.tsv";  // optional input
inline constexpr const char* kEntities = "entities.jsonl";
inline constexpr const char* kTriples = "triples.tsv";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kEmbeddings = "embeddings.json";
inline constexpr const char* kAnswers = "answers.jsonl";
}  // namespace files

/// "ker.conll" -> "ker.train.conll" etc.
std::string split_name(const std::string& file, const std::string& part);

/// Writes a group of files all-or-nothing: contents go to temporary
/// siblings and are renamed into place by commit(). Anything not committed
/// is removed on destruction.
class StagedOutputs {
 public:
  explicit StagedOutputs(std::filesystem::path dir) : dir_(std::move(dir)) {}
  StagedOutputs(const StagedOutputs&) = delete;
  StagedOutputs& operator=(const StagedOutputs&) = delete;
  ~StagedOutputs();

  void add(const std::string& name, const std::string& content);
  void commit();

 private:
  std::filesystem::path dir_;
  std::vector<std::pair<std::filesystem::path, std::filesystem::path>> pending_;  // tmp, final
};

/// Reads `corpus` (documents JSONL) and stores it as documents.jsonl.
void stage_ingest(const PipelineConfig& cfg, const std::filesystem::path& corpus);
/// Gazetteer, seed triples, patterns and the KER/ERC datasets with their
/// 70/15/15 splits.
void stage_build_datasets(const PipelineConfig& cfg);
void stage_train_tagger(const PipelineConfig& cfg);
void stage_train_relclf(const PipelineConfig& cfg);
/// Runs tagger and classifier over the corpus: mentions.tsv (entity
/// candidates) and raw_triples.tsv (infobox seeds, pattern hits and
/// classifier predictions).
void stage_extract(const PipelineConfig& cfg);
/// entities.jsonl, triples.tsv and manifest.json. Fusion warnings are
/// written to `log`.
void stage_fuse(const PipelineConfig& cfg, std::ostream& log);
void stage_train_embed(const PipelineConfig& cfg);

struct EvalRow {
  std::string name;
  PrfMetrics metrics;
};

/// Precision/recall/F1 rows for KER (span exact match) and ERC (micro over
/// non-NA labels) on the test splits with the trained models.
std::vector<EvalRow> evaluate_models(const PipelineConfig& cfg);
/// Same rows from frozen files: gold and predicted CoNLL for KER, gold and
/// predicted ERC TSV for ERC (same examples in the same order).
std::vector<EvalRow> evaluate_predictions(const std::filesystem::path& ker_gold,
                                          const std::filesystem::path& ker_pred,
                                          const std::filesystem::path& erc_gold,
                                          const std::filesystem::path& erc_pred);
/// Micro precision/recall/F1 over non-NA labels.
PrfMetrics relation_metrics(const std::vector<RelLabel>& gold, const std::vector<RelLabel>& predicted);
std::string format_eval_table(const std::vector<EvalRow>& rows);

/// ingest (when `corpus` is non-empty) through train-embed.
void run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& corpus, std::ostream& log);

}  // namespace mathkg
