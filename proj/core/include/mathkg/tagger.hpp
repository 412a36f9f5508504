#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mathkg/dataset.hpp"
#include "mathkg/distant.hpp"
#include "mathkg/relation.hpp"

namespace mathkg {

using TagScores = std::array<double, kNumTags>;
/// transitions[prev][next], tags in kTagset order.
using TransitionMatrix = std::array<TagScores, kNumTags>;

/// Linear-chain model over the fixed BIO tagset. Transitions into I-X from
/// anything but B-X/I-X (and from the sentence start) are masked to -inf at
/// decode time; the stored weights for those cells stay 0 and finite.
class CrfModel {
 public:
  CrfModel() = default;

  const TagScores* find(std::string_view feature) const;
  TagScores& weights(const std::string& feature);
  std::size_t num_features() const { return rows_.size(); }
  const std::vector<std::string>& feature_names() const { return names_; }
  const TagScores& row_at(std::size_t i) const { return rows_[i]; }
  TagScores& row_at(std::size_t i) { return rows_[i]; }
  std::size_t index_of_feature(std::string_view feature) const;

  TransitionMatrix& transitions() { return transitions_; }
  const TransitionMatrix& transitions() const { return transitions_; }
  TagScores& start() { return start_; }
  const TagScores& start() const { return start_; }

  /// Gazetteer used for the gaz= feature; absent means the feature is off.
  const std::optional<Gazetteer>& gazetteer() const { return gazetteer_; }
  void set_gazetteer(std::optional<Gazetteer> g) { gazetteer_ = std::move(g); }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<std::string> names_;
  std::vector<TagScores> rows_;
  std::unordered_map<std::string, std::size_t> index_;
  TransitionMatrix transitions_{};
  TagScores start_{};
  std::optional<Gazetteer> gazetteer_;
};

/// Feature strings for one position: w0, lw0, w-2..w+2 (BOS/EOS beyond the
/// edges), pre1-3/suf1-3 up to the surface length, digit=0/1 and, with a
/// gazetteer, gaz=<BIO tag of the gazetteer match covering the token>.
/// Throws InvalidArgument when position is out of range.
std::vector<std::string> extract_features(const std::vector<std::string>& tokens, std::size_t position,
                                          const Gazetteer* gazetteer = nullptr);
/// All positions at once (one gazetteer pass).
std::vector<std::vector<std::string>> sentence_features(const std::vector<std::string>& tokens,
                                                        const Gazetteer* gazetteer = nullptr);

/// Emission score table for a sentence under `model`.
std::vector<TagScores> emission_scores(const CrfModel& model, const std::vector<std::string>& tokens);

/// Score of a full tag sequence, summed left to right exactly as Viterbi
/// accumulates it; -inf for ill-formed sequences.
double sequence_score(const std::vector<TagScores>& emissions, const TransitionMatrix& transitions,
                      const TagScores& start, const std::vector<Tag>& tags);

/// Exact Viterbi under the BIO mask. Among equal-scoring paths the last tag
/// takes the lowest tagset index, then each backpointer does the same.
std::vector<Tag> viterbi(const std::vector<TagScores>& emissions, const TransitionMatrix& transitions,
                         const TagScores& start);

std::vector<Tag> decode(const CrfModel& model, const std::vector<std::string>& tokens);

struct TaggerOptions {
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
};

/// Averaged perceptron: per example decode, on mismatch add phi(gold) -
/// phi(pred); the returned weights are the average over every example
/// visit. Examples are reshuffled each epoch. Throws on an empty dataset.
CrfModel train_tagger(const std::vector<KerExample>& dataset, const TaggerOptions& options,
                      std::optional<Gazetteer> gazetteer = std::nullopt);

/// Precision/recall/F1 with 0/0 := 0.
struct PrfMetrics {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static PrfMetrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};
using SpanMetrics = PrfMetrics;

/// Exact-match (start, end, class) span scoring, micro-averaged. Throws
/// InvalidArgument on a count or per-sentence length mismatch.
SpanMetrics evaluate_spans(const std::vector<KerExample>& gold, const std::vector<std::vector<Tag>>& predicted);

std::string crf_to_json(const CrfModel& model);
CrfModel crf_from_json(std::string_view json_text);
void save_crf(const std::filesystem::path& path, const CrfModel& model);
CrfModel load_crf(const std::filesystem::path& path);

}  // namespace mathkg
