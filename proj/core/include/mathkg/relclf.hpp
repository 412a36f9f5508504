#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mathkg/dataset.hpp"
#include "mathkg/relation.hpp"

namespace mathkg {

/// Surface pattern such as "E1 is a special kind of E2". Template items are
/// lowercased literals, "*" (any single token) or the slots "E1"/"E2";
/// E1 precedes E2 and each appears exactly once.
struct PatternRule {
  std::string id;
  std::vector<std::string> items;
  RelLabel relation = RelLabel::NA;

  bool operator==(const PatternRule&) const = default;
};

/// Validates and builds a rule from its space-joined template. Throws
/// InvalidArgument on a malformed template or an NA relation.
PatternRule make_rule(std::string id, std::string_view template_text, RelLabel relation);
std::string template_text(const PatternRule& rule);

/// Rules file: JSON list of {id, template, relation}.
std::vector<PatternRule> parse_rules(std::string_view json_text);
std::vector<PatternRule> read_rules(const std::filesystem::path& path);
std::string rules_to_json(const std::vector<PatternRule>& rules);
void write_rules(const std::filesystem::path& path, const std::vector<PatternRule>& rules);

struct PatternHit {
  Span e1;
  Span e2;
  RelLabel label = RelLabel::NA;
  std::string rule_id;

  bool operator==(const PatternHit&) const = default;
};

struct MatchOptions {
  /// Filler tokens allowed between E1 and the literal text that leads up to
  /// E2 ("even , it must not be odd" for "E1 must not be E2"). Only used
  /// when the E1-E2 gap of the template starts with a literal.
  std::size_t leading_slack = 2;
};

/// Tries every rule on every ordered mention pair (earlier, later). Literals
/// compare case-insensitively and "*" matches any one token. Hits are
/// ordered by (e1, e2, rule order).
std::vector<PatternHit> match_patterns(const std::vector<std::string>& tokens,
                                       const std::vector<EntityMention>& mentions,
                                       const std::vector<PatternRule>& rules,
                                       const MatchOptions& options = {});

/// Turns recurring inter-mention token sequences of labeled (non-NA)
/// examples into "E1 ... E2" rules: a sequence seen at least `min_count`
/// times whose most frequent label is unique becomes a rule for that label.
/// Sequences that are empty or longer than `max_length` are skipped.
std::vector<PatternRule> discover_patterns(const std::vector<ErcExample>& examples,
                                           std::size_t min_count = 2,
                                           std::size_t max_length = 6,
                                           std::string_view id_prefix = "auto");

/// Multinomial logistic regression over the 13 relation labels. Carries the
/// rule set so that fired-pattern features are available at prediction time.
class MaxEntModel {
 public:
  using Row = std::array<double, kNumLabels>;

  MaxEntModel() = default;
  explicit MaxEntModel(std::vector<PatternRule> rules) : rules_(std::move(rules)) {}

  const std::vector<PatternRule>& rules() const { return rules_; }

  /// Weight row for a feature, or nullptr when the feature is unknown.
  const Row* find(std::string_view feature) const;
  Row& row(const std::string& feature);
  std::size_t num_features() const { return rows_.size(); }

  const std::vector<std::string>& feature_names() const { return names_; }
  const Row& row_at(std::size_t i) const { return rows_[i]; }
  Row& row_at(std::size_t i) { return rows_[i]; }
  std::size_t index_of_feature(std::string_view feature) const;  // npos when unknown

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<PatternRule> rules_;
  std::vector<std::string> names_;
  std::vector<Row> rows_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Feature multiset for one mention pair: bias, tokens between mentions,
/// mention surfaces, +-2 token windows around each mention, a gap-length
/// bucket and the ids of rules firing on exactly this pair.
std::vector<std::string> relation_features(const std::vector<std::string>& tokens, Span e1, Span e2,
                                           const std::vector<PatternRule>& rules);

struct RelationPrediction {
  RelLabel label = RelLabel::NA;
  std::array<double, kNumLabels> probabilities{};
};

/// Softmax over label scores; argmax ties go to the lower label index.
/// Throws InvalidArgument when spans overlap, are empty, are out of range
/// or e1 does not precede e2.
RelationPrediction classify_relation(const MaxEntModel& model, const std::vector<std::string>& tokens,
                                     Span e1, Span e2);

struct MaxEntOptions {
  std::size_t epochs = 100;
  double learning_rate = 0.5;
  std::size_t batch_size = 8;
  double l2 = 0.0;
  std::uint64_t seed = 0;
};

/// Mini-batch gradient descent on mean cross-entropy. Every feature of the
/// training set gets a row up front.
MaxEntModel train_classifier(const std::vector<ErcExample>& dataset, const MaxEntOptions& options,
                             std::vector<PatternRule> rules = {});

/// Mean cross-entropy (+ l2/2 |w|^2) over `examples`. `gradient` is resized
/// to model.num_features() rows and filled with dLoss/dw; features unknown
/// to the model are ignored.
double maxent_loss(const MaxEntModel& model, const std::vector<ErcExample>& examples, double l2,
                   std::vector<MaxEntModel::Row>* gradient = nullptr);

/// Accuracy of argmax predictions against gold labels.
double accuracy(const MaxEntModel& model, const std::vector<ErcExample>& examples);

std::string maxent_to_json(const MaxEntModel& model);
MaxEntModel maxent_from_json(std::string_view json_text);
void save_maxent(const std::filesystem::path& path, const MaxEntModel& model);
MaxEntModel load_maxent(const std::filesystem::path& path);

}  // namespace mathkg
