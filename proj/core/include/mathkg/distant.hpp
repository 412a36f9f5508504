#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mathkg/corpus.hpp"
#include "mathkg/dataset.hpp"
#include "mathkg/relclf.hpp"
#include "mathkg/triple.hpp"

namespace mathkg {

enum class SeedSource : std::uint8_t { Title, Pattern, Tfidf };

std::string_view to_string(SeedSource s);

/// Seed lexicon of entity surfaces. Surfaces are stored under their key:
/// tokenized, ASCII-lowercased and joined with single spaces, so matching
/// works on token sequences regardless of spacing or case. The first class
/// recorded for a key wins.
class Gazetteer {
 public:
  static std::string key_of(std::string_view surface);
  static std::string key_of(std::span<const std::string> tokens);

  /// Returns false (and changes nothing) when the key is already present or
  /// the surface has no tokens.
  bool add(std::string_view surface, EntityClass cls, SeedSource source);

  std::optional<EntityClass> lookup_key(std::string_view key) const;
  bool contains(std::string_view surface) const { return lookup_key(key_of(surface)).has_value(); }

  const std::map<std::string, EntityClass, std::less<>>& entries() const { return entries_; }
  const std::map<std::string, SeedSource, std::less<>>& sources() const { return sources_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// Longest entry, in tokens.
  std::size_t max_tokens() const { return max_tokens_; }

  bool operator==(const Gazetteer& o) const { return entries_ == o.entries_ && sources_ == o.sources_; }

 private:
  std::map<std::string, EntityClass, std::less<>> entries_;
  std::map<std::string, SeedSource, std::less<>> sources_;
  std::size_t max_tokens_ = 0;
};

/// "key<TAB>class<TAB>source" lines, sorted by key.
void write_gazetteer(std::ostream& out, const Gazetteer& g);
Gazetteer read_gazetteer(std::istream& in, const std::string& source = "<stream>");

/// Whole-word theorem/law/rule/formula (and 定理, 法则, 公式) test used to
/// class a surface as LEG.
bool looks_like_theorem(std::string_view surface);

/// Non-overlapping gazetteer hits: all matches are ranked longest first,
/// then leftmost, and accepted greedily. Returned sorted by position.
std::vector<EntityMention> find_mentions(const std::vector<std::string>& tokens, const Gazetteer& g);

/// Infobox keys whose values name other entities, with the relation they
/// imply. `title_is_head` tells which side the document title takes.
struct InfoboxRelation {
  Relation relation;
  bool title_is_head;
};
std::optional<InfoboxRelation> infobox_relation(std::string_view key);

/// Splits an entity-valued infobox field on , ; 、 ， ； into candidate names.
std::vector<std::string> split_infobox_values(std::string_view value);

/// Short word-like phrase (1-6 tokens, no digits-only or punctuation tokens).
bool looks_like_entity(std::string_view surface);

/// tf-idf of every candidate n-gram (n <= 4, within one sentence, word-like
/// tokens, no stopwords), keyed by Gazetteer::key_of form.
/// tf is the raw count in a document and idf = ln(N / df); the value is
/// the maximum over documents.
std::map<std::string, double> ngram_tfidf(const std::vector<Document>& docs);

/// Titles, entity-valued infobox fields and n-grams with tf-idf >= min_tfidf
/// that are not a token span of a title or infobox entry.
/// Throws InvalidArgument on an empty corpus.
Gazetteer recall_seed_entities(const std::vector<Document>& docs, double min_tfidf);

/// Seed triples given explicitly by the encyclopedia: entity-valued infobox
/// fields, plus Aff(title, category) when the category is itself a title.
/// Endpoints are the raw surfaces; provenance infobox, confidence 0.9.
std::vector<Triple> seed_triples_from_documents(const std::vector<Document>& docs);

/// Distant KER labels: every gazetteer mention becomes B-X I-X ... in the
/// sentence, everything else O. One example per sentence, corpus order.
std::vector<KerExample> build_ker_dataset(const std::vector<Document>& docs, const Gazetteer& g);
KerExample label_sentence(const std::vector<std::string>& tokens, const Gazetteer& g);

struct ErcBuildOptions {
  double na_ratio = 1.0;
  std::uint64_t seed = 0;
  MatchOptions match;
};

/// Distant ERC labels. Per sentence the first mention of each distinct key
/// is kept; every seed triple whose endpoints both occur yields a positive
/// for that pair, pattern hits add further positives, and uncovered pairs
/// form the NA pool from which round(na_ratio * positives) are sampled.
/// Output is in corpus order.
std::vector<ErcExample> build_erc_dataset(const std::vector<Document>& docs, const Gazetteer& g,
                                          const std::vector<Triple>& seeds,
                                          const std::vector<PatternRule>& rules,
                                          const ErcBuildOptions& options);

template <typename T>
struct Splits {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
};

/// Seeded shuffle then 70/15/15 cut (floor for train and dev).
template <typename T>
Splits<T> split_dataset(std::vector<T> items, std::uint64_t seed);

void write_conll(std::ostream& out, const std::vector<KerExample>& examples);
std::vector<KerExample> read_conll(std::istream& in, const std::string& source = "<stream>");
void write_erc_tsv(std::ostream& out, const std::vector<ErcExample>& examples);
std::vector<ErcExample> read_erc_tsv(std::istream& in, const std::string& source = "<stream>");

}  // namespace mathkg

#include "mathkg/random.hpp"

namespace mathkg {

template <typename T>
Splits<T> split_dataset(std::vector<T> items, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(std::span<T>(items));
  const std::size_t n = items.size();
  const std::size_t n_train = n * 70 / 100;
  const std::size_t n_dev = n * 15 / 100;
  Splits<T> out;
  auto first = std::make_move_iterator(items.begin());
  out.train.assign(first, first + n_train);
  out.dev.assign(first + n_train, first + n_train + n_dev);
  out.test.assign(first + n_train + n_dev, std::make_move_iterator(items.end()));
  return out;
}

}  // namespace mathkg
