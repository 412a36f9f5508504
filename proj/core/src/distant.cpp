#include "mathkg/distant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "mathkg/error.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

namespace {

std::vector<std::string> lowered(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(text::to_lower(t));
  return out;
}

bool is_wordlike(std::string_view token) {
  for (char32_t c : text::decode_utf8(token)) {
    if (text::is_cjk(c)) return true;
    if (text::is_latin_alnum(c) && !text::is_digit(c)) return true;
  }
  return false;
}

std::string join_range(const std::vector<std::string>& tokens, std::size_t start, std::size_t end) {
  return text::join(std::span<const std::string>(tokens).subspan(start, end - start), " ");
}

}  // namespace

std::string_view to_string(SeedSource s) {
  switch (s) {
    case SeedSource::Title: return "title";
    case SeedSource::Pattern: return "pattern";
    case SeedSource::Tfidf: return "tfidf";
  }
  return "?";
}

std::string Gazetteer::key_of(std::string_view surface) { return token_key(surface); }

std::string Gazetteer::key_of(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += text::to_lower(tokens[i]);
  }
  return out;
}

bool Gazetteer::add(std::string_view surface, EntityClass cls, SeedSource source) {
  const auto tokens = tokenize(surface);
  if (tokens.empty()) return false;
  auto key = key_of(lowered(surfaces(tokens)));
  if (entries_.contains(key)) return false;
  max_tokens_ = std::max(max_tokens_, tokens.size());
  sources_.emplace(key, source);
  entries_.emplace(std::move(key), cls);
  return true;
}

std::optional<EntityClass> Gazetteer::lookup_key(std::string_view key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void write_gazetteer(std::ostream& out, const Gazetteer& g) {
  for (const auto& [key, cls] : g.entries()) {
    out << key << '\t' << to_string(cls) << '\t' << to_string(g.sources().at(key)) << '\n';
  }
}

Gazetteer read_gazetteer(std::istream& in, const std::string& source) {
  Gazetteer g;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != 3) throw ParseError(source, lineno, "expected 3 tab-separated columns");
    auto cls = parse_entity_class(cols[1]);
    if (!cls) throw ParseError(source, lineno, "unknown entity class '" + cols[1] + "'");
    SeedSource src;
    if (cols[2] == "title") src = SeedSource::Title;
    else if (cols[2] == "pattern") src = SeedSource::Pattern;
    else if (cols[2] == "tfidf") src = SeedSource::Tfidf;
    else throw ParseError(source, lineno, "unknown seed source '" + cols[2] + "'");
    g.add(cols[0], *cls, src);
  }
  return g;
}

bool looks_like_theorem(std::string_view surface) {
  static const std::set<std::string, std::less<>> kWords = {
      "theorem", "theorems", "law", "laws", "rule", "rules", "formula", "formulas", "formulae"};
  for (const auto& tok : tokenize(surface)) {
    if (kWords.contains(text::to_lower(tok.surface))) return true;
  }
  for (std::string_view cjk : {"定理", "法则", "公式"}) {
    if (surface.find(cjk) != std::string_view::npos) return true;
  }
  return false;
}

std::vector<EntityMention> find_mentions(const std::vector<std::string>& tokens, const Gazetteer& g) {
  struct Hit {
    std::size_t start, len;
    EntityClass cls;
    std::string key;
  };
  const auto low = lowered(tokens);
  std::vector<Hit> hits;
  for (std::size_t i = 0; i < low.size(); ++i) {
    std::string key;
    for (std::size_t n = 1; n <= g.max_tokens() && i + n <= low.size(); ++n) {
      if (n > 1) key.push_back(' ');
      key += low[i + n - 1];
      if (auto cls = g.lookup_key(key)) hits.push_back({i, n, *cls, key});
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    if (a.len != b.len) return a.len > b.len;
    return a.start < b.start;
  });
  std::vector<bool> taken(tokens.size(), false);
  std::vector<EntityMention> out;
  for (auto& h : hits) {
    bool free = true;
    for (std::size_t k = h.start; k < h.start + h.len; ++k) free = free && !taken[k];
    if (!free) continue;
    for (std::size_t k = h.start; k < h.start + h.len; ++k) taken[k] = true;
    out.push_back({{h.start, h.start + h.len}, std::move(h.key), h.cls});
  }
  std::sort(out.begin(), out.end(),
            [](const EntityMention& a, const EntityMention& b) { return a.span < b.span; });
  return out;
}

std::optional<InfoboxRelation> infobox_relation(std::string_view key) {
  static const std::map<std::string, InfoboxRelation, std::less<>> kTable = {
      {"belongs to", {Relation::Aff, true}},     {"is a", {Relation::Aff, true}},
      {"is a kind of", {Relation::Aff, true}},   {"parent", {Relation::Aff, true}},
      {"subfield of", {Relation::Aff, true}},    {"branch of", {Relation::Aff, true}},
      {"contains", {Relation::Aff, false}},      {"includes", {Relation::Aff, false}},
      {"subtypes", {Relation::Aff, false}},      {"special cases", {Relation::Aff, false}},
      {"prerequisite", {Relation::Dep, false}},  {"prerequisites", {Relation::Dep, false}},
      {"depends on", {Relation::Dep, false}},    {"based on", {Relation::Dep, false}},
      {"leads to", {Relation::Dep, true}},       {"next", {Relation::Dep, true}},
      {"equivalent", {Relation::Equ, true}},     {"also called", {Relation::Equ, true}},
      {"alias", {Relation::Equ, true}},          {"also known as", {Relation::Equ, true}},
      {"opposite", {Relation::Ant, true}},       {"antonym", {Relation::Ant, true}},
      {"similar to", {Relation::Syn, true}},     {"synonym", {Relation::Syn, true}},
      {"synonyms", {Relation::Syn, true}},       {"properties", {Relation::Pro, true}},
      {"property", {Relation::Pro, true}},       {"has", {Relation::Pro, true}},
  };
  auto it = kTable.find(text::normalize_name(key));
  if (it == kTable.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> split_infobox_values(std::string_view value) {
  std::string unified(value);
  for (std::string_view sep : {"、", "，", "；"}) {
    for (auto pos = unified.find(sep); pos != std::string::npos; pos = unified.find(sep, pos)) {
      unified.replace(pos, sep.size(), ",");
    }
  }
  std::replace(unified.begin(), unified.end(), ';', ',');
  std::vector<std::string> out;
  for (const auto& part : text::split(unified, ',')) {
    const auto first = part.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = part.find_last_not_of(" \t");
    out.push_back(part.substr(first, last - first + 1));
  }
  return out;
}

bool looks_like_entity(std::string_view surface) {
  const auto tokens = tokenize(surface);
  if (tokens.empty() || tokens.size() > 6) return false;
  return std::all_of(tokens.begin(), tokens.end(), [](const Token& t) { return is_wordlike(t.surface); });
}

std::map<std::string, double> ngram_tfidf(const std::vector<Document>& docs) {
  std::vector<std::unordered_map<std::string, std::size_t>> tf(docs.size());
  std::unordered_map<std::string, std::size_t> df;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& sent : make_sentences(docs[d])) {
      const auto low = lowered(surfaces(sent.tokens));
      for (std::size_t i = 0; i < low.size(); ++i) {
        for (std::size_t n = 1; n <= 4 && i + n <= low.size(); ++n) {
          // stopwords end a candidate: "kind of polygon" is not a term
          if (!is_wordlike(low[i + n - 1]) || text::is_stopword(low[i + n - 1])) break;
          ++tf[d][join_range(low, i, i + n)];
        }
      }
    }
    for (const auto& [term, count] : tf[d]) ++df[term];
  }
  const double n_docs = static_cast<double>(docs.size());
  std::map<std::string, double> best;
  for (const auto& counts : tf) {
    for (const auto& [term, count] : counts) {
      const double score = static_cast<double>(count) * std::log(n_docs / static_cast<double>(df[term]));
      auto [it, inserted] = best.emplace(term, score);
      if (!inserted) it->second = std::max(it->second, score);
    }
  }
  return best;
}

Gazetteer recall_seed_entities(const std::vector<Document>& docs, double min_tfidf) {
  if (docs.empty()) throw InvalidArgument("recall_seed_entities: empty corpus");
  auto class_for = [](std::string_view s) {
    return looks_like_theorem(s) ? EntityClass::Leg : EntityClass::Con;
  };
  Gazetteer g;
  for (const auto& d : docs) g.add(d.title, class_for(d.title), SeedSource::Title);
  for (const auto& d : docs) {
    for (const auto& [key, value] : d.infobox) {
      if (!infobox_relation(key)) continue;
      for (const auto& name : split_infobox_values(value)) {
        if (looks_like_entity(name)) g.add(name, class_for(name), SeedSource::Pattern);
      }
    }
  }
  if (!(min_tfidf == std::numeric_limits<double>::infinity())) {
    // fragments of known entries ("sines" of "law of sines") are not recalled
    std::set<std::string> fragments;
    for (const auto& [key, cls] : g.entries()) {
      const auto toks = text::split(key, ' ');
      for (std::size_t i = 0; i < toks.size(); ++i) {
        for (std::size_t j = i + 1; j <= toks.size(); ++j) fragments.insert(join_range(toks, i, j));
      }
    }
    for (const auto& [term, score] : ngram_tfidf(docs)) {
      if (score >= min_tfidf && !fragments.contains(term)) g.add(term, class_for(term), SeedSource::Tfidf);
    }
  }
  return g;
}

std::vector<Triple> seed_triples_from_documents(const std::vector<Document>& docs) {
  std::set<std::string> title_keys;
  std::unordered_map<std::string, std::string> title_by_key;
  for (const auto& d : docs) {
    auto key = Gazetteer::key_of(d.title);
    title_keys.insert(key);
    title_by_key.emplace(key, d.title);
  }
  std::vector<Triple> out;
  auto emit = [&](const std::string& head, Relation rel, const std::string& tail) {
    if (Gazetteer::key_of(head) == Gazetteer::key_of(tail)) return;
    out.push_back({head, rel, tail, kInfoboxConfidence, Provenance::Infobox});
  };
  for (const auto& d : docs) {
    if (d.title.empty()) continue;
    for (const auto& [key, value] : d.infobox) {
      auto rel = infobox_relation(key);
      if (!rel) continue;
      for (const auto& name : split_infobox_values(value)) {
        if (!looks_like_entity(name)) continue;
        if (rel->title_is_head) emit(d.title, rel->relation, name);
        else emit(name, rel->relation, d.title);
      }
    }
    for (const auto& cat : d.categories) {
      auto it = title_by_key.find(Gazetteer::key_of(cat));
      if (it != title_by_key.end()) emit(d.title, Relation::Aff, it->second);
    }
  }
  return out;
}

KerExample label_sentence(const std::vector<std::string>& tokens, const Gazetteer& g) {
  KerExample ex;
  ex.tokens = tokens;
  ex.tags.assign(tokens.size(), Tag::O);
  for (const auto& m : find_mentions(tokens, g)) {
    ex.tags[m.span.start] = begin_tag(m.entity_class);
    for (std::size_t k = m.span.start + 1; k < m.span.end; ++k) ex.tags[k] = inside_tag(m.entity_class);
  }
  return ex;
}

std::vector<KerExample> build_ker_dataset(const std::vector<Document>& docs, const Gazetteer& g) {
  if (g.empty()) throw InvalidArgument("build_ker_dataset: empty gazetteer");
  std::vector<KerExample> out;
  for (const auto& d : docs) {
    for (const auto& s : make_sentences(d)) out.push_back(label_sentence(surfaces(s.tokens), g));
  }
  return out;
}

std::vector<ErcExample> build_erc_dataset(const std::vector<Document>& docs, const Gazetteer& g,
                                          const std::vector<Triple>& seeds,
                                          const std::vector<PatternRule>& rules,
                                          const ErcBuildOptions& options) {
  if (!(options.na_ratio >= 0.0)) throw InvalidArgument("build_erc_dataset: na_ratio must be >= 0");

  struct Keyed {
    std::string head, tail;
    Relation relation;
  };
  std::vector<Keyed> keyed;
  for (const auto& t : seeds) keyed.push_back({Gazetteer::key_of(t.head), Gazetteer::key_of(t.tail), t.relation});

  struct Ordered {
    std::size_t sentence;
    ErcExample example;
  };
  std::vector<Ordered> positives;
  std::vector<Ordered> na_pool;
  std::size_t sentence_no = 0;

  for (const auto& d : docs) {
    for (const auto& s : make_sentences(d)) {
      const auto tokens = surfaces(s.tokens);
      std::vector<EntityMention> mentions;
      std::set<std::string> seen;
      for (auto& m : find_mentions(tokens, g)) {
        if (seen.insert(m.key).second) mentions.push_back(std::move(m));
      }
      std::set<std::pair<std::size_t, std::size_t>> covered;
      std::set<std::tuple<Span, Span, RelLabel>> emitted;
      auto add_positive = [&](Span e1, Span e2, RelLabel label) {
        if (!emitted.emplace(e1, e2, label).second) return;
        positives.push_back({sentence_no, {tokens, e1, e2, label}});
      };
      for (std::size_t i = 0; i < mentions.size(); ++i) {
        for (std::size_t j = i + 1; j < mentions.size(); ++j) {
          const auto& a = mentions[i];
          const auto& b = mentions[j];
          for (const auto& seed : keyed) {
            const bool fwd = seed.head == a.key && seed.tail == b.key;
            const bool bwd = seed.head == b.key && seed.tail == a.key;
            if (!fwd && !bwd) continue;
            add_positive(a.span, b.span, make_label(seed.relation, fwd));
            covered.emplace(i, j);
          }
        }
      }
      for (const auto& hit : match_patterns(tokens, mentions, rules, options.match)) {
        add_positive(hit.e1, hit.e2, hit.label);
        for (std::size_t i = 0; i < mentions.size(); ++i) {
          for (std::size_t j = i + 1; j < mentions.size(); ++j) {
            if (mentions[i].span == hit.e1 && mentions[j].span == hit.e2) covered.emplace(i, j);
          }
        }
      }
      for (std::size_t i = 0; i < mentions.size(); ++i) {
        for (std::size_t j = i + 1; j < mentions.size(); ++j) {
          if (covered.contains({i, j})) continue;
          na_pool.push_back({sentence_no, {tokens, mentions[i].span, mentions[j].span, RelLabel::NA}});
        }
      }
      ++sentence_no;
    }
  }

  const auto wanted = static_cast<std::size_t>(
      std::floor(options.na_ratio * static_cast<double>(positives.size()) + 0.5));
  const std::size_t take = std::min(wanted, na_pool.size());
  std::vector<std::size_t> order(na_pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(options.seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(take);
  std::sort(order.begin(), order.end());

  std::vector<Ordered> all = std::move(positives);
  for (std::size_t idx : order) all.push_back(std::move(na_pool[idx]));
  std::stable_sort(all.begin(), all.end(), [](const Ordered& a, const Ordered& b) {
    if (a.sentence != b.sentence) return a.sentence < b.sentence;
    if (a.example.e1 != b.example.e1) return a.example.e1 < b.example.e1;
    return a.example.e2 < b.example.e2;
  });
  std::vector<ErcExample> out;
  out.reserve(all.size());
  for (auto& o : all) out.push_back(std::move(o.example));
  return out;
}

void write_conll(std::ostream& out, const std::vector<KerExample>& examples) {
  for (const auto& ex : examples) {
    if (ex.tokens.empty()) continue;
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) out << ex.tokens[i] << '\t' << to_string(ex.tags[i]) << '\n';
    out << '\n';
  }
}

std::vector<KerExample> read_conll(std::istream& in, const std::string& source) {
  std::vector<KerExample> out;
  KerExample cur;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (!cur.tokens.empty()) out.push_back(std::move(cur));
    cur = {};
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, lineno, "expected token<TAB>tag");
    auto tag = parse_tag(std::string_view(line).substr(tab + 1));
    if (!tag) throw ParseError(source, lineno, "unknown tag '" + line.substr(tab + 1) + "'");
    cur.tokens.push_back(line.substr(0, tab));
    cur.tags.push_back(*tag);
  }
  flush();
  return out;
}

void write_erc_tsv(std::ostream& out, const std::vector<ErcExample>& examples) {
  for (const auto& ex : examples) {
    out << text::join(ex.tokens, " ") << '\t' << ex.e1.start << '\t' << ex.e1.end << '\t' << ex.e2.start
        << '\t' << ex.e2.end << '\t' << to_string(ex.label) << '\n';
  }
}

std::vector<ErcExample> read_erc_tsv(std::istream& in, const std::string& source) {
  std::vector<ErcExample> out;
  std::string line;
  std::size_t lineno = 0;
  auto to_index = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError(source, lineno, "bad span offset '" + s + "'");
    }
    return std::stoull(s);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != 6) throw ParseError(source, lineno, "expected 6 tab-separated columns");
    ErcExample ex;
    ex.tokens = text::split(cols[0], ' ');
    ex.e1 = {to_index(cols[1]), to_index(cols[2])};
    ex.e2 = {to_index(cols[3]), to_index(cols[4])};
    auto label = parse_label(cols[5]);
    if (!label) throw ParseError(source, lineno, "unknown label '" + cols[5] + "'");
    ex.label = *label;
    const std::size_t n = ex.tokens.size();
    if (ex.e1.start >= ex.e1.end || ex.e2.start >= ex.e2.end || ex.e1.end > ex.e2.start || ex.e2.end > n) {
      throw ParseError(source, lineno, "spans must be non-empty, ordered and within the sentence");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace mathkg
