#include "mathkg/pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "mathkg/corpus.hpp"
#include "mathkg/distant.hpp"
#include "mathkg/error.hpp"
#include "mathkg/fusion.hpp"
#include "mathkg/graphstore.hpp"
#include "mathkg/text.hpp"

namespace fs = std::filesystem;

namespace mathkg {

fs::path default_data_dir() {
  if (const char* env = std::getenv("MATHKG_DATA_DIR"); env && *env) return env;
  return "data";
}

std::string split_name(const std::string& file, const std::string& part) {
  const auto dot = file.find('.');
  if (dot == std::string::npos) return file + "." + part;
  return file.substr(0, dot) + "." + part + file.substr(dot);
}

StagedOutputs::~StagedOutputs() {
  std::error_code ec;
  for (const auto& [tmp, final_path] : pending_) fs::remove(tmp, ec);
}

void StagedOutputs::add(const std::string& name, const std::string& content) {
  fs::create_directories(dir_);
  const fs::path final_path = dir_ / name;
  fs::path tmp = final_path;
  tmp += ".tmp";
  pending_.emplace_back(tmp, final_path);
  std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
  out << content;
  out.close();
  if (!out) throw Error("cannot write " + tmp.string());
}

void StagedOutputs::commit() {
  for (const auto& [tmp, final_path] : pending_) fs::rename(tmp, final_path);
  pending_.clear();
}

namespace {

fs::path need(const PipelineConfig& cfg, const char* name) {
  fs::path p = cfg.data_dir / name;
  if (!fs::exists(p)) throw Error("missing input " + p.string());
  return p;
}

// An explicit path must exist; the fallback is used only when present.
std::optional<fs::path> optional_input(const fs::path& explicit_path, const fs::path& fallback) {
  if (!explicit_path.empty()) {
    if (!fs::exists(explicit_path)) throw Error("missing input " + explicit_path.string());
    return explicit_path;
  }
  if (fs::exists(fallback)) return fallback;
  return std::nullopt;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

std::vector<Document> load_docs(const PipelineConfig& cfg) { return ingest_corpus(need(cfg, files::kDocuments)); }

Gazetteer load_gaz(const PipelineConfig& cfg) {
  auto p = need(cfg, files::kGazetteer);
  auto in = open_in(p);
  return read_gazetteer(in, p.string());
}

std::vector<PatternRule> load_patterns(const PipelineConfig& cfg) { return read_rules(need(cfg, files::kPatterns)); }

std::vector<KerExample> load_conll(const fs::path& p) {
  auto in = open_in(p);
  return read_conll(in, p.string());
}

std::vector<ErcExample> load_erc(const fs::path& p) {
  auto in = open_in(p);
  return read_erc_tsv(in, p.string());
}

template <typename T, typename Writer>
std::string render(const std::vector<T>& items, Writer write) {
  std::ostringstream ss;
  write(ss, items);
  return ss.str();
}

EntityClass class_for(std::string_view surface) {
  return looks_like_theorem(surface) ? EntityClass::Leg : EntityClass::Con;
}

std::string mention_line(const EntitySeed& e) {
  return e.surface + "\t" + std::string(to_string(e.entity_class)) + "\t" + e.origin + "\n";
}

std::vector<EntitySeed> read_mentions(const fs::path& p) {
  auto in = open_in(p);
  std::vector<EntitySeed> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cols = text::split(line, '\t');
    if (cols.size() != 3) throw ParseError(p.string(), lineno, "expected surface, class, origin");
    EntitySeed e;
    e.surface = cols[0];
    if (cols[1] == "CON") {
      e.entity_class = EntityClass::Con;
    } else if (cols[1] == "LEG") {
      e.entity_class = EntityClass::Leg;
    } else {
      throw ParseError(p.string(), lineno, "bad class '" + cols[1] + "'");
    }
    e.origin = cols[2];
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

void stage_ingest(const PipelineConfig& cfg, const fs::path& corpus) {
  const auto docs = ingest_corpus(corpus);
  std::string content;
  for (const auto& d : docs) content += document_to_json(d) + "\n";
  StagedOutputs out(cfg.data_dir);
  out.add(files::kDocuments, content);
  out.commit();
}

void stage_build_datasets(const PipelineConfig& cfg) {
  const auto docs = load_docs(cfg);
  const auto gaz = recall_seed_entities(docs, cfg.min_tfidf);
  const auto seeds = seed_triples_from_documents(docs);
  std::vector<PatternRule> rules;
  if (auto p = optional_input(cfg.rules_file, cfg.data_dir / files::kRules)) rules = read_rules(*p);

  ErcBuildOptions erc_opts;
  erc_opts.na_ratio = cfg.na_ratio;
  erc_opts.seed = cfg.seed;
  // discovery runs on what the seeds and hand rules label, then the
  // dataset is rebuilt with the grown rule set
  const auto first = build_erc_dataset(docs, gaz, seeds, rules, erc_opts);
  std::set<std::vector<std::string>> known;
  for (const auto& r : rules) known.insert(r.items);
  for (auto& r : discover_patterns(first, cfg.pattern_min_count)) {
    if (known.insert(r.items).second) rules.push_back(std::move(r));
  }
  const auto erc = build_erc_dataset(docs, gaz, seeds, rules, erc_opts);
  const auto ker = build_ker_dataset(docs, gaz);
  const auto ker_splits = split_dataset(ker, cfg.seed);
  const auto erc_splits = split_dataset(erc, cfg.seed);

  StagedOutputs out(cfg.data_dir);
  {
    std::ostringstream ss;
    write_gazetteer(ss, gaz);
    out.add(files::kGazetteer, ss.str());
  }
  out.add(files::kSeeds, render(seeds, [](std::ostream& o, const auto& v) { write_triples(o, v); }));
  out.add(files::kPatterns, rules_to_json(rules));
  auto conll = [](std::ostream& o, const auto& v) { write_conll(o, v); };
  auto tsv = [](std::ostream& o, const auto& v) { write_erc_tsv(o, v); };
  out.add(files::kKer, render(ker, conll));
  out.add(split_name(files::kKer, "train"), render(ker_splits.train, conll));
  out.add(split_name(files::kKer, "dev"), render(ker_splits.dev, conll));
  out.add(split_name(files::kKer, "test"), render(ker_splits.test, conll));
  out.add(files::kErc, render(erc, tsv));
  out.add(split_name(files::kErc, "train"), render(erc_splits.train, tsv));
  out.add(split_name(files::kErc, "dev"), render(erc_splits.dev, tsv));
  out.add(split_name(files::kErc, "test"), render(erc_splits.test, tsv));
  out.commit();
}

void stage_train_tagger(const PipelineConfig& cfg) {
  const auto train = load_conll(need(cfg, split_name(files::kKer, "train").c_str()));
  TaggerOptions opts;
  opts.epochs = cfg.tagger_epochs;
  opts.seed = cfg.seed;
  const auto model = train_tagger(train, opts, load_gaz(cfg));
  StagedOutputs out(cfg.data_dir);
  out.add(files::kTagger, crf_to_json(model));
  out.commit();
}

void stage_train_relclf(const PipelineConfig& cfg) {
  const auto train = load_erc(need(cfg, split_name(files::kErc, "train").c_str()));
  if (train.empty()) throw Error("ERC training split is empty");
  MaxEntOptions opts = cfg.relclf;
  opts.seed = cfg.seed;
  const auto model = train_classifier(train, opts, load_patterns(cfg));
  StagedOutputs out(cfg.data_dir);
  out.add(files::kRelclf, maxent_to_json(model));
  out.commit();
}

void stage_extract(const PipelineConfig& cfg) {
  const auto docs = load_docs(cfg);
  const auto tagger = load_crf(need(cfg, files::kTagger));
  const auto clf = load_maxent(need(cfg, files::kRelclf));
  const auto& rules = clf.rules();

  std::vector<EntitySeed> entities;
  std::vector<Triple> triples = seed_triples_from_documents(docs);
  for (const auto& d : docs) {
    entities.push_back({d.title, class_for(d.title), "document"});
  }
  for (const auto& d : docs) {
    for (const auto& [key, value] : d.infobox) {
      if (!infobox_relation(key)) continue;
      for (const auto& name : split_infobox_values(value)) {
        if (looks_like_entity(name)) entities.push_back({name, class_for(name), "infobox"});
      }
    }
  }

  for (const auto& d : docs) {
    for (const auto& s : make_sentences(d)) {
      const auto tokens = surfaces(s.tokens);
      const auto tags = decode(tagger, tokens);
      std::vector<EntityMention> mentions;
      std::set<std::string> seen;
      for (const auto& ts : spans_from_tags(tags)) {
        std::vector<std::string> span_tokens(tokens.begin() + static_cast<std::ptrdiff_t>(ts.span.start),
                                             tokens.begin() + static_cast<std::ptrdiff_t>(ts.span.end));
        const auto key = Gazetteer::key_of(span_tokens);
        const auto surface = text::join(span_tokens, " ");
        entities.push_back({surface, ts.entity_class, "text"});
        if (seen.insert(key).second) mentions.push_back({ts.span, key, ts.entity_class});
      }
      auto surface_of = [&](Span sp) {
        return text::join(std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(sp.start),
                                                   tokens.begin() + static_cast<std::ptrdiff_t>(sp.end)),
                          " ");
      };
      auto emit = [&](Span e1, Span e2, RelLabel label, double confidence, Provenance prov) {
        std::string a = surface_of(e1), b = surface_of(e2);
        if (!is_forward(label)) std::swap(a, b);
        triples.push_back({a, *relation_of(label), b, confidence, prov});
      };
      for (const auto& hit : match_patterns(tokens, mentions, rules)) {
        emit(hit.e1, hit.e2, hit.label, kPatternConfidence, Provenance::Pattern);
      }
      for (std::size_t i = 0; i < mentions.size(); ++i) {
        for (std::size_t j = i + 1; j < mentions.size(); ++j) {
          const auto pred = classify_relation(clf, tokens, mentions[i].span, mentions[j].span);
          if (pred.label == RelLabel::NA) continue;
          const double p = pred.probabilities[static_cast<std::size_t>(pred.label)];
          if (p < cfg.min_confidence) continue;
          emit(mentions[i].span, mentions[j].span, pred.label, p, Provenance::Classifier);
        }
      }
    }
  }

  std::string mention_text;
  for (const auto& e : entities) mention_text += mention_line(e);
  StagedOutputs out(cfg.data_dir);
  out.add(files::kMentions, mention_text);
  out.add(files::kRawTriples, render(triples, [](std::ostream& o, const auto& v) { write_triples(o, v); }));
  out.commit();
}

void stage_fuse(const PipelineConfig& cfg, std::ostream& log) {
  FusionInput input;
  input.documents = load_docs(cfg);
  input.entities = read_mentions(need(cfg, files::kMentions));
  input.triples = read_triples(need(cfg, files::kRawTriples));
  if (auto p = optional_input(cfg.manual_file, cfg.data_dir / files::kManual)) input.manual = read_triples(*p);
  const auto result = fuse(input);
  for (const auto& w : result.warnings) log << "warning: " << w << "\n";

  KnowledgeGraph g;
  for (const auto& e : result.entities) g.add_entity(e);
  for (const auto& t : result.triples) g.add_triple(t);

  std::ostringstream ents;
  write_entities(ents, result.entities);
  StagedOutputs out(cfg.data_dir);
  out.add(files::kEntities, ents.str());
  out.add(files::kTriples, render(g.triples(), [](std::ostream& o, const auto& v) { write_triples(o, v); }));
  out.add(files::kManifest, graph_manifest(g));
  out.commit();
}

void stage_train_embed(const PipelineConfig& cfg) {
  need(cfg, files::kEntities);
  const auto g = load_graph(cfg.data_dir);
  TransEOptions opts = cfg.transe;
  opts.seed = cfg.seed;
  const auto table = train_transe(g, opts);
  StagedOutputs out(cfg.data_dir);
  out.add(files::kEmbeddings, embeddings_to_json(table));
  out.commit();
}

PrfMetrics relation_metrics(const std::vector<RelLabel>& gold, const std::vector<RelLabel>& predicted) {
  if (gold.size() != predicted.size()) throw InvalidArgument("relation_metrics: length mismatch");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] == predicted[i]) {
      if (gold[i] != RelLabel::NA) ++tp;
      continue;
    }
    if (predicted[i] != RelLabel::NA) ++fp;
    if (gold[i] != RelLabel::NA) ++fn;
  }
  return PrfMetrics::from_counts(tp, fp, fn);
}

std::vector<EvalRow> evaluate_models(const PipelineConfig& cfg) {
  const auto ker = load_conll(need(cfg, split_name(files::kKer, "test").c_str()));
  const auto tagger = load_crf(need(cfg, files::kTagger));
  std::vector<std::vector<Tag>> tags;
  for (const auto& ex : ker) tags.push_back(decode(tagger, ex.tokens));

  const auto erc = load_erc(need(cfg, split_name(files::kErc, "test").c_str()));
  const auto clf = load_maxent(need(cfg, files::kRelclf));
  std::vector<RelLabel> gold, pred;
  for (const auto& ex : erc) {
    gold.push_back(ex.label);
    pred.push_back(classify_relation(clf, ex.tokens, ex.e1, ex.e2).label);
  }
  return {{"KER", evaluate_spans(ker, tags)}, {"ERC", relation_metrics(gold, pred)}};
}

std::vector<EvalRow> evaluate_predictions(const fs::path& ker_gold, const fs::path& ker_pred, const fs::path& erc_gold,
                                          const fs::path& erc_pred) {
  const auto kg = load_conll(ker_gold);
  const auto kp = load_conll(ker_pred);
  if (kg.size() != kp.size()) throw Error("KER gold and predictions differ in sentence count");
  std::vector<std::vector<Tag>> tags;
  for (std::size_t i = 0; i < kp.size(); ++i) {
    if (kp[i].tokens != kg[i].tokens) throw Error("KER predictions do not align with gold at sentence " + std::to_string(i + 1));
    tags.push_back(kp[i].tags);
  }
  const auto eg = load_erc(erc_gold);
  const auto ep = load_erc(erc_pred);
  if (eg.size() != ep.size()) throw Error("ERC gold and predictions differ in example count");
  std::vector<RelLabel> gold, pred;
  for (std::size_t i = 0; i < eg.size(); ++i) {
    if (eg[i].tokens != ep[i].tokens || eg[i].e1 != ep[i].e1 || eg[i].e2 != ep[i].e2) {
      throw Error("ERC predictions do not align with gold at example " + std::to_string(i + 1));
    }
    gold.push_back(eg[i].label);
    pred.push_back(ep[i].label);
  }
  return {{"KER", evaluate_spans(kg, tags)}, {"ERC", relation_metrics(gold, pred)}};
}

std::string format_eval_table(const std::vector<EvalRow>& rows) {
  std::ostringstream ss;
  ss << std::left << std::setw(10) << "Data set" << std::right << std::setw(13) << "precision %" << std::setw(10)
     << "recall %" << std::setw(8) << "F1 %" << "\n";
  ss << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    ss << std::left << std::setw(10) << r.name << std::right << std::setw(13) << 100.0 * r.metrics.precision
       << std::setw(10) << 100.0 * r.metrics.recall << std::setw(8) << 100.0 * r.metrics.f1 << "\n";
  }
  return ss.str();
}

void run_pipeline(const PipelineConfig& cfg, const fs::path& corpus, std::ostream& log) {
  if (!corpus.empty()) stage_ingest(cfg, corpus);
  stage_build_datasets(cfg);
  stage_train_tagger(cfg);
  stage_train_relclf(cfg);
  stage_extract(cfg);
  stage_fuse(cfg, log);
  stage_train_embed(cfg);
}

}  // namespace mathkg
