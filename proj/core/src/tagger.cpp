#include "mathkg/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/random.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

using nlohmann::json;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool allowed(std::optional<std::size_t> prev, std::size_t next) {
  return transition_allowed(prev ? std::optional<Tag>(kTagset[*prev]) : std::nullopt, kTagset[next]);
}

bool all_digits(const std::u32string& cps) {
  return !cps.empty() && std::all_of(cps.begin(), cps.end(), [](char32_t c) { return text::is_digit(c); });
}

void append_position_features(std::vector<std::string>& f, const std::vector<std::string>& tokens,
                              std::size_t position) {
  auto at = [&](std::ptrdiff_t i) -> const std::string& {
    static const std::string kBos = "BOS", kEos = "EOS";
    if (i < 0) return kBos;
    if (static_cast<std::size_t>(i) >= tokens.size()) return kEos;
    return tokens[static_cast<std::size_t>(i)];
  };
  const auto p = static_cast<std::ptrdiff_t>(position);
  const std::string& w = tokens[position];
  f.push_back("w0=" + w);
  f.push_back("lw0=" + text::to_lower(w));
  f.push_back("w-1=" + at(p - 1));
  f.push_back("w-2=" + at(p - 2));
  f.push_back("w+1=" + at(p + 1));
  f.push_back("w+2=" + at(p + 2));
  const auto cps = text::decode_utf8(w);
  for (std::size_t k = 1; k <= 3 && k <= cps.size(); ++k) {
    f.push_back("pre" + std::to_string(k) + "=" + text::encode_utf8(std::u32string_view(cps).substr(0, k)));
  }
  for (std::size_t k = 1; k <= 3 && k <= cps.size(); ++k) {
    f.push_back("suf" + std::to_string(k) + "=" +
                text::encode_utf8(std::u32string_view(cps).substr(cps.size() - k)));
  }
  f.push_back(all_digits(cps) ? "digit=1" : "digit=0");
}

std::vector<Tag> gazetteer_tags(const std::vector<std::string>& tokens, const Gazetteer& g) {
  return label_sentence(tokens, g).tags;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Sparse accumulator for the averaged perceptron (Daume's trick: keep w and
// sum of c * delta, average = w - u / c).
struct Averager {
  CrfModel& w;
  std::vector<TagScores> u_rows;
  TransitionMatrix u_trans{};
  TagScores u_start{};

  void add_emission(std::size_t feature, std::size_t tag, double delta, double c) {
    if (u_rows.size() < w.num_features()) u_rows.resize(w.num_features(), TagScores{});
    w.row_at(feature)[tag] += delta;
    u_rows[feature][tag] += c * delta;
  }
  void add_transition(std::optional<std::size_t> prev, std::size_t next, double delta, double c) {
    if (prev) {
      w.transitions()[*prev][next] += delta;
      u_trans[*prev][next] += c * delta;
    } else {
      w.start()[next] += delta;
      u_start[next] += c * delta;
    }
  }
  void finish(double c) {
    u_rows.resize(w.num_features(), TagScores{});
    for (std::size_t f = 0; f < w.num_features(); ++f) {
      for (std::size_t t = 0; t < kNumTags; ++t) w.row_at(f)[t] -= u_rows[f][t] / c;
    }
    for (std::size_t a = 0; a < kNumTags; ++a) {
      w.start()[a] -= u_start[a] / c;
      for (std::size_t b = 0; b < kNumTags; ++b) w.transitions()[a][b] -= u_trans[a][b] / c;
    }
  }
};

}  // namespace

const TagScores* CrfModel::find(std::string_view feature) const {
  auto id = index_of_feature(feature);
  return id == npos ? nullptr : &rows_[id];
}

std::size_t CrfModel::index_of_feature(std::string_view feature) const {
  auto it = index_.find(std::string(feature));
  return it == index_.end() ? npos : it->second;
}

TagScores& CrfModel::weights(const std::string& feature) {
  auto [it, inserted] = index_.emplace(feature, rows_.size());
  if (inserted) {
    names_.push_back(feature);
    rows_.push_back(TagScores{});
  }
  return rows_[it->second];
}

std::vector<std::string> extract_features(const std::vector<std::string>& tokens, std::size_t position,
                                          const Gazetteer* gazetteer) {
  if (position >= tokens.size()) {
    throw InvalidArgument("extract_features: position " + std::to_string(position) + " out of range");
  }
  std::vector<std::string> f;
  append_position_features(f, tokens, position);
  if (gazetteer) f.push_back("gaz=" + std::string(to_string(gazetteer_tags(tokens, *gazetteer)[position])));
  return f;
}

std::vector<std::vector<std::string>> sentence_features(const std::vector<std::string>& tokens,
                                                        const Gazetteer* gazetteer) {
  std::vector<std::vector<std::string>> out(tokens.size());
  std::vector<Tag> gaz;
  if (gazetteer) gaz = gazetteer_tags(tokens, *gazetteer);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    append_position_features(out[i], tokens, i);
    if (gazetteer) out[i].push_back("gaz=" + std::string(to_string(gaz[i])));
  }
  return out;
}

std::vector<TagScores> emission_scores(const CrfModel& model, const std::vector<std::string>& tokens) {
  const Gazetteer* g = model.gazetteer() ? &*model.gazetteer() : nullptr;
  const auto feats = sentence_features(tokens, g);
  std::vector<TagScores> out(tokens.size(), TagScores{});
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (const auto& f : feats[i]) {
      if (const auto* row = model.find(f)) {
        for (std::size_t t = 0; t < kNumTags; ++t) out[i][t] += (*row)[t];
      }
    }
  }
  return out;
}

double sequence_score(const std::vector<TagScores>& emissions, const TransitionMatrix& transitions,
                      const TagScores& start, const std::vector<Tag>& tags) {
  if (tags.size() != emissions.size()) throw InvalidArgument("sequence_score: length mismatch");
  if (tags.empty()) return 0.0;
  if (!is_well_formed(tags)) return kNegInf;
  double s = start[index_of(tags[0])] + emissions[0][index_of(tags[0])];
  for (std::size_t t = 1; t < tags.size(); ++t) {
    s = (s + transitions[index_of(tags[t - 1])][index_of(tags[t])]) + emissions[t][index_of(tags[t])];
  }
  return s;
}

std::vector<Tag> viterbi(const std::vector<TagScores>& emissions, const TransitionMatrix& transitions,
                         const TagScores& start) {
  const std::size_t n = emissions.size();
  if (n == 0) return {};
  std::vector<TagScores> delta(n);
  std::vector<std::array<std::uint8_t, kNumTags>> back(n);
  for (std::size_t y = 0; y < kNumTags; ++y) {
    delta[0][y] = allowed(std::nullopt, y) ? start[y] + emissions[0][y] : kNegInf;
  }
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < kNumTags; ++y) {
      double best = kNegInf;
      std::uint8_t arg = 0;
      bool found = false;
      for (std::size_t p = 0; p < kNumTags; ++p) {
        if (!allowed(p, y) || delta[t - 1][p] == kNegInf) continue;
        const double cand = delta[t - 1][p] + transitions[p][y];
        if (!found || cand > best) {
          best = cand;
          arg = static_cast<std::uint8_t>(p);
          found = true;
        }
      }
      delta[t][y] = found ? best + emissions[t][y] : kNegInf;
      back[t][y] = arg;
    }
  }
  std::size_t last = 0;
  for (std::size_t y = 1; y < kNumTags; ++y) {
    if (delta[n - 1][y] > delta[n - 1][last]) last = y;
  }
  std::vector<Tag> out(n);
  for (std::size_t t = n; t-- > 0;) {
    out[t] = kTagset[last];
    if (t > 0) last = back[t][last];
  }
  return out;
}

std::vector<Tag> decode(const CrfModel& model, const std::vector<std::string>& tokens) {
  return viterbi(emission_scores(model, tokens), model.transitions(), model.start());
}

CrfModel train_tagger(const std::vector<KerExample>& dataset, const TaggerOptions& options,
                      std::optional<Gazetteer> gazetteer) {
  if (dataset.empty()) throw InvalidArgument("train_tagger: empty dataset");
  if (options.epochs == 0) throw InvalidArgument("train_tagger: epochs must be >= 1");
  for (const auto& ex : dataset) {
    if (ex.tokens.size() != ex.tags.size()) throw InvalidArgument("train_tagger: tokens/tags length mismatch");
  }
  CrfModel model;
  model.set_gazetteer(std::move(gazetteer));
  const Gazetteer* g = model.gazetteer() ? &*model.gazetteer() : nullptr;

  std::vector<std::vector<std::vector<std::string>>> feats;
  feats.reserve(dataset.size());
  for (const auto& ex : dataset) feats.push_back(sentence_features(ex.tokens, g));

  Averager avg{model, {}, {}, {}};
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);
  double c = 1.0;

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      const auto& ex = dataset[idx];
      const auto& fx = feats[idx];
      std::vector<TagScores> em(ex.tokens.size(), TagScores{});
      for (std::size_t i = 0; i < fx.size(); ++i) {
        for (const auto& f : fx[i]) {
          if (const auto* row = model.find(f)) {
            for (std::size_t t = 0; t < kNumTags; ++t) em[i][t] += (*row)[t];
          }
        }
      }
      const auto pred = viterbi(em, model.transitions(), model.start());
      if (pred != ex.tags) {
        for (std::size_t i = 0; i < fx.size(); ++i) {
          const std::size_t gold_t = index_of(ex.tags[i]);
          const std::size_t pred_t = index_of(pred[i]);
          const bool prev_same = i == 0 || ex.tags[i - 1] == pred[i - 1];
          if (gold_t != pred_t) {
            for (const auto& f : fx[i]) {
              model.weights(f);
              const auto id = model.index_of_feature(f);
              avg.add_emission(id, gold_t, 1.0, c);
              avg.add_emission(id, pred_t, -1.0, c);
            }
          }
          if (gold_t != pred_t || !prev_same) {
            std::optional<std::size_t> gp, pp;
            if (i > 0) {
              gp = index_of(ex.tags[i - 1]);
              pp = index_of(pred[i - 1]);
            }
            avg.add_transition(gp, gold_t, 1.0, c);
            avg.add_transition(pp, pred_t, -1.0, c);
          }
        }
      }
      c += 1.0;
    }
  }
  avg.finish(c);
  return model;
}

PrfMetrics PrfMetrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PrfMetrics m;
  m.tp = tp;
  m.fp = fp;
  m.fn = fn;
  m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  m.f1 = m.precision + m.recall > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
  return m;
}

SpanMetrics evaluate_spans(const std::vector<KerExample>& gold, const std::vector<std::vector<Tag>>& predicted) {
  if (gold.size() != predicted.size()) {
    throw InvalidArgument("evaluate_spans: " + std::to_string(gold.size()) + " gold vs " +
                          std::to_string(predicted.size()) + " predicted sequences");
  }
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].tags.size() != predicted[i].size()) {
      throw InvalidArgument("evaluate_spans: length mismatch in sentence " + std::to_string(i));
    }
    const auto g = spans_from_tags(gold[i].tags);
    const auto p = spans_from_tags(predicted[i]);
    const std::set<TaggedSpan> gs(g.begin(), g.end());
    std::size_t hit = 0;
    for (const auto& s : p) hit += gs.contains(s) ? 1 : 0;
    tp += hit;
    fp += p.size() - hit;
    fn += g.size() - hit;
  }
  return PrfMetrics::from_counts(tp, fp, fn);
}

std::string crf_to_json(const CrfModel& model) {
  json obj;
  json tagset = json::array();
  for (Tag t : kTagset) tagset.push_back(to_string(t));
  obj["tagset"] = tagset;
  json fw = json::object();
  for (std::size_t i = 0; i < model.num_features(); ++i) fw[model.feature_names()[i]] = model.row_at(i);
  obj["feature_weights"] = std::move(fw);
  json tw = json::object();
  for (std::size_t a = 0; a < kNumTags; ++a) {
    json row = json::array();
    for (std::size_t b = 0; b < kNumTags; ++b) {
      row.push_back(allowed(a, b) ? json(model.transitions()[a][b]) : json(nullptr));
    }
    tw[std::string(to_string(kTagset[a]))] = std::move(row);
  }
  obj["transition_weights"] = std::move(tw);
  json sw = json::array();
  for (std::size_t b = 0; b < kNumTags; ++b) sw.push_back(allowed(std::nullopt, b) ? json(model.start()[b]) : json(nullptr));
  obj["start_weights"] = std::move(sw);
  if (model.gazetteer()) {
    json gz = json::object();
    for (const auto& [key, cls] : model.gazetteer()->entries()) {
      gz[key] = {std::string(to_string(cls)), std::string(to_string(model.gazetteer()->sources().at(key)))};
    }
    obj["gazetteer"] = std::move(gz);
  }
  return obj.dump() + "\n";
}

CrfModel crf_from_json(std::string_view json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("crf model: invalid JSON: ") + e.what());
  }
  if (!obj.is_object() || !obj.contains("tagset") || !obj.contains("feature_weights") ||
      !obj.contains("transition_weights")) {
    throw Error("crf model: expected {tagset, feature_weights, transition_weights}");
  }
  const auto& tagset = obj["tagset"];
  if (!tagset.is_array() || tagset.size() != kNumTags) throw Error("crf model: tagset must hold 5 tags");
  for (std::size_t t = 0; t < kNumTags; ++t) {
    if (tagset[t] != to_string(kTagset[t])) throw Error("crf model: tagset order mismatch");
  }
  CrfModel model;
  auto read_cell = [](const json& v) { return v.is_null() ? 0.0 : v.get<double>(); };
  for (const auto& [name, values] : obj["feature_weights"].items()) {
    if (!values.is_array() || values.size() != kNumTags) throw Error("crf model: feature '" + name + "' needs 5 weights");
    auto& row = model.weights(name);
    for (std::size_t t = 0; t < kNumTags; ++t) row[t] = values[t].get<double>();
  }
  for (std::size_t a = 0; a < kNumTags; ++a) {
    const auto& row = obj["transition_weights"].at(std::string(to_string(kTagset[a])));
    for (std::size_t b = 0; b < kNumTags; ++b) model.transitions()[a][b] = read_cell(row.at(b));
  }
  if (obj.contains("start_weights")) {
    for (std::size_t b = 0; b < kNumTags; ++b) model.start()[b] = read_cell(obj["start_weights"].at(b));
  }
  if (obj.contains("gazetteer")) {
    Gazetteer g;
    for (const auto& [key, v] : obj["gazetteer"].items()) {
      auto cls = parse_entity_class(v.at(0).get<std::string>());
      if (!cls) throw Error("crf model: bad gazetteer class for '" + key + "'");
      const auto src = v.at(1).get<std::string>();
      g.add(key, *cls, src == "title" ? SeedSource::Title : src == "pattern" ? SeedSource::Pattern : SeedSource::Tfidf);
    }
    model.set_gazetteer(std::move(g));
  }
  return model;
}

void save_crf(const std::filesystem::path& path, const CrfModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << crf_to_json(model);
}

CrfModel load_crf(const std::filesystem::path& path) { return crf_from_json(slurp(path)); }

}  // namespace mathkg
