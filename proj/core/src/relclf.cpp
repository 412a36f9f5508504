#include "mathkg/relclf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/random.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

using nlohmann::json;

namespace {

bool is_slot(std::string_view item) { return item == "E1" || item == "E2"; }

bool item_matches(std::string_view item, std::string_view token) {
  return item == "*" || item == text::to_lower(token);
}

bool range_matches(const std::vector<std::string>& items, std::size_t item_begin, std::size_t item_end,
                   const std::vector<std::string>& tokens, std::size_t token_begin) {
  if (token_begin + (item_end - item_begin) > tokens.size()) return false;
  for (std::size_t k = item_begin; k < item_end; ++k) {
    if (!item_matches(items[k], tokens[token_begin + (k - item_begin)])) return false;
  }
  return true;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::string distance_bucket(std::size_t gap) {
  if (gap <= 2) return std::to_string(gap);
  if (gap <= 4) return "3-4";
  if (gap <= 8) return "5-8";
  return "9+";
}

void check_spans(std::size_t n, Span e1, Span e2) {
  if (e1.start >= e1.end || e2.start >= e2.end) throw InvalidArgument("empty mention span");
  if (e1.end > n || e2.end > n) throw InvalidArgument("mention span out of range");
  if (e1.overlaps(e2)) throw InvalidArgument("mention spans overlap");
  if (e2.start < e1.end) throw InvalidArgument("e1 must precede e2");
}

MaxEntModel::Row scores_of(const MaxEntModel& model, const std::vector<std::string>& features) {
  MaxEntModel::Row scores{};
  for (const auto& f : features) {
    if (const auto* row = model.find(f)) {
      for (std::size_t l = 0; l < kNumLabels; ++l) scores[l] += (*row)[l];
    }
  }
  return scores;
}

MaxEntModel::Row softmax(const MaxEntModel::Row& scores) {
  const double mx = *std::max_element(scores.begin(), scores.end());
  MaxEntModel::Row p{};
  double z = 0.0;
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    p[l] = std::exp(scores[l] - mx);
    z += p[l];
  }
  for (auto& v : p) v /= z;
  return p;
}

// Feature ids (with multiplicity) of each example, against the model vocabulary.
std::vector<std::vector<std::size_t>> index_examples(const MaxEntModel& model,
                                                     const std::vector<ErcExample>& examples) {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    std::vector<std::size_t> ids;
    for (const auto& f : relation_features(ex.tokens, ex.e1, ex.e2, model.rules())) {
      auto id = model.index_of_feature(f);
      if (id != MaxEntModel::npos) ids.push_back(id);
    }
    out.push_back(std::move(ids));
  }
  return out;
}

// Mean cross-entropy over the selected examples, accumulating its gradient.
double batch_loss(const MaxEntModel& model, const std::vector<std::vector<std::size_t>>& feats,
                  const std::vector<ErcExample>& examples, std::span<const std::size_t> batch,
                  std::vector<MaxEntModel::Row>* grad) {
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t idx : batch) {
    MaxEntModel::Row scores{};
    for (auto id : feats[idx]) {
      const auto& row = model.row_at(id);
      for (std::size_t l = 0; l < kNumLabels; ++l) scores[l] += row[l];
    }
    const auto p = softmax(scores);
    const std::size_t gold = index_of(examples[idx].label);
    loss -= std::log(std::max(p[gold], 1e-300)) * inv;
    if (grad) {
      for (auto id : feats[idx]) {
        auto& g = (*grad)[id];
        for (std::size_t l = 0; l < kNumLabels; ++l) g[l] += (p[l] - (l == gold ? 1.0 : 0.0)) * inv;
      }
    }
  }
  return loss;
}

}  // namespace

PatternRule make_rule(std::string id, std::string_view template_str, RelLabel relation) {
  if (relation == RelLabel::NA) throw InvalidArgument("pattern rule '" + id + "' cannot carry NA");
  PatternRule rule;
  rule.id = std::move(id);
  rule.relation = relation;
  for (auto& item : text::split(template_str, ' ')) {
    if (item.empty()) continue;
    rule.items.push_back(is_slot(item) || item == "*" ? item : text::to_lower(item));
  }
  auto e1 = std::find(rule.items.begin(), rule.items.end(), "E1");
  auto e2 = std::find(rule.items.begin(), rule.items.end(), "E2");
  const auto n1 = std::count(rule.items.begin(), rule.items.end(), "E1");
  const auto n2 = std::count(rule.items.begin(), rule.items.end(), "E2");
  if (n1 != 1 || n2 != 1 || e1 > e2) {
    throw InvalidArgument("pattern rule '" + rule.id + "' needs E1 then E2, once each: " +
                          std::string(template_str));
  }
  return rule;
}

std::string template_text(const PatternRule& rule) { return text::join(rule.items, " "); }

std::vector<PatternRule> parse_rules(std::string_view json_text) {
  json arr;
  try {
    arr = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("rules: invalid JSON: ") + e.what());
  }
  if (!arr.is_array()) throw Error("rules: expected a JSON list");
  std::vector<PatternRule> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& obj = arr[i];
    const std::string where = "rules[" + std::to_string(i) + "]";
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("template") || !obj.contains("relation")) {
      throw Error(where + ": expected {id, template, relation}");
    }
    auto label = parse_label(obj["relation"].get<std::string>());
    if (!label) throw Error(where + ": unknown relation '" + obj["relation"].get<std::string>() + "'");
    out.push_back(make_rule(obj["id"].get<std::string>(), obj["template"].get<std::string>(), *label));
  }
  return out;
}

std::vector<PatternRule> read_rules(const std::filesystem::path& path) { return parse_rules(slurp(path)); }

std::string rules_to_json(const std::vector<PatternRule>& rules) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rules) {
    nlohmann::ordered_json obj;
    obj["id"] = r.id;
    obj["template"] = template_text(r);
    obj["relation"] = to_string(r.relation);
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

void write_rules(const std::filesystem::path& path, const std::vector<PatternRule>& rules) {
  spit(path, rules_to_json(rules));
}

std::vector<PatternHit> match_patterns(const std::vector<std::string>& tokens,
                                       const std::vector<EntityMention>& mentions,
                                       const std::vector<PatternRule>& rules, const MatchOptions& options) {
  std::vector<PatternHit> hits;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    for (std::size_t j = 0; j < mentions.size(); ++j) {
      const Span a = mentions[i].span;
      const Span b = mentions[j].span;
      if (a.end > b.start) continue;
      for (const auto& rule : rules) {
        const auto& it = rule.items;
        const std::size_t p1 = std::find(it.begin(), it.end(), "E1") - it.begin();
        const std::size_t p2 = std::find(it.begin(), it.end(), "E2") - it.begin();
        // prefix before E1, gap between the slots, suffix after E2
        if (a.start < p1 || !range_matches(it, 0, p1, tokens, a.start - p1)) continue;
        if (!range_matches(it, p2 + 1, it.size(), tokens, b.end)) continue;
        const std::size_t need = p2 - p1 - 1;
        const std::size_t gap = b.start - a.end;
        bool ok = false;
        if (gap == need) {
          ok = range_matches(it, p1 + 1, p2, tokens, a.end);
        } else if (need > 0 && gap > need && gap - need <= options.leading_slack && it[p1 + 1] != "*") {
          ok = range_matches(it, p1 + 1, p2, tokens, b.start - need);
        }
        if (ok) hits.push_back({a, b, rule.relation, rule.id});
      }
    }
  }
  std::stable_sort(hits.begin(), hits.end(), [](const PatternHit& x, const PatternHit& y) {
    if (x.e1 != y.e1) return x.e1 < y.e1;
    return x.e2 < y.e2;
  });
  return hits;
}

std::vector<PatternRule> discover_patterns(const std::vector<ErcExample>& examples, std::size_t min_count,
                                           std::size_t max_length, std::string_view id_prefix) {
  std::map<std::string, std::array<std::size_t, kNumLabels>> counts;
  for (const auto& ex : examples) {
    if (ex.label == RelLabel::NA) continue;
    const std::size_t gap = ex.e2.start - ex.e1.end;
    if (gap == 0 || gap > max_length) continue;
    std::vector<std::string> seq;
    for (std::size_t k = ex.e1.end; k < ex.e2.start; ++k) seq.push_back(text::to_lower(ex.tokens[k]));
    ++counts[text::join(seq, " ")][index_of(ex.label)];
  }
  std::vector<PatternRule> out;
  for (const auto& [seq, per_label] : counts) {
    std::size_t total = 0, best = 0, best_count = 0, ties = 0;
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      total += per_label[l];
      if (per_label[l] > best_count) {
        best = l;
        best_count = per_label[l];
        ties = 0;
      } else if (per_label[l] == best_count && best_count > 0) {
        ++ties;
      }
    }
    if (total < min_count || ties > 0) continue;
    char id[32];
    std::snprintf(id, sizeof(id), "-%03zu", out.size() + 1);
    out.push_back(make_rule(std::string(id_prefix) + id, "E1 " + seq + " E2", label_at(best)));
  }
  return out;
}

const MaxEntModel::Row* MaxEntModel::find(std::string_view feature) const {
  auto id = index_of_feature(feature);
  return id == npos ? nullptr : &rows_[id];
}

std::size_t MaxEntModel::index_of_feature(std::string_view feature) const {
  auto it = index_.find(std::string(feature));
  return it == index_.end() ? npos : it->second;
}

MaxEntModel::Row& MaxEntModel::row(const std::string& feature) {
  auto [it, inserted] = index_.emplace(feature, rows_.size());
  if (inserted) {
    names_.push_back(feature);
    rows_.push_back(Row{});
  }
  return rows_[it->second];
}

std::vector<std::string> relation_features(const std::vector<std::string>& tokens, Span e1, Span e2,
                                           const std::vector<PatternRule>& rules) {
  check_spans(tokens.size(), e1, e2);
  auto tok = [&](std::ptrdiff_t i) -> std::string {
    if (i < 0) return "BOS";
    if (static_cast<std::size_t>(i) >= tokens.size()) return "EOS";
    return text::to_lower(tokens[static_cast<std::size_t>(i)]);
  };
  auto mention = [&](Span s) {
    std::vector<std::string> parts;
    for (std::size_t k = s.start; k < s.end; ++k) parts.push_back(text::to_lower(tokens[k]));
    return text::join(parts, " ");
  };
  std::vector<std::string> f;
  f.emplace_back("bias");
  for (std::size_t k = e1.end; k < e2.start; ++k) f.push_back("btw=" + tok(static_cast<std::ptrdiff_t>(k)));
  f.push_back("m1=" + mention(e1));
  f.push_back("m2=" + mention(e2));
  const char* names[] = {"m1", "m2"};
  const Span spans[] = {e1, e2};
  for (int m = 0; m < 2; ++m) {
    const auto s = static_cast<std::ptrdiff_t>(spans[m].start);
    const auto e = static_cast<std::ptrdiff_t>(spans[m].end);
    f.push_back(std::string(names[m]) + "[-2]=" + tok(s - 2));
    f.push_back(std::string(names[m]) + "[-1]=" + tok(s - 1));
    f.push_back(std::string(names[m]) + "[+1]=" + tok(e));
    f.push_back(std::string(names[m]) + "[+2]=" + tok(e + 1));
  }
  f.push_back("dist=" + distance_bucket(e2.start - e1.end));
  if (!rules.empty()) {
    const std::vector<EntityMention> pair = {{e1, mention(e1), EntityClass::Con},
                                             {e2, mention(e2), EntityClass::Con}};
    for (const auto& hit : match_patterns(tokens, pair, rules)) f.push_back("pat=" + hit.rule_id);
  }
  return f;
}

RelationPrediction classify_relation(const MaxEntModel& model, const std::vector<std::string>& tokens, Span e1,
                                     Span e2) {
  const auto p = softmax(scores_of(model, relation_features(tokens, e1, e2, model.rules())));
  RelationPrediction out;
  out.probabilities = p;
  std::size_t best = 0;
  for (std::size_t l = 1; l < kNumLabels; ++l) {
    if (p[l] > p[best]) best = l;
  }
  out.label = label_at(best);
  return out;
}

MaxEntModel train_classifier(const std::vector<ErcExample>& dataset, const MaxEntOptions& options,
                             std::vector<PatternRule> rules) {
  if (dataset.empty()) throw InvalidArgument("train_classifier: empty dataset");
  if (!(options.learning_rate > 0.0)) throw InvalidArgument("train_classifier: learning_rate must be > 0");
  MaxEntModel model(std::move(rules));
  for (const auto& ex : dataset) {
    for (const auto& f : relation_features(ex.tokens, ex.e1, ex.e2, model.rules())) model.row(f);
  }
  const auto feats = index_examples(model, dataset);
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<MaxEntModel::Row> grad(model.num_features());
  Rng rng(options.seed);

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t b = 0; b < order.size(); b += batch_size) {
      const auto batch = std::span<const std::size_t>(order).subspan(b, std::min(batch_size, order.size() - b));
      std::fill(grad.begin(), grad.end(), MaxEntModel::Row{});
      batch_loss(model, feats, dataset, batch, &grad);
      for (std::size_t id = 0; id < grad.size(); ++id) {
        auto& row = model.row_at(id);
        for (std::size_t l = 0; l < kNumLabels; ++l) {
          row[l] -= options.learning_rate * (grad[id][l] + options.l2 * row[l]);
        }
      }
    }
  }
  return model;
}

double maxent_loss(const MaxEntModel& model, const std::vector<ErcExample>& examples, double l2,
                   std::vector<MaxEntModel::Row>* gradient) {
  if (examples.empty()) throw InvalidArgument("maxent_loss: no examples");
  const auto feats = index_examples(model, examples);
  if (gradient) gradient->assign(model.num_features(), MaxEntModel::Row{});
  std::vector<std::size_t> all(examples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  double loss = batch_loss(model, feats, examples, all, gradient);
  for (std::size_t id = 0; id < model.num_features(); ++id) {
    for (std::size_t l = 0; l < kNumLabels; ++l) {
      const double w = model.row_at(id)[l];
      loss += 0.5 * l2 * w * w;
      if (gradient) (*gradient)[id][l] += l2 * w;
    }
  }
  return loss;
}

double accuracy(const MaxEntModel& model, const std::vector<ErcExample>& examples) {
  if (examples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    if (classify_relation(model, ex.tokens, ex.e1, ex.e2).label == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::string maxent_to_json(const MaxEntModel& model) {
  json obj;
  json labels = json::array();
  for (std::size_t l = 0; l < kNumLabels; ++l) labels.push_back(to_string(label_at(l)));
  obj["labels"] = labels;
  json weights = json::object();
  for (std::size_t id = 0; id < model.num_features(); ++id) {
    weights[model.feature_names()[id]] = model.row_at(id);
  }
  obj["weights"] = std::move(weights);
  obj["rules"] = json::parse(rules_to_json(model.rules()));
  return obj.dump() + "\n";
}

MaxEntModel maxent_from_json(std::string_view json_text) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("maxent model: invalid JSON: ") + e.what());
  }
  if (!obj.is_object() || !obj.contains("weights") || !obj.contains("labels")) {
    throw Error("maxent model: expected {labels, weights, rules}");
  }
  const auto& labels = obj["labels"];
  if (!labels.is_array() || labels.size() != kNumLabels) throw Error("maxent model: expected 13 labels");
  for (std::size_t l = 0; l < kNumLabels; ++l) {
    if (labels[l] != to_string(label_at(l))) throw Error("maxent model: label order mismatch");
  }
  std::vector<PatternRule> rules;
  if (obj.contains("rules")) rules = parse_rules(obj["rules"].dump());
  MaxEntModel model(std::move(rules));
  for (const auto& [name, values] : obj["weights"].items()) {
    if (!values.is_array() || values.size() != kNumLabels) {
      throw Error("maxent model: feature '" + name + "' needs 13 weights");
    }
    auto& row = model.row(name);
    for (std::size_t l = 0; l < kNumLabels; ++l) row[l] = values[l].get<double>();
  }
  return model;
}

void save_maxent(const std::filesystem::path& path, const MaxEntModel& model) {
  spit(path, maxent_to_json(model));
}

MaxEntModel load_maxent(const std::filesystem::path& path) { return maxent_from_json(slurp(path)); }

}  // namespace mathkg
