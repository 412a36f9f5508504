#include "mathkg/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/random.hpp"

namespace mathkg {

namespace {

std::size_t relation_index(Relation r) { return static_cast<std::size_t>(r); }

// h + r - t
std::vector<double> residual(std::span<const double> h, std::span<const double> r, std::span<const double> t) {
  std::vector<double> out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) out[i] = h[i] + r[i] - t[i];
  return out;
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void accumulate(std::vector<double>& into, const std::vector<double>& v, double scale) {
  if (into.empty()) into.assign(v.size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) into[i] += scale * v[i];
}

}  // namespace

EmbeddingTable::EmbeddingTable(std::size_t dim, std::vector<std::string> entity_ids)
    : dim_(dim), ids_(std::move(entity_ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  data_.assign(ids_.size() * dim_, 0.0);
  for (auto& r : relations_) r.assign(dim_, 0.0);
}

std::size_t EmbeddingTable::index_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) throw NotFoundError(std::string(id));
  return it->second;
}

std::span<const double> EmbeddingTable::entity(std::string_view id) const { return entity_at(index_of(id)); }
std::span<double> EmbeddingTable::entity(std::string_view id) { return entity_at(index_of(id)); }
std::span<const double> EmbeddingTable::relation(Relation r) const { return relations_[relation_index(r)]; }
std::span<double> EmbeddingTable::relation(Relation r) { return relations_[relation_index(r)]; }

void EmbeddingTable::normalize_entities() {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    auto v = entity_at(i);
    double s = 0.0;
    for (double x : v) s += x * x;
    if (s == 0.0) continue;
    const double n = std::sqrt(s);
    for (double& x : v) x /= n;
  }
}

double score_triple(const EmbeddingTable& table, std::string_view head, Relation r, std::string_view tail) {
  return norm(residual(table.entity(head), table.relation(r), table.entity(tail)));
}

double margin_loss(const EmbeddingTable& table, const TriplePair& pair, double margin, MarginGradient* gradient) {
  const auto pos = residual(table.entity(pair.head), table.relation(pair.relation), table.entity(pair.tail));
  const auto neg = residual(table.entity(pair.neg_head), table.relation(pair.relation), table.entity(pair.neg_tail));
  const double dp = norm(pos);
  const double dn = norm(neg);
  const double loss = margin + dp - dn;
  if (loss <= 0.0) return 0.0;
  if (gradient) {
    // d||x|| / dx = x / ||x||; the zero vector contributes nothing
    if (dp > 0.0) {
      accumulate(gradient->entities[pair.head], pos, 1.0 / dp);
      accumulate(gradient->relations[pair.relation], pos, 1.0 / dp);
      accumulate(gradient->entities[pair.tail], pos, -1.0 / dp);
    }
    if (dn > 0.0) {
      accumulate(gradient->entities[pair.neg_head], neg, -1.0 / dn);
      accumulate(gradient->relations[pair.relation], neg, -1.0 / dn);
      accumulate(gradient->entities[pair.neg_tail], neg, 1.0 / dn);
    }
  }
  return loss;
}

double full_margin_loss(const EmbeddingTable& table, const KnowledgeGraph& graph, double margin) {
  double total = 0.0;
  std::size_t terms = 0;
  for (const auto& t : graph.triples()) {
    for (const auto& e : table.entity_ids()) {
      for (bool corrupt_head : {true, false}) {
        TriplePair p{t.head, t.tail, corrupt_head ? e : t.head, corrupt_head ? t.tail : e, t.relation};
        if (graph.has_triple(p.neg_head, t.relation, p.neg_tail) || p.neg_head == p.neg_tail) continue;
        total += margin_loss(table, p, margin);
        ++terms;
      }
    }
  }
  return terms ? total / static_cast<double>(terms) : 0.0;
}

EmbeddingTable train_transe(const KnowledgeGraph& graph, const TransEOptions& options) {
  return detail::train_transe_impl(graph, options, nullptr, nullptr);
}

namespace detail {

EmbeddingTable train_transe_impl(const KnowledgeGraph& graph, const TransEOptions& options, EpochCallback cb,
                                 void* ctx) {
  if (graph.num_triples() == 0) throw InvalidArgument("train_transe: graph has no triples");
  if (options.dim == 0) throw InvalidArgument("train_transe: dim must be >= 1");
  if (!(options.margin > 0.0)) throw InvalidArgument("train_transe: margin must be > 0");

  std::vector<std::string> ids;
  for (const auto& [id, e] : graph.entities()) ids.push_back(id);
  EmbeddingTable table(options.dim, ids);
  Rng rng(options.seed);
  const double bound = 6.0 / std::sqrt(static_cast<double>(options.dim));
  for (std::size_t i = 0; i < table.entity_ids().size(); ++i) {
    for (double& x : table.entity_at(i)) x = rng.uniform(-bound, bound);
  }
  for (Relation r : kAllRelations) {
    auto v = table.relation(r);
    double s = 0.0;
    for (double& x : v) {
      x = rng.uniform(-bound, bound);
      s += x * x;
    }
    const double n = std::sqrt(s);
    if (n > 0.0) {
      for (double& x : v) x /= n;
    }
  }
  table.normalize_entities();
  if (cb) cb(ctx, 0, table);

  const auto triples = graph.triples();
  const std::size_t n_entities = table.entity_ids().size();
  std::vector<std::size_t> order(triples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  constexpr int kMaxRejections = 100;

  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t idx : order) {
      const auto& t = triples[idx];
      for (std::size_t n = 0; n < options.negatives_per_positive; ++n) {
        TriplePair pair{t.head, t.tail, t.head, t.tail, t.relation};
        bool found = false;
        for (int attempt = 0; attempt < kMaxRejections && !found; ++attempt) {
          const bool corrupt_head = rng.coin();
          const auto& e = table.entity_ids()[rng.uniform_index(n_entities)];
          pair.neg_head = corrupt_head ? e : t.head;
          pair.neg_tail = corrupt_head ? t.tail : e;
          found = pair.neg_head != pair.neg_tail && !graph.has_triple(pair.neg_head, t.relation, pair.neg_tail);
        }
        if (!found) continue;
        MarginGradient grad;
        if (margin_loss(table, pair, options.margin, &grad) <= 0.0) continue;
        for (const auto& [id, g] : grad.entities) {
          auto v = table.entity(id);
          for (std::size_t i = 0; i < v.size(); ++i) v[i] -= options.learning_rate * g[i];
        }
        for (const auto& [r, g] : grad.relations) {
          auto v = table.relation(r);
          for (std::size_t i = 0; i < v.size(); ++i) v[i] -= options.learning_rate * g[i];
        }
      }
    }
    table.normalize_entities();
    if (cb) cb(ctx, epoch, table);
  }
  return table;
}

}  // namespace detail

std::vector<std::pair<std::string, double>> rank_tails(const EmbeddingTable& table, const KnowledgeGraph& graph,
                                                       std::string_view head, Relation r) {
  if (!graph.contains(head)) throw NotFoundError(std::string(head));
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [id, e] : graph.entities()) out.emplace_back(id, score_triple(table, head, r, id));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  return out;
}

LinkPredictionMetrics evaluate_tails(const EmbeddingTable& table, const KnowledgeGraph& graph,
                                     const std::vector<Triple>& triples) {
  LinkPredictionMetrics m;
  if (triples.empty()) return m;
  for (const auto& t : triples) {
    const auto ranking = rank_tails(table, graph, t.head, t.relation);
    std::size_t rank = 1;
    while (rank <= ranking.size() && ranking[rank - 1].first != t.tail) ++rank;
    m.mean_rank += static_cast<double>(rank);
    if (rank <= 1) m.hits_at_1 += 1.0;
    if (rank <= 10) m.hits_at_10 += 1.0;
  }
  const double n = static_cast<double>(triples.size());
  m.mean_rank /= n;
  m.hits_at_1 /= n;
  m.hits_at_10 /= n;
  return m;
}

double hits_at_k(const EmbeddingTable& table, const KnowledgeGraph& graph, const std::vector<Triple>& triples,
                 std::size_t k) {
  if (triples.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& t : triples) {
    const auto ranking = rank_tails(table, graph, t.head, t.relation);
    for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
      if (ranking[i].first == t.tail) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(triples.size());
}

std::string embeddings_to_json(const EmbeddingTable& table) {
  nlohmann::ordered_json obj;
  obj["dim"] = table.dim();
  nlohmann::ordered_json ents = nlohmann::ordered_json::object();
  for (std::size_t i = 0; i < table.entity_ids().size(); ++i) {
    auto v = table.entity_at(i);
    ents[table.entity_ids()[i]] = std::vector<double>(v.begin(), v.end());
  }
  obj["entities"] = std::move(ents);
  nlohmann::ordered_json rels = nlohmann::ordered_json::object();
  for (Relation r : kAllRelations) {
    auto v = table.relation(r);
    rels[std::string(to_string(r))] = std::vector<double>(v.begin(), v.end());
  }
  obj["relations"] = std::move(rels);
  return obj.dump() + "\n";
}

EmbeddingTable embeddings_from_json(std::string_view json_text) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("embeddings: invalid JSON: ") + e.what());
  }
  if (!obj.is_object() || !obj.contains("dim") || !obj.contains("entities") || !obj.contains("relations")) {
    throw Error("embeddings: expected {dim, entities, relations}");
  }
  const auto dim = obj["dim"].get<std::size_t>();
  std::vector<std::string> ids;
  for (const auto& [id, v] : obj["entities"].items()) ids.push_back(id);
  EmbeddingTable table(dim, ids);
  auto fill = [&](std::span<double> dst, const nlohmann::json& src, const std::string& what) {
    if (!src.is_array() || src.size() != dim) throw Error("embeddings: vector for '" + what + "' has wrong length");
    for (std::size_t i = 0; i < dim; ++i) dst[i] = src[i].get<double>();
  };
  for (const auto& [id, v] : obj["entities"].items()) fill(table.entity(id), v, id);
  for (const auto& [label, v] : obj["relations"].items()) {
    auto r = parse_relation(label);
    if (!r) throw Error("embeddings: unknown relation '" + label + "'");
    fill(table.relation(*r), v, label);
  }
  return table;
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << embeddings_to_json(table);
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return embeddings_from_json(ss.str());
}

}  // namespace mathkg
