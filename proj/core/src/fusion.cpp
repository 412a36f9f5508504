#include "mathkg/fusion.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <tuple>
#include <unordered_map>

#include "json.hpp"
#include "mathkg/error.hpp"
#include "mathkg/text.hpp"

namespace mathkg {

namespace {

class UnionFind {
 public:
  std::size_t id(const std::string& name) {
    auto [it, inserted] = index_.emplace(name, parent_.size());
    if (inserted) {
      parent_.push_back(parent_.size());
      names_.push_back(name);
    }
    return it->second;
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    // keep the lexicographically smallest name as the root
    if (names_[b] < names_[a]) std::swap(a, b);
    parent_[b] = a;
  }

  const std::string& name(std::size_t x) const { return names_[x]; }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::size_t> parent_;
  std::vector<std::string> names_;
};

int origin_rank(std::string_view origin) {
  if (origin == "document") return 0;
  if (origin == "infobox") return 1;
  if (origin == "text") return 2;
  if (origin == "manual") return 3;
  return 4;
}

}  // namespace

AliasMap resolve_aliases(const std::vector<std::string>& surfaces,
                         const std::vector<std::pair<std::string, std::string>>& evidence) {
  UnionFind uf;
  for (const auto& s : surfaces) {
    auto n = text::normalize_name(s);
    if (!n.empty()) uf.id(n);
  }
  for (const auto& [a, b] : evidence) {
    auto na = text::normalize_name(a);
    auto nb = text::normalize_name(b);
    if (na.empty() || nb.empty()) continue;
    uf.unite(uf.id(na), uf.id(nb));
  }
  AliasMap out;
  auto record = [&](const std::string& s) {
    auto n = text::normalize_name(s);
    if (n.empty()) return;
    const auto& canon = uf.name(uf.find(uf.id(n)));
    out[s] = canon;
    out[n] = canon;
  };
  for (const auto& s : surfaces) record(s);
  for (const auto& [a, b] : evidence) {
    record(a);
    record(b);
  }
  return out;
}

std::string canonical_of(const AliasMap& aliases, std::string_view surface) {
  if (auto it = aliases.find(surface); it != aliases.end()) return it->second;
  auto n = text::normalize_name(surface);
  if (auto it = aliases.find(n); it != aliases.end()) return it->second;
  return n;
}

std::vector<std::pair<std::string, std::string>> equivalence_evidence(const std::vector<Triple>& triples,
                                                                      double min_confidence) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& t : triples) {
    if (t.relation == Relation::Equ && t.confidence >= min_confidence) out.emplace_back(t.head, t.tail);
  }
  return out;
}

std::vector<Triple> merge_triples(const std::vector<Triple>& raw) {
  std::map<std::tuple<std::string, Relation, std::string>, Triple> merged;
  for (Triple t : raw) {
    if (!(t.confidence >= 0.0 && t.confidence <= 1.0)) {
      throw InvalidArgument("merge_triples: confidence " + text::format_double(t.confidence) + " outside [0, 1]");
    }
    if (t.head == t.tail) continue;
    if (is_symmetric(t.relation) && t.tail < t.head) std::swap(t.head, t.tail);
    auto key = std::make_tuple(t.head, t.relation, t.tail);
    auto [it, inserted] = merged.emplace(key, t);
    if (!inserted) {
      it->second.confidence = std::max(it->second.confidence, t.confidence);
      it->second.provenance = it->second.provenance | t.provenance;
    }
  }
  std::vector<Triple> out;
  out.reserve(merged.size());
  for (auto& [key, t] : merged) out.push_back(std::move(t));
  return out;
}

FusionResult fuse(const FusionInput& input) {
  std::vector<std::string> all_surfaces;
  for (const auto& d : input.documents) all_surfaces.push_back(d.title);
  for (const auto& e : input.entities) all_surfaces.push_back(e.surface);
  for (const auto* list : {&input.triples, &input.manual}) {
    for (const auto& t : *list) {
      all_surfaces.push_back(t.head);
      all_surfaces.push_back(t.tail);
    }
  }

  std::vector<Triple> raw = input.triples;
  raw.insert(raw.end(), input.manual.begin(), input.manual.end());
  auto evidence = equivalence_evidence(raw, input.equivalence_threshold);
  std::map<std::string, std::string> first_with_key;
  for (const auto& s : all_surfaces) {
    const auto key = token_key(s);
    if (key.empty()) continue;
    auto [it, inserted] = first_with_key.emplace(key, s);
    if (!inserted && text::normalize_name(it->second) != text::normalize_name(s)) evidence.emplace_back(it->second, s);
  }

  FusionResult result;
  result.aliases = resolve_aliases(all_surfaces, evidence);

  for (auto& t : raw) {
    t.head = canonical_of(result.aliases, t.head);
    t.tail = canonical_of(result.aliases, t.tail);
  }
  result.triples = merge_triples(raw);

  struct Acc {
    KnowledgeEntity entity;
    bool has_class = false;
    bool conflict = false;
    int origin = 99;
    std::string origin_name;
  };
  std::map<std::string, Acc> acc;
  auto touch = [&](const std::string& surface) -> Acc* {
    auto n = text::normalize_name(surface);
    if (n.empty()) return nullptr;
    auto canon = canonical_of(result.aliases, surface);
    auto& a = acc[canon];
    a.entity.id = canon;
    a.entity.names.insert(canon);
    a.entity.names.insert(n);
    return &a;
  };
  auto set_origin = [](Acc& a, const std::string& origin) {
    if (origin_rank(origin) < a.origin) {
      a.origin = origin_rank(origin);
      a.origin_name = origin;
    }
  };
  auto set_class = [&](Acc& a, EntityClass cls) {
    if (!a.has_class) {
      a.entity.entity_class = cls;
      a.has_class = true;
    } else if (a.entity.entity_class != cls && !a.conflict) {
      a.conflict = true;
      a.entity.entity_class = EntityClass::Con;
      result.warnings.push_back("class conflict for '" + a.entity.id + "': resolved to CON");
    }
  };

  for (const auto& e : input.entities) {
    if (auto* a = touch(e.surface)) {
      set_class(*a, e.entity_class);
      set_origin(*a, e.origin);
    }
  }
  for (const auto& t : raw) {
    for (const auto* s : {&t.head, &t.tail}) {
      if (auto* a = touch(*s)) set_origin(*a, has(t.provenance, Provenance::Manual) ? "manual" : "text");
    }
  }
  for (const auto& d : input.documents) {
    auto* a = touch(d.title);
    if (!a) continue;
    set_origin(*a, "document");
    auto& attrs = a->entity.attributes;
    auto put = [&](const std::string& k, const std::string& v) {
      if (!v.empty()) attrs.emplace(k, v);
    };
    put("doc_id", d.id);
    put("title", d.title);
    put("abstract", d.abstract);
    put("categories", text::join(d.categories, "; "));
    put("links", text::join(d.links, "; "));
    for (const auto& [k, v] : d.infobox) put("infobox." + k, v);
    for (std::size_t i = 0; i < d.formulas.size(); ++i) put("formula." + std::to_string(i + 1), d.formulas[i]);
  }
  for (auto& [id, a] : acc) {
    if (!a.origin_name.empty()) a.entity.attributes["origin"] = a.origin_name;
    result.entities.push_back(std::move(a.entity));
  }
  return result;
}

void write_triples(std::ostream& out, const std::vector<Triple>& triples) {
  for (const auto& t : triples) {
    out << t.head << '\t' << to_string(t.relation) << '\t' << t.tail << '\t' << text::format_double(t.confidence)
        << '\t' << to_string(t.provenance) << '\n';
  }
}

Triple parse_triple_line(std::string_view line) {
  auto cols = text::split(line, '\t');
  if (cols.size() != 5) throw Error("expected 5 tab-separated columns");
  Triple t;
  t.head = cols[0];
  t.tail = cols[2];
  if (t.head.empty() || t.tail.empty()) throw Error("empty entity id");
  auto rel = parse_relation(cols[1]);
  if (!rel) throw Error("unknown relation '" + cols[1] + "'");
  t.relation = *rel;
  t.confidence = text::parse_double(cols[3]);
  t.provenance = parse_provenance(cols[4]);
  if (!(t.confidence >= 0.0 && t.confidence <= 1.0)) throw Error("confidence outside [0, 1]");
  return t;
}

std::vector<Triple> read_triples(std::istream& in, const std::string& source) {
  std::vector<Triple> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    try {
      out.push_back(parse_triple_line(line));
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

std::vector<Triple> read_triples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_triples(in, path.string());
}

std::string entity_to_json(const KnowledgeEntity& e) {
  nlohmann::ordered_json obj;
  obj["id"] = e.id;
  obj["names"] = e.names;
  obj["class"] = to_string(e.entity_class);
  obj["attributes"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : e.attributes) obj["attributes"][k] = v;
  return obj.dump();
}

KnowledgeEntity entity_from_json(std::string_view line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw Error("entity must be a JSON object");
  KnowledgeEntity e;
  try {
    e.id = obj.at("id").get<std::string>();
    for (const auto& n : obj.value("names", nlohmann::json::array())) e.names.insert(n.get<std::string>());
    auto cls = parse_entity_class(obj.value("class", std::string("CON")));
    if (!cls) throw Error("unknown entity class");
    e.entity_class = *cls;
    const auto attrs = obj.value("attributes", nlohmann::json::object());
    for (const auto& [k, v] : attrs.items()) {
      e.attributes.emplace(k, v.get<std::string>());
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(std::string("bad entity: ") + ex.what());
  }
  if (e.id.empty()) throw Error("entity id must be non-empty");
  e.names.insert(e.id);
  return e;
}

void write_entities(std::ostream& out, const std::vector<KnowledgeEntity>& entities) {
  for (const auto& e : entities) out << entity_to_json(e) << '\n';
}

std::vector<KnowledgeEntity> read_entities(std::istream& in, const std::string& source) {
  std::vector<KnowledgeEntity> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    try {
      out.push_back(entity_from_json(line));
    } catch (const Error& e) {
      throw ParseError(source, lineno, e.what());
    }
  }
  return out;
}

}  // namespace mathkg
