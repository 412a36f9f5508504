#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mathkg/corpus.hpp"
#include "mathkg/relation.hpp"
#include "mathkg/triple.hpp"

namespace mathkg {

/// A canonical knowledge point. `names` holds the canonical id and every
/// alias, all in normalized form.
struct KnowledgeEntity {
  std::string id;
  std::set<std::string> names;
  EntityClass entity_class = EntityClass::Con;
  std::map<std::string, std::string> attributes;

  bool operator==(const KnowledgeEntity&) const = default;
};

using AliasMap = std::map<std::string, std::string, std::less<>>;

/// Union-find closure of the evidence pairs over normalized names (see
/// text::normalize_name). Every group is named by its lexicographically
/// smallest member. The result maps each input surface, raw and
/// normalized, to its canonical id.
AliasMap resolve_aliases(const std::vector<std::string>& surfaces,
                         const std::vector<std::pair<std::string, std::string>>& evidence);

/// Canonical id for a surface: the alias map entry if any, else the
/// normalized surface.
std::string canonical_of(const AliasMap& aliases, std::string_view surface);

/// Equ triples at or above `min_confidence` as alias evidence.
std::vector<std::pair<std::string, std::string>> equivalence_evidence(const std::vector<Triple>& triples,
                                                                      double min_confidence = 0.9);

/// Collapses duplicates (same head, relation, tail) to max confidence and
/// the union of provenance, orients symmetric relations head < tail and
/// drops self-loops. Output is sorted by (head, relation, tail). Throws
/// InvalidArgument for a confidence outside [0, 1].
std::vector<Triple> merge_triples(const std::vector<Triple>& raw);

/// An entity candidate before fusion. origin is one of document, infobox,
/// text or manual.
struct EntitySeed {
  std::string surface;
  EntityClass entity_class = EntityClass::Con;
  std::string origin;
};

struct FusionInput {
  std::vector<Document> documents;
  std::vector<EntitySeed> entities;
  std::vector<Triple> triples;
  std::vector<Triple> manual;
  double equivalence_threshold = 0.9;
};

struct FusionResult {
  std::vector<KnowledgeEntity> entities;  // sorted by id
  std::vector<Triple> triples;            // merge_triples order
  AliasMap aliases;
  std::vector<std::string> warnings;
};

/// Canonicalizes every surface (Equ evidence plus identical token keys),
/// rewrites and merges the triples, and builds one entity per canonical id
/// with document attributes attached. A class conflict inside a group
/// resolves to CON and is reported in `warnings`.
FusionResult fuse(const FusionInput& input);

/// triples.tsv: head<TAB>relation<TAB>tail<TAB>confidence<TAB>provenance.
/// Parses one triples.tsv line; throws mathkg::Error without position.
Triple parse_triple_line(std::string_view line);
void write_triples(std::ostream& out, const std::vector<Triple>& triples);
std::vector<Triple> read_triples(std::istream& in, const std::string& source = "<stream>");
std::vector<Triple> read_triples(const std::filesystem::path& path);

/// entities.jsonl: {"id", "names", "class", "attributes"} per line.
std::string entity_to_json(const KnowledgeEntity& e);
KnowledgeEntity entity_from_json(std::string_view line);
void write_entities(std::ostream& out, const std::vector<KnowledgeEntity>& entities);
std::vector<KnowledgeEntity> read_entities(std::istream& in, const std::string& source = "<stream>");

}  // namespace mathkg
