#include "mathkg/relation.hpp"

#include <string>

#include "mathkg/text.hpp"

namespace mathkg {

std::string_view to_string(EntityClass c) { return c == EntityClass::Leg ? "LEG" : "CON"; }

std::optional<EntityClass> parse_entity_class(std::string_view s) {
  const auto lowered = text::to_lower(s);
  if (lowered == "con") return EntityClass::Con;
  if (lowered == "leg") return EntityClass::Leg;
  return std::nullopt;
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::Dep: return "Dep";
    case Relation::Aff: return "Aff";
    case Relation::Equ: return "Equ";
    case Relation::Ant: return "Ant";
    case Relation::Syn: return "Syn";
    case Relation::Pro: return "Pro";
  }
  return "?";
}

std::optional<Relation> parse_relation(std::string_view s) {
  const auto n = text::normalize_name(s);
  if (n == "dep" || n == "dependencies" || n == "dependency") return Relation::Dep;
  if (n == "aff" || n == "affiliation") return Relation::Aff;
  if (n == "equ" || n == "equivalence") return Relation::Equ;
  if (n == "ant" || n == "opposite" || n == "antisense") return Relation::Ant;
  if (n == "syn" || n == "synonyms" || n == "synonym") return Relation::Syn;
  if (n == "pro" || n == "has properties" || n == "has property" || n == "has") return Relation::Pro;
  return std::nullopt;
}

RelLabel make_label(Relation r, bool forward) {
  return label_at(static_cast<std::size_t>(r) * 2 + (forward ? 0 : 1));
}

std::optional<Relation> relation_of(RelLabel l) {
  if (l == RelLabel::NA) return std::nullopt;
  return static_cast<Relation>(index_of(l) / 2);
}

bool is_forward(RelLabel l) { return l != RelLabel::NA && index_of(l) % 2 == 0; }

std::string to_string(RelLabel l) {
  auto rel = relation_of(l);
  if (!rel) return "NA";
  return std::string(to_string(*rel)) + (is_forward(l) ? "->" : "<-");
}

std::optional<RelLabel> parse_label(std::string_view s) {
  std::string str(s);
  if (text::to_lower(str) == "na") return RelLabel::NA;
  auto strip = [&](std::string_view suffix) {
    if (str.size() >= suffix.size() && str.ends_with(suffix)) {
      str.resize(str.size() - suffix.size());
      return true;
    }
    return false;
  };
  bool forward;
  if (strip("->") || strip("\xE2\x86\x92")) {
    forward = true;
  } else if (strip("<-") || strip("\xE2\x86\x90")) {
    forward = false;
  } else {
    return std::nullopt;
  }
  auto rel = parse_relation(str);
  if (!rel) return std::nullopt;
  return make_label(*rel, forward);
}

std::string_view to_string(Tag t) {
  switch (t) {
    case Tag::BCon: return "B-CON";
    case Tag::ICon: return "I-CON";
    case Tag::BLeg: return "B-LEG";
    case Tag::ILeg: return "I-LEG";
    case Tag::O: return "O";
  }
  return "?";
}

std::optional<Tag> parse_tag(std::string_view s) {
  for (Tag t : kTagset) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

}  // namespace mathkg

#include "mathkg/dataset.hpp"
#include "mathkg/error.hpp"
#include "mathkg/triple.hpp"

namespace mathkg {

bool is_well_formed(const std::vector<Tag>& tags) {
  std::optional<Tag> prev;
  for (Tag t : tags) {
    if (!transition_allowed(prev, t)) return false;
    prev = t;
  }
  return true;
}

std::vector<TaggedSpan> spans_from_tags(const std::vector<Tag>& tags) {
  std::vector<TaggedSpan> out;
  std::optional<TaggedSpan> open;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const Tag t = tags[i];
    const bool continues = open && is_inside(t) && class_of(t) == open->entity_class;
    if (continues) {
      open->span.end = i + 1;
      continue;
    }
    if (open) out.push_back(*open);
    open.reset();
    if (t != Tag::O) open = TaggedSpan{{i, i + 1}, class_of(t)};
  }
  if (open) out.push_back(*open);
  return out;
}

std::string to_string(Provenance p) {
  std::string out;
  auto add = [&](Provenance flag, const char* name) {
    if (!has(p, flag)) return;
    if (!out.empty()) out += ',';
    out += name;
  };
  add(Provenance::Infobox, "infobox");
  add(Provenance::Pattern, "pattern");
  add(Provenance::Classifier, "classifier");
  add(Provenance::Manual, "manual");
  return out;
}

Provenance parse_provenance(std::string_view s) {
  Provenance p = Provenance::None;
  for (const auto& part : text::split(s, ',')) {
    if (part == "infobox") p = p | Provenance::Infobox;
    else if (part == "pattern") p = p | Provenance::Pattern;
    else if (part == "classifier") p = p | Provenance::Classifier;
    else if (part == "manual") p = p | Provenance::Manual;
    else throw Error("unknown provenance tag '" + part + "'");
  }
  return p;
}

}  // namespace mathkg
