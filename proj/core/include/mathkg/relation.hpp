#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mathkg {

/// Knowledge entity classes: concepts (CON) and theorems/laws/rules (LEG).
enum class EntityClass : std::uint8_t { Con, Leg };

std::string_view to_string(EntityClass c);
std::optional<EntityClass> parse_entity_class(std::string_view s);

/// The six relation types between knowledge points.
enum class Relation : std::uint8_t { Dep, Aff, Equ, Ant, Syn, Pro };

inline constexpr std::array<Relation, 6> kAllRelations = {
    Relation::Dep, Relation::Aff, Relation::Equ, Relation::Ant, Relation::Syn, Relation::Pro};

std::string_view to_string(Relation r);
/// Accepts canonical names plus long-form aliases ("dependencies",
/// "opposite", "antisense", "has properties", ...), case-insensitive.
std::optional<Relation> parse_relation(std::string_view s);

/// Equ, Ant and Syn are stored once with head < tail.
constexpr bool is_symmetric(Relation r) {
  return r == Relation::Equ || r == Relation::Ant || r == Relation::Syn;
}

/// 13-way relation-classification label: six relations times two
/// directions, plus NA. "Forward" means head is the earlier mention.
enum class RelLabel : std::uint8_t {
  DepFwd, DepBwd, AffFwd, AffBwd, EquFwd, EquBwd,
  AntFwd, AntBwd, SynFwd, SynBwd, ProFwd, ProBwd, NA
};

inline constexpr std::size_t kNumLabels = 13;

constexpr std::size_t index_of(RelLabel l) { return static_cast<std::size_t>(l); }
constexpr RelLabel label_at(std::size_t i) { return static_cast<RelLabel>(i); }

RelLabel make_label(Relation r, bool forward);
std::optional<Relation> relation_of(RelLabel l);
bool is_forward(RelLabel l);

/// "Dep->", "Dep<-", ..., "NA".
std::string to_string(RelLabel l);
/// Accepts "->"/"<-" and the arrows U+2192/U+2190, plus relation aliases.
std::optional<RelLabel> parse_label(std::string_view s);

/// BIO tag set, in the fixed decoding order.
enum class Tag : std::uint8_t { BCon, ICon, BLeg, ILeg, O };

inline constexpr std::size_t kNumTags = 5;
inline constexpr std::array<Tag, kNumTags> kTagset = {Tag::BCon, Tag::ICon, Tag::BLeg,
                                                      Tag::ILeg, Tag::O};

constexpr std::size_t index_of(Tag t) { return static_cast<std::size_t>(t); }

std::string_view to_string(Tag t);
std::optional<Tag> parse_tag(std::string_view s);

constexpr bool is_begin(Tag t) { return t == Tag::BCon || t == Tag::BLeg; }
constexpr bool is_inside(Tag t) { return t == Tag::ICon || t == Tag::ILeg; }
constexpr EntityClass class_of(Tag t) {
  return (t == Tag::BLeg || t == Tag::ILeg) ? EntityClass::Leg : EntityClass::Con;
}
constexpr Tag begin_tag(EntityClass c) { return c == EntityClass::Leg ? Tag::BLeg : Tag::BCon; }
constexpr Tag inside_tag(EntityClass c) { return c == EntityClass::Leg ? Tag::ILeg : Tag::ICon; }

/// I-X may only follow B-X or I-X; nothing else constrains the sequence.
constexpr bool transition_allowed(std::optional<Tag> prev, Tag next) {
  if (!is_inside(next)) return true;
  if (!prev) return false;
  return class_of(*prev) == class_of(next) && *prev != Tag::O;
}

}  // namespace mathkg
