#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mathkg/relation.hpp"

namespace mathkg {

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - start; }
  bool overlaps(const Span& o) const { return start < o.end && o.start < end; }
  auto operator<=>(const Span&) const = default;
};

/// A gazetteer or tagger hit; `key` is the normalized token form
/// (see Gazetteer::key_of).
struct EntityMention {
  Span span;
  std::string key;
  EntityClass entity_class = EntityClass::Con;

  bool operator==(const EntityMention&) const = default;
};

/// One BIO-labeled sentence for knowledge entity recognition.
struct KerExample {
  std::vector<std::string> tokens;
  std::vector<Tag> tags;

  bool operator==(const KerExample&) const = default;
};

/// One entity pair in a sentence for relation classification. e1 is
/// always the earlier mention; the label arrow carries the direction.
struct ErcExample {
  std::vector<std::string> tokens;
  Span e1;
  Span e2;
  RelLabel label = RelLabel::NA;

  bool operator==(const ErcExample&) const = default;
};

/// True when I-X only ever follows B-X or I-X.
bool is_well_formed(const std::vector<Tag>& tags);

/// Entity spans of a tag sequence, conlleval style: an I-X that does not
/// continue a span of class X opens a new one.
struct TaggedSpan {
  Span span;
  EntityClass entity_class;
  auto operator<=>(const TaggedSpan&) const = default;
};
std::vector<TaggedSpan> spans_from_tags(const std::vector<Tag>& tags);

}  // namespace mathkg
