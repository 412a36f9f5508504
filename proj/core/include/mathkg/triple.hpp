#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "mathkg/relation.hpp"

namespace mathkg {

/// Where a triple came from, as a bit set.
enum class Provenance : std::uint8_t {
  None = 0,
  Infobox = 1 << 0,
  Pattern = 1 << 1,
  Classifier = 1 << 2,
  Manual = 1 << 3,
};

constexpr Provenance operator|(Provenance a, Provenance b) {
  return static_cast<Provenance>(static_cast<std::uint8_t>(a) | static_cast<std::uint8_t>(b));
}
constexpr bool has(Provenance set, Provenance flag) {
  return (static_cast<std::uint8_t>(set) & static_cast<std::uint8_t>(flag)) != 0;
}

/// Comma-joined in the fixed order infobox,pattern,classifier,manual.
std::string to_string(Provenance p);
/// Throws mathkg::Error on an unknown tag or an empty set.
Provenance parse_provenance(std::string_view s);

/// Default confidences: explicit seeds above rules above the classifier.
inline constexpr double kInfoboxConfidence = 0.9;
inline constexpr double kManualConfidence = 0.9;
inline constexpr double kPatternConfidence = 0.8;

struct Triple {
  std::string head;
  Relation relation = Relation::Dep;
  std::string tail;
  double confidence = 1.0;
  Provenance provenance = Provenance::None;

  bool operator==(const Triple&) const = default;
};

}  // namespace mathkg
