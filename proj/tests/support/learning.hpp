// Separable training sets for the tagger and the relation classifier.
#pragma once

#include <string>
#include <vector>

#include "mathkg/dataset.hpp"
#include "mathkg/random.hpp"

namespace learning {

/// 40 sentences; entity words never occur outside their entity.
inline std::vector<mathkg::KerExample> separable_ker() {
  using mathkg::Tag;
  const std::vector<std::vector<std::string>> cons = {
      {"triangle"}, {"circle"}, {"isosceles", "triangle"}, {"parabola"}, {"right", "angle"}, {"polygon"}};
  const std::vector<std::vector<std::string>> legs = {{"law", "of", "sines"}, {"pythagorean", "theorem"}};
  const std::vector<std::vector<std::string>> frames = {
      {"we", "study", "X", "today"}, {"X", "relates", "to", "Y"}, {"every", "X", "uses", "Y", "."},
      {"a", "note", "on", "X"}};
  std::vector<mathkg::KerExample> out;
  mathkg::Rng rng(3);
  for (std::size_t i = 0; i < 40; ++i) {
    const auto& frame = frames[i % frames.size()];
    mathkg::KerExample ex;
    for (const auto& w : frame) {
      if (w == "X" || w == "Y") {
        const bool leg = (w == "Y") == (i % 3 == 0);
        const auto& ent = leg ? legs[rng.uniform_index(legs.size())] : cons[rng.uniform_index(cons.size())];
        for (std::size_t k = 0; k < ent.size(); ++k) {
          ex.tokens.push_back(ent[k]);
          ex.tags.push_back(k == 0 ? (leg ? Tag::BLeg : Tag::BCon) : (leg ? Tag::ILeg : Tag::ICon));
        }
      } else {
        ex.tokens.push_back(w);
        ex.tags.push_back(Tag::O);
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

/// Three pairs per label, each label with its own connective token.
inline std::vector<mathkg::ErcExample> separable_erc() {
  const std::vector<std::string> nouns = {"alpha", "beta", "gamma", "delta"};
  std::vector<mathkg::ErcExample> out;
  for (std::size_t l = 0; l < mathkg::kNumLabels; ++l) {
    for (std::size_t k = 0; k < 3; ++k) {
      mathkg::ErcExample ex;
      ex.tokens = {nouns[k], "cue" + std::to_string(l), nouns[k + 1], "."};
      ex.e1 = {0, 1};
      ex.e2 = {2, 3};
      ex.label = mathkg::label_at(l);
      out.push_back(ex);
    }
  }
  return out;
}

}  // namespace learning
