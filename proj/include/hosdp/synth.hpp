#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hosdp/sdp.hpp"

namespace hosdp {

// Generator for corpora whose coordinations carry a sibling regularity:
// the head that governs a coordination attaches to its first conjunct with a
// label fixed by the head's lexeme, and (with sibling_prob) to every other
// conjunct with that same label. Each verb lexeme selects one case marker;
// which of the sentence's two verbs governs the coordination is signalled
// only by the marker in front of the first conjunct. Later conjuncts sit
// behind a chain of marked PPs, so they are resolved most easily through
// their sibling's edge.
struct SynthConfig {
  std::size_t sentences = 200;
  std::size_t min_len = 6;
  std::size_t max_len = 15;
  std::size_t vocab_size = 30;  // lexemes per open class (nouns, verbs)
  std::size_t markers = 6;      // case marker words "p0".."p<markers-1>"
  std::vector<std::string> labels = {"PAT-arg", "EFF-arg", "ADDR-arg", "ORIG-arg", "EXT"};
  double sibling_prob = 0.9;
  std::uint64_t seed = 1;          // sentence sampling
  std::uint64_t grammar_seed = 0;  // lexeme-to-label table; keep fixed across splits

  void validate() const;
};

// Structural labels used for the first-order scaffolding around coordinations.
namespace synth_labels {
inline constexpr const char* kSubject = "ACT-arg";
inline constexpr const char* kComplement = "COMPL";
inline constexpr const char* kObject = "ARG2";
inline constexpr const char* kMember = "CONJ.m";
inline constexpr const char* kCase = "CASE";
inline constexpr const char* kDeterminer = "RSTR";
inline constexpr const char* kManner = "MANN";
inline constexpr const char* kLocation = "LOC";
}  // namespace synth_labels

Corpus gen_synthetic(const SynthConfig& config);

}  // namespace hosdp
