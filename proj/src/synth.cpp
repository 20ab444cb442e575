#include "hosdp/synth.hpp"

#include <algorithm>

#include "hosdp/error.hpp"
#include "hosdp/rng.hpp"

namespace hosdp {

void SynthConfig::validate() const {
  if (sentences == 0) throw ConfigError("synth: sentence count must be positive");
  if (min_len < 3) throw ConfigError("synth: minimum length must be >= 3");
  if (max_len < min_len) throw ConfigError("synth: maximum length below minimum length");
  if (markers < 2) throw ConfigError("synth: need at least 2 case markers");
  if (vocab_size < markers) throw ConfigError("synth: vocabulary size below the marker count");
  if (labels.empty()) throw ConfigError("synth: label set is empty");
  for (const auto& l : labels) {
    if (l.empty() || l == "_" || l == kRootLabel || l.find_first_of("\t\n") != std::string::npos) {
      throw ConfigError("synth: invalid label '" + l + "'");
    }
  }
  if (!(sibling_prob >= 0.0 && sibling_prob <= 1.0)) {
    throw ConfigError("synth: sibling probability must lie in [0, 1]");
  }
}

namespace {

using namespace synth_labels;

struct Lexicon {
  std::size_t size;
  std::vector<std::size_t> verb_label;   // sibling label per verb lexeme
  std::vector<std::size_t> verb_marker;  // case marker each verb selects
};

class Builder {
 public:
  Builder(Rng& rng, const Lexicon& lex) : rng_(rng), lex_(lex) {}

  std::size_t add(std::string form, std::string lemma, std::string pos) {
    Token t;
    t.index = tokens_.size() + 1;
    t.form = std::move(form);
    t.lemma = std::move(lemma);
    t.pos = std::move(pos);
    t.chars = utf8_chars(t.form);
    tokens_.push_back(std::move(t));
    return tokens_.size();
  }

  std::size_t noun() {
    const auto i = rng_.below(lex_.size);
    const std::string lemma = "n" + std::to_string(i);
    return add(rng_.bernoulli(0.3) ? lemma + "s" : lemma, lemma, "NN");
  }
  std::size_t verb(std::size_t lexeme) {
    const std::string lemma = "v" + std::to_string(lexeme);
    return add(rng_.bernoulli(0.5) ? lemma + "ed" : lemma, lemma, "VB");
  }
  std::size_t marker(std::size_t id) {
    const std::string w = "p" + std::to_string(id);
    return add(w, w, "IN");
  }
  std::size_t det() {
    const char* w = rng_.bernoulli(0.5) ? "the" : "a";
    return add(w, w, "DT");
  }
  std::size_t adverb() {
    const std::string w = "r" + std::to_string(rng_.below(5));
    return add(w, w, "RB");
  }
  std::size_t coordinator() {
    const char* w = rng_.bernoulli(0.5) ? "and" : "or";
    return add(w, w, "CC");
  }
  std::size_t comma() { return add(",", ",", ","); }

  void edge(std::size_t h, std::size_t d, std::string label) { edges_.push_back({h, d, std::move(label)}); }

  AnnotatedSentence finish() {
    AnnotatedSentence out;
    out.sentence.tokens = std::move(tokens_);
    out.graph = SemanticGraph(out.sentence.tokens.size());
    for (auto& e : edges_) out.graph.add_edge(e.head, e.dep, std::move(e.label));
    return out;
  }

  std::size_t length() const { return tokens_.size(); }

 private:
  Rng& rng_;
  const Lexicon& lex_;
  std::vector<Token> tokens_;
  std::vector<Edge> edges_;
};

// Optional pieces added on top of the fixed skeleton of a full sentence.
struct Extras {
  bool subj_det = false, adv1 = false, adv2 = false;
  bool obj1 = false, obj2 = false, conj3 = false;
  std::size_t pps = 0;           // prepositional chain hanging off the first conjunct
  std::size_t more_adverbs = 0;  // only for lengths beyond every optional piece
};

constexpr std::size_t kMaxPps = 3;

Extras pick_extras(Rng& rng, std::size_t budget) {
  // Two-token pieces: three PP slots, conj3, obj1, obj2.
  constexpr std::size_t kTwo = kMaxPps + 3, kOne = 3;
  if (budget > 2 * kTwo + kOne) {
    Extras all{true, true, true, true, true, true, kMaxPps, budget - 2 * kTwo - kOne};
    return all;
  }
  // Two-token extras first, then single tokens to hit the length exactly.
  std::vector<std::size_t> two(kTwo);
  for (std::size_t k = 0; k < kTwo; ++k) two[k] = k;
  rng.shuffle(two);
  const std::size_t min_two = budget > kOne ? (budget - kOne + 1) / 2 : 0;
  const std::size_t max_two = std::min(kTwo, budget / 2);
  const std::size_t n_two = min_two + rng.below(max_two - min_two + 1);
  Extras x;
  for (std::size_t k = 0; k < n_two; ++k) {
    switch (two[k]) {
      case 0: x.obj1 = true; break;
      case 1: x.obj2 = true; break;
      case 2: x.conj3 = true; break;
      default: ++x.pps; break;
    }
  }
  std::vector<int> one = {0, 1, 2};
  rng.shuffle(one);
  for (std::size_t k = 0; k < budget - 2 * n_two; ++k) {
    switch (one[k]) {
      case 0: x.subj_det = true; break;
      case 1: x.adv1 = true; break;
      default: x.adv2 = true; break;
    }
  }
  return x;
}

// Objects carry a determiner, never a case marker, so the only class-marked
// noun right after the verbs is the first conjunct.
void object_np(Builder& b, std::size_t verb) {
  const std::size_t d = b.det();
  const std::size_t n = b.noun();
  b.edge(verb, n, kObject);
  b.edge(n, d, kDeterminer);
}

// Coordination "IN c1 (IN n)* CC c2" or "IN c1 (IN n)* , c2 CC c3" governed
// by verb lexeme `head_lex` at `head`. The first marker is the one that verb
// selects; PP markers are drawn from the whole set, and each PP noun attaches
// to the noun before it.
void coordination(Builder& b, Rng& rng, const SynthConfig& cfg, const Lexicon& lex,
                  std::size_t head, std::size_t head_lex, std::size_t pps, bool three) {
  const std::size_t m = b.marker(lex.verb_marker[head_lex]);
  std::vector<std::size_t> conj;
  conj.push_back(b.noun());
  b.edge(conj[0], m, kCase);
  std::size_t attach = conj[0];
  for (std::size_t k = 0; k < pps; ++k) {
    const std::size_t pm = b.marker(rng.below(cfg.markers));
    const std::size_t pn = b.noun();
    b.edge(attach, pn, kLocation);
    b.edge(pn, pm, kCase);
    attach = pn;
  }
  std::size_t cc = 0;
  if (three) {
    b.comma();
    conj.push_back(b.noun());
  }
  cc = b.coordinator();
  conj.push_back(b.noun());
  for (auto c : conj) b.edge(cc, c, kMember);
  const std::string& label = cfg.labels[lex.verb_label[head_lex]];
  b.edge(head, conj[0], label);
  if (rng.bernoulli(cfg.sibling_prob)) {
    for (std::size_t k = 1; k < conj.size(); ++k) b.edge(head, conj[k], label);
  }
}

AnnotatedSentence full_sentence(Rng& rng, const SynthConfig& cfg, const Lexicon& lex, std::size_t len) {
  Builder b(rng, lex);
  const Extras x = pick_extras(rng, len - 7);
  // The two verbs select different markers, so the first conjunct's marker
  // names its head.
  const std::size_t lex1 = rng.below(lex.size);
  std::size_t lex2 = rng.below(lex.size);
  while (lex.verb_marker[lex2] == lex.verb_marker[lex1]) lex2 = rng.below(lex.size);
  std::size_t det = 0;
  if (x.subj_det) det = b.det();
  const std::size_t subj = b.noun();
  if (det) b.edge(subj, det, kDeterminer);
  const std::size_t v1 = b.verb(lex1);
  b.edge(0, v1, kRootLabel);
  b.edge(v1, subj, kSubject);
  if (x.adv1) b.edge(v1, b.adverb(), kManner);
  if (x.obj1) object_np(b, v1);
  const std::size_t v2 = b.verb(lex2);
  b.edge(v1, v2, kComplement);
  if (x.adv2) b.edge(v2, b.adverb(), kManner);
  for (std::size_t k = 0; k < x.more_adverbs; ++k) b.edge(v2, b.adverb(), kManner);
  if (x.obj2) object_np(b, v2);
  const bool first = rng.bernoulli(0.5);
  coordination(b, rng, cfg, lex, first ? v1 : v2, first ? lex1 : lex2, x.pps, x.conj3);
  return b.finish();
}

// Sentences shorter than the full skeleton keep one verb.
AnnotatedSentence short_sentence(Rng& rng, const SynthConfig& cfg, const Lexicon& lex, std::size_t len) {
  Builder b(rng, lex);
  const std::size_t lexeme = rng.below(lex.size);
  if (len == 6) {
    const std::size_t subj = b.noun();
    const std::size_t v = b.verb(lexeme);
    b.edge(0, v, kRootLabel);
    b.edge(v, subj, kSubject);
    coordination(b, rng, cfg, lex, v, lexeme, 0, false);
    return b.finish();
  }
  if (len == 5) {
    const std::size_t v = b.verb(lexeme);
    b.edge(0, v, kRootLabel);
    coordination(b, rng, cfg, lex, v, lexeme, 0, false);
    return b.finish();
  }
  const std::size_t det = len == 4 ? b.det() : 0;
  const std::size_t subj = b.noun();
  if (det) b.edge(subj, det, kDeterminer);
  const std::size_t v = b.verb(lexeme);
  b.edge(0, v, kRootLabel);
  b.edge(v, subj, kSubject);
  b.edge(v, b.adverb(), kManner);
  return b.finish();
}

}  // namespace

Corpus gen_synthetic(const SynthConfig& config) {
  config.validate();
  Lexicon lex;
  lex.size = config.vocab_size;
  Rng grammar(config.grammar_seed);
  for (std::size_t i = 0; i < lex.size; ++i) {
    lex.verb_label.push_back(grammar.below(config.labels.size()));
    lex.verb_marker.push_back(i % config.markers);
  }
  grammar.shuffle(lex.verb_marker);
  Rng rng(config.seed);
  Corpus corpus;
  for (std::size_t s = 0; s < config.sentences; ++s) {
    const auto len = static_cast<std::size_t>(rng.range(static_cast<std::int64_t>(config.min_len),
                                                         static_cast<std::int64_t>(config.max_len)));
    AnnotatedSentence item = len >= 7 ? full_sentence(rng, config, lex, len)
                                                   : short_sentence(rng, config, lex, len);
    item.sentence.comments.push_back("#2" + std::to_string(10000000 + s));
    corpus.items.push_back(std::move(item));
  }
  return corpus;
}

}  // namespace hosdp
