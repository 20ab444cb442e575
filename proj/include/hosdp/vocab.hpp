#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "hosdp/sdp.hpp"

namespace hosdp {

// String <-> dense id table. When `reserved` is true ids 0..2 are PAD, UNK
// and ROOT and unseen strings map to UNK.
class Index {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kRoot = 2;

  explicit Index(bool reserved = true);

  std::size_t add(const std::string& s);
  // Throws ContractError for unseen strings in an index without reserved ids.
  std::size_t lookup(const std::string& s) const;
  bool contains(const std::string& s) const { return ids_.count(s) != 0; }
  const std::string& at(std::size_t id) const { return strings_.at(id); }
  std::size_t size() const { return strings_.size(); }
  bool reserved() const { return reserved_; }
  const std::vector<std::string>& strings() const { return strings_; }

 private:
  bool reserved_;
  std::vector<std::string> strings_;
  std::map<std::string, std::size_t> ids_;
};

struct Vocabulary {
  Index words;
  Index lemmas;
  Index pos;
  Index chars;   // keys are decimal code points
  Index labels{false};
  std::size_t min_freq = 7;

  std::size_t char_id(char32_t c) const;
  std::size_t label_id(const std::string& label) const { return labels.lookup(label); }

  // Tab-separated text used inside checkpoints.
  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);
};

// Forms and lemmas need count >= min_freq; POS tags, chars and labels are all
// kept. Ties in frequency are broken lexicographically so ids are stable.
Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq = 7);

}  // namespace hosdp
