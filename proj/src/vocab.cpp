#include "hosdp/vocab.hpp"

#include <algorithm>
#include <sstream>

#include "hosdp/error.hpp"

namespace hosdp {

Index::Index(bool reserved) : reserved_(reserved) {
  if (reserved_) {
    add("<pad>");
    add("<unk>");
    add("<root>");
  }
}

std::size_t Index::add(const std::string& s) {
  auto [it, inserted] = ids_.emplace(s, strings_.size());
  if (inserted) strings_.push_back(s);
  return it->second;
}

std::size_t Index::lookup(const std::string& s) const {
  auto it = ids_.find(s);
  if (it != ids_.end()) return it->second;
  if (!reserved_) throw ContractError("unknown entry '" + s + "' in a closed index");
  return kUnk;
}

std::size_t Vocabulary::char_id(char32_t c) const {
  return chars.lookup(std::to_string(static_cast<std::uint32_t>(c)));
}

namespace {

void add_by_frequency(Index& index, const std::map<std::string, std::size_t>& counts,
                      std::size_t min_freq) {
  std::vector<std::pair<std::string, std::size_t>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (const auto& [s, c] : items)
    if (c >= min_freq) index.add(s);
}

}  // namespace

Vocabulary build_vocab(const Corpus& corpus, std::size_t min_freq) {
  if (corpus.items.empty()) throw ConfigError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> words, lemmas, pos, chars, labels;
  for (const auto& item : corpus.items) {
    for (const Token& t : item.sentence.tokens) {
      ++words[t.form];
      ++lemmas[t.lemma];
      ++pos[t.pos];
      for (char32_t c : t.chars) ++chars[std::to_string(static_cast<std::uint32_t>(c))];
    }
    for (const Edge& e : item.graph.edges()) ++labels[e.label];
  }
  labels[kRootLabel] += 0;
  Vocabulary v;
  v.min_freq = min_freq;
  add_by_frequency(v.words, words, min_freq);
  add_by_frequency(v.lemmas, lemmas, min_freq);
  add_by_frequency(v.pos, pos, 0);
  add_by_frequency(v.chars, chars, 0);
  add_by_frequency(v.labels, labels, 0);
  return v;
}

std::string Vocabulary::serialize() const {
  std::ostringstream out;
  out << "min_freq\t" << min_freq << '\n';
  auto dump = [&](const char* name, const Index& index) {
    const std::size_t start = index.reserved() ? 3 : 0;
    for (std::size_t i = start; i < index.size(); ++i) out << name << '\t' << index.at(i) << '\n';
  };
  dump("word", words);
  dump("lemma", lemmas);
  dump("pos", pos);
  dump("char", chars);
  dump("label", labels);
  return out.str();
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  Vocabulary v;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(line_no, "vocabulary line without a tab");
    const std::string kind = line.substr(0, tab), value = line.substr(tab + 1);
    if (kind == "min_freq") v.min_freq = std::stoul(value);
    else if (kind == "word") v.words.add(value);
    else if (kind == "lemma") v.lemmas.add(value);
    else if (kind == "pos") v.pos.add(value);
    else if (kind == "char") v.chars.add(value);
    else if (kind == "label") v.labels.add(value);
    else throw ParseError(line_no, "unknown vocabulary section '" + kind + "'");
  }
  return v;
}

}  // namespace hosdp
