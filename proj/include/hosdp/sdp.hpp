#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace hosdp {

inline constexpr const char* kRootLabel = "ROOT";

struct Token {
  std::size_t index = 0;  // 1-based
  std::string form;
  std::string lemma;
  std::string pos;
  std::string frame = "_";  // carried verbatim, never predicted
  std::vector<char32_t> chars;
};

struct Sentence {
  std::vector<std::string> comments;  // raw '#' lines preceding the tokens
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
};

struct Edge {
  std::size_t head = 0;  // 0 is the virtual ROOT node
  std::size_t dep = 0;
  std::string label;

  auto operator<=>(const Edge&) const = default;
};

// Labeled directed graph over tokens 1..n plus ROOT. Edges are kept sorted by
// (head, dep, label); at most one edge per (head, dep) pair.
class SemanticGraph {
 public:
  explicit SemanticGraph(std::size_t n = 0) : n_(n) {}

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  bool empty() const { return edges_.empty(); }

  // Throws ContractError when the edge would break an invariant.
  void add_edge(std::size_t head, std::size_t dep, std::string label);
  bool has_edge(std::size_t head, std::size_t dep) const;
  std::optional<std::string> label(std::size_t head, std::size_t dep) const;
  // Tokens with at least one outgoing non-ROOT edge, ascending.
  std::vector<std::size_t> predicates() const;

  bool operator==(const SemanticGraph&) const = default;

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
};

// Label-blind edge presence, (n+1) x (n+1), row = head, column = dependent.
class AdjMatrix {
 public:
  explicit AdjMatrix(std::size_t n_tokens = 0)
      : dim_(n_tokens + 1), cells_(dim_ * dim_, 0) {}

  std::size_t dim() const { return dim_; }
  bool at(std::size_t head, std::size_t dep) const { return cells_[head * dim_ + dep] != 0; }
  void set(std::size_t head, std::size_t dep, bool v = true);
  std::size_t count() const;

  bool operator==(const AdjMatrix&) const = default;

 private:
  std::size_t dim_;
  std::vector<std::uint8_t> cells_;
};

AdjMatrix graph_to_adj(const SemanticGraph& graph);

struct AnnotatedSentence {
  Sentence sentence;
  SemanticGraph graph;
};

struct Corpus {
  std::vector<AnnotatedSentence> items;
  std::vector<std::string> trailing_comments;

  std::size_t size() const { return items.size(); }
};

struct ParseResult {
  Corpus corpus;
  std::vector<std::string> warnings;  // e.g. cyclic gold graphs
};

// Column layout (tab-separated):
//   ID FORM LEMMA POS TOP PRED FRAME ARG_1 .. ARG_k
// TOP and PRED are '+' or '-'; ARG_j holds the label of the edge from the
// j-th predicate (PRED '+', in token order) to this token, or '_'.
// Lines starting with '#' are comments; a blank line ends a sentence.
ParseResult parse_sdp(std::istream& in);
ParseResult parse_sdp_string(const std::string& text);
ParseResult read_sdp_file(const std::string& path);

void write_sdp(std::ostream& out, const Corpus& corpus);
std::string write_sdp_string(const Corpus& corpus);
void write_sdp_file(const std::string& path, const Corpus& corpus);

// Decodes UTF-8 into unicode scalar values; invalid bytes map to U+FFFD.
std::vector<char32_t> utf8_chars(const std::string& s);

bool has_cycle(const SemanticGraph& graph);

}  // namespace hosdp
