#include "hosdp/sdp.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include "hosdp/error.hpp"

namespace hosdp {

void SemanticGraph::add_edge(std::size_t head, std::size_t dep, std::string label) {
  if (dep == 0 || dep > n_ || head > n_) {
    throw ContractError("edge " + std::to_string(head) + "->" + std::to_string(dep) +
                        " outside a graph of " + std::to_string(n_) + " tokens");
  }
  if (head == dep) throw ContractError("self-loop on token " + std::to_string(dep));
  if (label.empty()) throw ContractError("empty edge label");
  if (head == 0 && label != kRootLabel) {
    throw ContractError("edge from ROOT must carry the label " + std::string(kRootLabel));
  }
  if (has_edge(head, dep)) {
    throw ContractError("duplicate edge " + std::to_string(head) + "->" + std::to_string(dep));
  }
  Edge e{head, dep, std::move(label)};
  edges_.insert(std::upper_bound(edges_.begin(), edges_.end(), e), std::move(e));
}

bool SemanticGraph::has_edge(std::size_t head, std::size_t dep) const {
  return label(head, dep).has_value();
}

std::optional<std::string> SemanticGraph::label(std::size_t head, std::size_t dep) const {
  auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{head, dep, ""});
  if (it != edges_.end() && it->head == head && it->dep == dep) return it->label;
  return std::nullopt;
}

std::vector<std::size_t> SemanticGraph::predicates() const {
  std::vector<std::size_t> out;
  for (const Edge& e : edges_) {
    if (e.head != 0 && (out.empty() || out.back() != e.head)) out.push_back(e.head);
  }
  return out;
}

void AdjMatrix::set(std::size_t head, std::size_t dep, bool v) {
  if (head >= dim_ || dep >= dim_) throw ContractError("AdjMatrix index out of range");
  if (head == dep && v) throw ContractError("AdjMatrix diagonal must stay zero");
  cells_[head * dim_ + dep] = v ? 1 : 0;
}

std::size_t AdjMatrix::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

AdjMatrix graph_to_adj(const SemanticGraph& graph) {
  AdjMatrix adj(graph.size());
  for (const Edge& e : graph.edges()) adj.set(e.head, e.dep);
  return adj;
}

std::vector<char32_t> utf8_chars(const std::string& s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1, cp = b0;
    } else if ((b0 & 0xe0) == 0xc0) {
      len = 2, cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
      len = 3, cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
      len = 4, cp = b0 & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t k = 1; ok && k < len; ++k) {
      const auto b = static_cast<unsigned char>(s[i + k]);
      if ((b & 0xc0) != 0x80) ok = false;
      cp = (cp << 6) | (b & 0x3f);
    }
    if (!ok) {
      out.push_back(0xfffd);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

bool has_cycle(const SemanticGraph& graph) {
  const std::size_t n = graph.size() + 1;
  std::vector<std::vector<std::size_t>> out(n);
  for (const Edge& e : graph.edges()) out[e.head].push_back(e.dep);
  std::vector<int> state(n, 0);  // 0 new, 1 on stack, 2 done
  std::function<bool(std::size_t)> visit = [&](std::size_t u) {
    state[u] = 1;
    for (auto v : out[u]) {
      if (state[v] == 1) return true;
      if (state[v] == 0 && visit(v)) return true;
    }
    state[u] = 2;
    return false;
  };
  for (std::size_t u = 0; u < n; ++u)
    if (state[u] == 0 && visit(u)) return true;
  return false;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> cols;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    cols.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return cols;
}

struct PendingSentence {
  Sentence sentence;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
  std::size_t columns = 0;
};

AnnotatedSentence finish(PendingSentence& p, std::vector<std::string>& warnings,
                         std::size_t sentence_index) {
  const std::size_t n = p.rows.size();
  std::vector<std::size_t> preds;
  for (std::size_t t = 0; t < n; ++t)
    if (p.rows[t][5] == "+") preds.push_back(t + 1);
  if (p.columns - 7 != preds.size()) {
    throw ParseError(p.line_numbers.front(),
                     "sentence declares " + std::to_string(preds.size()) + " predicates but has " +
                         std::to_string(p.columns - 7) + " argument columns");
  }
  AnnotatedSentence out;
  out.sentence = std::move(p.sentence);
  out.graph = SemanticGraph(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& row = p.rows[t];
    if (row[4] == "+") out.graph.add_edge(0, t + 1, kRootLabel);
    for (std::size_t j = 0; j < preds.size(); ++j) {
      const std::string& cell = row[7 + j];
      if (cell == "_") continue;
      if (preds[j] == t + 1) throw ParseError(p.line_numbers[t], "self-loop on token " + std::to_string(t + 1));
      out.graph.add_edge(preds[j], t + 1, cell);
    }
  }
  if (has_cycle(out.graph)) {
    warnings.push_back("sentence " + std::to_string(sentence_index + 1) + " (line " +
                       std::to_string(p.line_numbers.front()) + "): gold graph contains a cycle");
  }
  return out;
}

}  // namespace

ParseResult parse_sdp(std::istream& in) {
  ParseResult result;
  PendingSentence pending;
  std::vector<std::string> comments;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (pending.rows.empty()) return;
    result.corpus.items.push_back(finish(pending, result.warnings, result.corpus.items.size()));
    pending = PendingSentence{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      if (!pending.rows.empty()) throw ParseError(line_no, "comment line inside a sentence");
      comments.push_back(line);
      continue;
    }
    auto cols = split_tabs(line);
    if (cols.size() < 7) {
      throw ParseError(line_no, "expected at least 7 tab-separated columns, found " + std::to_string(cols.size()));
    }
    if (pending.rows.empty()) {
      pending.columns = cols.size();
      pending.sentence.comments = std::move(comments);
      comments.clear();
    } else if (cols.size() != pending.columns) {
      throw ParseError(line_no, "column count " + std::to_string(cols.size()) +
                                    " differs from the sentence's first row (" +
                                    std::to_string(pending.columns) + ")");
    }
    const std::size_t expected = pending.rows.size() + 1;
    if (cols[0] != std::to_string(expected)) {
      throw ParseError(line_no, "token id '" + cols[0] + "' where " + std::to_string(expected) + " was expected");
    }
    if (cols[1].empty()) throw ParseError(line_no, "empty FORM");
    for (int c : {4, 5}) {
      if (cols[c] != "+" && cols[c] != "-") {
        throw ParseError(line_no, std::string(c == 4 ? "TOP" : "PRED") + " must be '+' or '-', got '" + cols[c] + "'");
      }
    }
    Token tok;
    tok.index = expected;
    tok.form = cols[1];
    tok.lemma = cols[2];
    tok.pos = cols[3];
    tok.frame = cols[6];
    tok.chars = utf8_chars(tok.form);
    pending.sentence.tokens.push_back(std::move(tok));
    pending.rows.push_back(std::move(cols));
    pending.line_numbers.push_back(line_no);
  }
  flush();
  result.corpus.trailing_comments = std::move(comments);
  return result;
}

ParseResult parse_sdp_string(const std::string& text) {
  std::istringstream in(text);
  return parse_sdp(in);
}

ParseResult read_sdp_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path);
  return parse_sdp(in);
}

void write_sdp(std::ostream& out, const Corpus& corpus) {
  for (const auto& item : corpus.items) {
    const Sentence& s = item.sentence;
    const SemanticGraph& g = item.graph;
    if (g.size() != s.size()) throw SerializationError("graph size does not match sentence length");
    for (const Edge& e : g.edges()) {
      if (e.label.find_first_of("\t\n\r") != std::string::npos || e.label == "_") {
        throw SerializationError("label '" + e.label + "' cannot be written to an SDP file");
      }
    }
    for (const auto& c : s.comments) out << c << '\n';
    const auto preds = g.predicates();
    for (const Token& t : s.tokens) {
      const bool is_pred = std::binary_search(preds.begin(), preds.end(), t.index);
      out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.pos << '\t'
          << (g.has_edge(0, t.index) ? '+' : '-') << '\t' << (is_pred ? '+' : '-') << '\t'
          << (t.frame.empty() ? "_" : t.frame);
      for (auto p : preds) {
        auto lbl = g.label(p, t.index);
        out << '\t' << (lbl ? *lbl : "_");
      }
      out << '\n';
    }
    out << '\n';
  }
  for (const auto& c : corpus.trailing_comments) out << c << '\n';
}

std::string write_sdp_string(const Corpus& corpus) {
  std::ostringstream out;
  write_sdp(out, corpus);
  return out.str();
}

void write_sdp_file(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerializationError("cannot open " + path + " for writing");
  write_sdp(out, corpus);
}

}  // namespace hosdp
