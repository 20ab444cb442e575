#include "hosdp/encoder.hpp"

#include <algorithm>
#include <cctype>

#include "hosdp/error.hpp"
#include "hosdp/init.hpp"
#include "hosdp/ops.hpp"

namespace hosdp {

LstmDirection make_lstm_direction(ParameterStore& store, const std::string& prefix,
                                  std::size_t input_dim, std::size_t hidden, Rng& rng) {
  Tensor wx({input_dim, 4 * hidden});
  Tensor wh({hidden, 4 * hidden});
  Tensor b({1, 4 * hidden}, 0.0);
  // Each gate block gets its own Xavier / orthogonal draw.
  for (std::size_t gate = 0; gate < 4; ++gate) {
    Tensor x = xavier_uniform(input_dim, hidden, rng);
    Tensor h = orthogonal(hidden, rng);
    for (std::size_t r = 0; r < input_dim; ++r)
      for (std::size_t c = 0; c < hidden; ++c) wx.at(r, gate * hidden + c) = x.at(r, c);
    for (std::size_t r = 0; r < hidden; ++r)
      for (std::size_t c = 0; c < hidden; ++c) wh.at(r, gate * hidden + c) = h.at(r, c);
  }
  for (std::size_t c = 0; c < hidden; ++c) b.at(0, hidden + c) = 1.0;
  LstmDirection d;
  d.wx = &store.add(prefix + ".wx", std::move(wx));
  d.wh = &store.add(prefix + ".wh", std::move(wh));
  d.b = &store.add(prefix + ".b", std::move(b));
  return d;
}

LstmParams make_lstm(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden, std::size_t layers, Rng& rng) {
  LstmParams p;
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < layers; ++l) {
    std::string base = prefix + ".l" + std::to_string(l);
    LstmLayer layer;
    layer.fwd = make_lstm_direction(store, base + ".fwd", in, hidden, rng);
    layer.bwd = make_lstm_direction(store, base + ".bwd", in, hidden, rng);
    p.layers.push_back(layer);
    in = 2 * hidden;
  }
  return p;
}

LstmState lstm_cell(Var projected, const LstmState& prev, Var wh) {
  std::size_t h = wh.value().rows();
  if (projected.shape() != Shape{1, 4 * h})
    throw DimensionError("lstm_cell: projected input is " + shape_string(projected.shape()) +
                         ", expected [1x" + std::to_string(4 * h) + "]");
  Var gates = prev.h.valid() ? add(projected, matmul(prev.h, wh)) : projected;
  Var sig = sigmoid(slice(gates, 1, 0, 3 * h));
  Var in = slice(sig, 1, 0, h);
  Var forget = slice(sig, 1, h, h);
  Var out = slice(sig, 1, 2 * h, h);
  Var cand = tanh(slice(gates, 1, 3 * h, h));
  Var c = mul(in, cand);
  if (prev.c.valid()) c = add(mul(forget, prev.c), c);
  return {mul(out, tanh(c)), c};
}

Var lstm_sequence(Graph& g, Var x, const LstmDirection& dir, bool reverse) {
  std::size_t steps = x.value().rows();
  if (steps == 0) throw DimensionError("lstm_sequence: empty input");
  Var wh = g.param(*dir.wh);
  Var projected = add_row(matmul(x, g.param(*dir.wx)), g.param(*dir.b));
  std::vector<Var> hs(steps);
  LstmState state;
  for (std::size_t k = 0; k < steps; ++k) {
    std::size_t t = reverse ? steps - 1 - k : k;
    state = lstm_cell(slice(projected, 0, t, 1), state, wh);
    hs[t] = state.h;
  }
  return concat(hs, 0);
}

Var bilstm(Graph& g, Var x, const LstmParams& params, double p) {
  Var cur = x;
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    if (l > 0) cur = dropout(cur, p);
    const LstmLayer& layer = params.layers[l];
    cur = concat({lstm_sequence(g, cur, layer.fwd, false), lstm_sequence(g, cur, layer.bwd, true)},
                 1);
  }
  return cur;
}

CharParams make_char_params(ParameterStore& store, const std::string& prefix,
                            std::size_t n_chars, const ModelConfig& cfg, Rng& rng) {
  CharParams p;
  p.table = &store.add(prefix + ".table", embedding_init(n_chars, cfg.char_embed_dim, rng));
  p.lstm = make_lstm_direction(store, prefix + ".lstm", 3 * cfg.char_embed_dim, cfg.char_hidden,
                               rng);
  p.proj_w = &store.add(prefix + ".proj_w", xavier_uniform(cfg.char_hidden, cfg.char_dim, rng));
  p.proj_b = &store.add(prefix + ".proj_b", Tensor({1, cfg.char_dim}, 0.0));
  return p;
}

Var char_embed(Graph& g, std::span<const std::size_t> char_ids, const CharParams& params) {
  if (char_ids.empty()) throw ContractError("char_embed: empty character sequence");
  std::vector<std::size_t> padded;
  for (std::size_t k = char_ids.size(); k < 3; ++k) padded.push_back(Index::kPad);
  padded.insert(padded.end(), char_ids.begin(), char_ids.end());
  std::size_t windows = padded.size() - 2;
  std::vector<std::size_t> ids;
  ids.reserve(3 * windows);
  for (std::size_t w = 0; w < windows; ++w)
    for (std::size_t k = 0; k < 3; ++k) ids.push_back(padded[w + k]);
  std::size_t e = params.table->value.cols();
  Var steps = reshape(embedding_lookup(g, *params.table, ids), {windows, 3 * e});
  Var hs = lstm_sequence(g, steps, params.lstm, false);
  Var last = slice(hs, 0, windows - 1, 1);
  return add_row(matmul(last, g.param(*params.proj_w)), g.param(*params.proj_b));
}

namespace {

std::string ascii_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

Encoder::Encoder(ParameterStore& store, const std::string& prefix, const ModelConfig& cfg,
                 const Vocabulary& vocab, Rng& rng, const PretrainedEmbeddings* pretrained)
    : cfg_(cfg), vocab_(vocab) {
  tables_.word = &store.add(prefix + ".word", embedding_init(vocab.words.size(), cfg.word_dim, rng));
  tables_.pos = &store.add(prefix + ".pos", embedding_init(vocab.pos.size(), cfg.pos_dim, rng));
  input_dim_ = cfg.word_dim + cfg.pos_dim;
  if (cfg.use_lemma) {
    tables_.lemma =
        &store.add(prefix + ".lemma", embedding_init(vocab.lemmas.size(), cfg.lemma_dim, rng));
    input_dim_ += cfg.lemma_dim;
  }
  if (cfg.use_char) {
    tables_.chars = make_char_params(store, prefix + ".char", vocab.chars.size(), cfg, rng);
    input_dim_ += cfg.char_dim;
  }
  if (pretrained && pretrained->size() > 0) {
    std::size_t d = pretrained->dim;
    Tensor table({pretrained->size() + 1, d}, 0.0);
    std::size_t row = 1;
    for (const auto& [token, vec] : pretrained->vectors) {
      std::copy(vec.begin(), vec.end(), table.data().begin() + static_cast<std::ptrdiff_t>(row * d));
      tables_.pretrained_rows[token] = row++;
    }
    tables_.pretrained = &store.add(prefix + ".pretrained", std::move(table), false);
    tables_.pretrained_fallback =
        &store.add(prefix + ".pretrained_fallback", embedding_init(vocab.words.size(), d, rng));
    input_dim_ += d;
  }
  lstm_ = make_lstm(store, prefix + ".lstm", input_dim_, cfg.lstm_hidden, cfg.lstm_layers, rng);
}

std::vector<std::string> Encoder::pretrained_tokens() const {
  std::vector<std::string> out(tables_.pretrained_rows.size());
  for (const auto& [token, row] : tables_.pretrained_rows) out[row - 1] = token;
  return out;
}

Var Encoder::embed(Graph& g, const Sentence& s) const {
  std::size_t n = s.size() + 1;
  std::vector<std::size_t> words{Index::kRoot}, pos{Index::kRoot}, lemmas{Index::kRoot};
  for (const Token& t : s.tokens) {
    words.push_back(vocab_.words.lookup(t.form));
    pos.push_back(vocab_.pos.lookup(t.pos));
    lemmas.push_back(vocab_.lemmas.lookup(t.lemma));
  }
  std::vector<Var> parts{embedding_lookup(g, *tables_.word, words),
                         embedding_lookup(g, *tables_.pos, pos)};
  if (tables_.lemma) parts.push_back(embedding_lookup(g, *tables_.lemma, lemmas));
  if (tables_.chars.table) {
    std::vector<Var> rows;
    rows.reserve(n);
    std::vector<std::size_t> root{Index::kRoot};
    rows.push_back(char_embed(g, root, tables_.chars));
    for (const Token& t : s.tokens) {
      std::vector<std::size_t> ids;
      for (char32_t c : t.chars) ids.push_back(vocab_.char_id(c));
      if (ids.empty()) ids.push_back(Index::kUnk);
      rows.push_back(char_embed(g, ids, tables_.chars));
    }
    parts.push_back(concat(rows, 0));
  }
  if (tables_.pretrained) {
    // Rows found in the file come from the frozen block, the rest from the
    // learned fallback; a 0/1 mask selects between the two gathers.
    std::vector<std::size_t> pre_ids{0};
    Tensor found({n, 1}, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      const std::string& form = s.tokens[i - 1].form;
      auto it = tables_.pretrained_rows.find(form);
      if (it == tables_.pretrained_rows.end()) it = tables_.pretrained_rows.find(ascii_lower(form));
      if (it != tables_.pretrained_rows.end()) {
        pre_ids.push_back(it->second);
        found.at(i, 0) = 1.0;
      } else {
        pre_ids.push_back(0);
      }
    }
    std::size_t d = tables_.pretrained->value.cols();
    Tensor keep({n, d}), fall({n, d});
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) {
        keep.at(i, c) = found.at(i, 0);
        fall.at(i, c) = 1.0 - found.at(i, 0);
      }
    Var pre = embedding_lookup(g, *tables_.pretrained, pre_ids);
    Var fb = embedding_lookup(g, *tables_.pretrained_fallback, words);
    parts.push_back(add(mul(pre, g.constant(std::move(keep))), mul(fb, g.constant(std::move(fall)))));
  }
  Var x = parts.size() == 1 ? parts[0] : concat(parts, 1);
  return dropout(x, cfg_.embed_dropout);
}

Var Encoder::encode(Graph& g, const Sentence& s) const {
  return bilstm(g, embed(g, s), lstm_, cfg_.lstm_dropout);
}

}  // namespace hosdp
