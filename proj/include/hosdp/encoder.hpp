#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "hosdp/autograd.hpp"
#include "hosdp/config.hpp"
#include "hosdp/embeddings.hpp"
#include "hosdp/sdp.hpp"
#include "hosdp/vocab.hpp"

namespace hosdp {

// One LSTM direction. Gates are packed as [input, forget, output, candidate]
// along the columns: wx is [in x 4H], wh is [H x 4H], b is [1 x 4H].
struct LstmDirection {
  Parameter* wx = nullptr;
  Parameter* wh = nullptr;
  Parameter* b = nullptr;

  std::size_t hidden() const { return wh->value.rows(); }
};

struct LstmLayer {
  LstmDirection fwd;
  LstmDirection bwd;
};

struct LstmParams {
  std::vector<LstmLayer> layers;
  std::size_t output_dim() const { return layers.empty() ? 0 : 2 * layers.back().fwd.hidden(); }
};

// Forget bias 1, orthogonal recurrent blocks, Xavier input weights.
LstmDirection make_lstm_direction(ParameterStore& store, const std::string& prefix,
                                  std::size_t input_dim, std::size_t hidden, Rng& rng);
LstmParams make_lstm(ParameterStore& store, const std::string& prefix, std::size_t input_dim,
                     std::size_t hidden, std::size_t layers, Rng& rng);

struct LstmState {
  Var h;  // [1 x H]
  Var c;  // [1 x H]
};

// One step. `projected` is x*wx + b for this step; an invalid prev state is
// treated as zeros.
LstmState lstm_cell(Var projected, const LstmState& prev, Var wh);

// Hidden states for every row of x (row = time step), in row order. With
// `reverse` the recurrence runs from the last row to the first.
Var lstm_sequence(Graph& g, Var x, const LstmDirection& dir, bool reverse);

// Stacked bidirectional LSTM, forward and backward states concatenated per
// row. Dropout is applied between layers in train mode.
Var bilstm(Graph& g, Var x, const LstmParams& params, double dropout);

struct CharParams {
  Parameter* table = nullptr;  // [chars x e]
  LstmDirection lstm;          // input 3e
  Parameter* proj_w = nullptr; // [H x out]
  Parameter* proj_b = nullptr; // [1 x out]
};

CharParams make_char_params(ParameterStore& store, const std::string& prefix,
                            std::size_t n_chars, const ModelConfig& cfg, Rng& rng);

// Character-window LSTM embedding of one token -> [1 x out]. Each step reads
// three consecutive character embeddings; sequences shorter than three are
// left-padded with PAD.
Var char_embed(Graph& g, std::span<const std::size_t> char_ids, const CharParams& params);

struct EmbeddingTables {
  Parameter* word = nullptr;
  Parameter* pos = nullptr;
  Parameter* lemma = nullptr;           // null unless enabled
  Parameter* pretrained = nullptr;      // frozen; null unless loaded
  Parameter* pretrained_fallback = nullptr;  // learned rows for words missing from the file
  CharParams chars;                     // table null unless enabled
  std::map<std::string, std::size_t> pretrained_rows;  // row 0 is unused
};

class Encoder {
 public:
  Encoder(ParameterStore& store, const std::string& prefix, const ModelConfig& cfg,
          const Vocabulary& vocab, Rng& rng, const PretrainedEmbeddings* pretrained = nullptr);

  // [(n+1) x input_dim]; row 0 is ROOT.
  Var embed(Graph& g, const Sentence& sentence) const;
  // [(n+1) x 2H]
  Var encode(Graph& g, const Sentence& sentence) const;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return lstm_.output_dim(); }
  const EmbeddingTables& tables() const { return tables_; }
  const LstmParams& lstm() const { return lstm_; }
  // Tokens of the pretrained block in row order (row i+1 holds token i).
  std::vector<std::string> pretrained_tokens() const;

 private:
  ModelConfig cfg_;
  Vocabulary vocab_;
  EmbeddingTables tables_;
  LstmParams lstm_;
  std::size_t input_dim_ = 0;
};

}  // namespace hosdp
