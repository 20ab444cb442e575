#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace hosdp {

enum class GnnVariant { kGcn, kGat };
// Which Ã entries make j a neighbor of i.
enum class NeighborMode {
  kSymmetric,  // Ã[i][j] or Ã[j][i]
  kHeads,      // Ã[j][i]: j is a head of i
  kDependents  // Ã[i][j]: j is a dependent of i
};

struct GnnConfig {
  GnnVariant variant = GnnVariant::kGcn;
  std::size_t layers = 3;
  std::size_t heads = 8;
  double alpha = 0.2;
  double dropout = 0.33;
  std::size_t hidden = 0;  // 0: same as the BiLSTM output width
  NeighborMode neighbors = NeighborMode::kSymmetric;

  void validate(std::size_t input_dim) const;
};

// Defaults are the full-size configuration; tests and examples shrink them.
struct ModelConfig {
  std::size_t word_dim = 100;
  std::size_t pos_dim = 100;
  std::size_t lemma_dim = 100;
  std::size_t char_dim = 100;         // output of the character embedder
  std::size_t char_embed_dim = 100;   // per-character input embedding
  std::size_t char_hidden = 100;
  bool use_lemma = false;
  bool use_char = false;
  double embed_dropout = 0.33;

  std::size_t lstm_layers = 3;
  std::size_t lstm_hidden = 400;
  double lstm_dropout = 0.33;

  std::size_t mlp_dim = 600;
  double mlp_dropout = 0.33;

  GnnConfig gnn;

  std::size_t encoder_output_dim() const { return 2 * lstm_hidden; }
  std::size_t gnn_dim() const { return gnn.hidden ? gnn.hidden : encoder_output_dim(); }
  void validate() const;
};

enum class AdjacencySource { kPredicted, kGold, kMixed };

struct TrainConfig {
  double lambda = 0.1;
  double lr = 1e-2;
  double beta1 = 0.95;
  double beta2 = 0.95;
  double eps = 1e-8;
  double decay_rate = 0.75;
  std::size_t decay_steps = 5000;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  std::size_t batch_size = 32;  // sentences per optimizer step
  std::uint64_t seed = 1;
  std::size_t min_freq = 7;
  AdjacencySource adjacency = AdjacencySource::kPredicted;
  double gold_mix = 0.5;  // probability of the gold graph under kMixed
  double clip_norm = 5.0;  // global gradient-norm clip; 0 disables

  void validate() const;
};

std::string to_string(GnnVariant v);
std::string to_string(NeighborMode m);
std::string to_string(AdjacencySource a);
GnnVariant parse_variant(const std::string& s);
NeighborMode parse_neighbor_mode(const std::string& s);
AdjacencySource parse_adjacency(const std::string& s);

// key=value text; '#' starts a comment. Unknown keys are errors.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(const std::string& text);
std::string format_key_values(const KeyValues& kv);

// Applies recognized keys; returns the keys it did not consume.
KeyValues apply_overrides(ModelConfig& cfg, const KeyValues& kv);
KeyValues apply_overrides(TrainConfig& cfg, const KeyValues& kv);
KeyValues to_key_values(const ModelConfig& cfg);
KeyValues to_key_values(const TrainConfig& cfg);

}  // namespace hosdp
