#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hosdp/checkpoint.hpp"
#include "hosdp/config.hpp"
#include "hosdp/decoder.hpp"
#include "hosdp/encoder.hpp"
#include "hosdp/gnn.hpp"
#include "hosdp/vocab.hpp"

namespace hosdp {

// Encoder + optional GNN stack + biaffine decoder. Without the GNN stack this
// is the first-order parser that supplies Ã; with it, the refining parser.
// Parameters are named "<prefix>.<part>...", prefix "vanilla" or "hosdp".
class ParserModel {
 public:
  ParserModel(const ModelConfig& cfg, const Vocabulary& vocab, bool with_gnn, std::uint64_t seed,
              const PretrainedEmbeddings* pretrained = nullptr);
  ParserModel(const ParserModel&) = delete;
  ParserModel& operator=(const ParserModel&) = delete;

  // `adj` is required iff the model has a GNN stack.
  Scores forward(Graph& g, const Sentence& sentence, const AdjMatrix* adj) const;
  // Eval-mode parse.
  SemanticGraph parse(const Sentence& sentence, const AdjMatrix* adj = nullptr) const;

  bool has_gnn() const { return gnn_ != nullptr; }
  const std::string& prefix() const { return prefix_; }
  bool trained() const { return trained_; }
  void set_trained(bool v) { trained_ = v; }

  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }
  const ModelConfig& config() const { return cfg_; }
  const Vocabulary& vocab() const { return vocab_; }
  const std::vector<std::string>& labels() const { return vocab_.labels.strings(); }
  const Encoder& encoder() const { return *encoder_; }
  const Decoder& decoder() const { return *decoder_; }
  const GnnStack* gnn() const { return gnn_.get(); }

 private:
  ModelConfig cfg_;
  Vocabulary vocab_;
  std::string prefix_;
  ParameterStore store_;
  std::unique_ptr<Encoder> encoder_;
  std::unique_ptr<GnnStack> gnn_;
  std::unique_ptr<Decoder> decoder_;
  bool trained_ = false;
};

// First-order parse and its label-blind adjacency. Throws UsageError when the
// model is untrained or carries a GNN stack.
std::pair<AdjMatrix, SemanticGraph> vanilla_parse(const Sentence& sentence,
                                                  const ParserModel& vanilla);

// One checkpoint file holds the vanilla model, the refining model (if any),
// the model config, the vocabulary and the pretrained token list.
struct SavedModels {
  std::unique_ptr<ParserModel> vanilla;
  std::unique_ptr<ParserModel> hosdp;
};

Checkpoint make_checkpoint(const ParserModel& vanilla, const ParserModel* hosdp);
SavedModels restore_models(const Checkpoint& ckpt);
void save_models(const std::string& path, const ParserModel& vanilla, const ParserModel* hosdp);
SavedModels load_models(const std::string& path);

}  // namespace hosdp
