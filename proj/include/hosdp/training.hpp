#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hosdp/autograd.hpp"
#include "hosdp/config.hpp"
#include "hosdp/embeddings.hpp"
#include "hosdp/model.hpp"
#include "hosdp/sdp.hpp"

namespace hosdp {

inline constexpr double kProbabilityFloor = 1e-12;

// -sum p(x) log q(x), natural log, q clamped below at 1e-12.
double cross_entropy(std::span<const double> p, std::span<const double> q);

// Mean sigmoid cross-entropy over candidate cells (dependent i >= 1, head j,
// i != j) of an [N x N] score matrix; target is gold.at(j, i).
Var edge_loss(Var s_edge, const AdjMatrix& gold);
// Mean softmax cross-entropy over gold edges of an [N x N x c] tensor. A
// sentence without gold edges gives 0.
Var label_loss(Var s_label, const SemanticGraph& gold, const Vocabulary& vocab);
// lambda * edge + (1 - lambda) * label; lambda outside (0,1) is a ConfigError.
Var combined_loss(Var l_edge, Var l_label, double lambda);
double combined_loss(double l_edge, double l_label, double lambda);

// Staircase decay: lr * rate^(step / decay_steps), integer division.
double lr_at(std::size_t step, const TrainConfig& cfg);

// Patience counts consecutive epochs without a strict improvement.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience) : patience_(patience) {}

  // Returns true when `score` is a new best.
  bool update(double score);
  bool should_stop() const { return since_best_ >= patience_; }
  std::optional<double> best() const { return best_epoch_ ? std::optional<double>(best_) : std::nullopt; }
  std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any update
  std::size_t epochs_since_best() const { return since_best_; }

 private:
  std::size_t patience_;
  double best_ = 0.0;
  std::size_t best_epoch_ = 0;
  std::size_t epoch_ = 0;
  std::size_t since_best_ = 0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_uf1 = 0.0;
  double dev_lf1 = 0.0;
  double lr = 0.0;
};

struct MetricsLog {
  std::vector<EpochMetrics> rows;
  std::size_t best_epoch = 0;

  // epoch, train loss, dev UF1, dev LF1, lr; tab-separated, one line per epoch.
  std::string to_tsv() const;
};

// Adjacency for sentence `index` of the training set in the current epoch.
using AdjacencyFn = std::function<AdjMatrix(std::size_t index, Rng& rng)>;

struct StageInputs {
  const Corpus* train = nullptr;
  const Corpus* dev = nullptr;
  // Only used when the model has a GNN stack.
  AdjacencyFn train_adjacency;
  std::vector<AdjMatrix> dev_adjacency;
};

// Trains `model` in place and leaves it at the best dev epoch.
MetricsLog train_stage(ParserModel& model, const StageInputs& in, const TrainConfig& cfg,
                       std::ostream* progress = nullptr);

// Parses every sentence; `adjacency` must be given for a GNN model.
std::vector<SemanticGraph> parse_corpus(const ParserModel& model, const Corpus& corpus,
                                        const std::vector<AdjMatrix>* adjacency = nullptr);
// Ã for every sentence from the frozen vanilla model.
std::vector<AdjMatrix> predicted_adjacency(const ParserModel& vanilla, const Corpus& corpus);
std::vector<AdjMatrix> gold_adjacency(const Corpus& corpus);
// Parses with the refining model, taking Ã from the vanilla model.
std::vector<SemanticGraph> parse_pipeline(const ParserModel& vanilla, const ParserModel* hosdp,
                                          const Corpus& corpus);

struct TrainResult {
  std::unique_ptr<ParserModel> vanilla;
  std::unique_ptr<ParserModel> hosdp;  // null for vanilla-only runs
  MetricsLog vanilla_log;
  MetricsLog hosdp_log;
};

struct TrainOptions {
  bool vanilla_only = false;
  const PretrainedEmbeddings* pretrained = nullptr;
  std::ostream* progress = nullptr;
};

// Rejects an empty corpus and a dev set that shares no label with train.
void check_training_data(const Corpus& train, const Corpus& dev);

std::unique_ptr<ParserModel> train_vanilla(const Corpus& train, const Corpus& dev,
                                           const Vocabulary& vocab, const ModelConfig& mcfg,
                                           const TrainConfig& tcfg, MetricsLog& log,
                                           const TrainOptions& opts = {});
std::unique_ptr<ParserModel> train_hosdp(const ParserModel& vanilla, const Corpus& train,
                                         const Corpus& dev, const ModelConfig& mcfg,
                                         const TrainConfig& tcfg, MetricsLog& log,
                                         const TrainOptions& opts = {});
// Vocabulary from `train`, stage 1, then (unless vanilla_only) stage 2.
TrainResult train(const Corpus& train, const Corpus& dev, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const TrainOptions& opts = {});

}  // namespace hosdp
