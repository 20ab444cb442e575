#include "hosdp/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <set>

#include "hosdp/adam.hpp"
#include "hosdp/error.hpp"
#include "hosdp/evaluator.hpp"
#include "hosdp/ops.hpp"

namespace hosdp {

double cross_entropy(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size())
    throw DimensionError("cross_entropy: distributions of size " + std::to_string(p.size()) +
                         " and " + std::to_string(q.size()));
  double total = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x)
    if (p[x] != 0.0) total -= p[x] * std::log(std::max(q[x], kProbabilityFloor));
  return total;
}

Var edge_loss(Var s_edge, const AdjMatrix& gold) {
  std::size_t n = gold.dim();
  if (s_edge.shape() != Shape{n, n})
    throw DimensionError("edge_loss: scores " + shape_string(s_edge.shape()) +
                         " for adjacency of dim " + std::to_string(n));
  Tensor target({n, n}, 0.0), mask({n, n}, 0.0);
  for (std::size_t i = 1; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      mask.at(i, j) = 1.0;
      target.at(i, j) = gold.at(j, i) ? 1.0 : 0.0;
    }
  return sigmoid_bce_mean(s_edge, target, mask);
}

Var label_loss(Var s_label, const SemanticGraph& gold, const Vocabulary& vocab) {
  std::vector<CellTarget> cells;
  cells.reserve(gold.edges().size());
  for (const Edge& e : gold.edges()) cells.push_back({e.dep, e.head, vocab.label_id(e.label)});
  return softmax_xent_cells(s_label, cells);
}

namespace {

void check_lambda(double lambda) {
  if (!(lambda > 0.0 && lambda < 1.0))
    throw ConfigError("lambda must lie in (0,1), got " + std::to_string(lambda));
}

}  // namespace

Var combined_loss(Var l_edge, Var l_label, double lambda) {
  check_lambda(lambda);
  return add(scale(l_edge, lambda), scale(l_label, 1.0 - lambda));
}

double combined_loss(double l_edge, double l_label, double lambda) {
  check_lambda(lambda);
  return lambda * l_edge + (1.0 - lambda) * l_label;
}

double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (cfg.decay_steps == 0) throw ConfigError("decay_steps must be positive");
  return cfg.lr * std::pow(cfg.decay_rate, static_cast<double>(step / cfg.decay_steps));
}

bool EarlyStopping::update(double score) {
  ++epoch_;
  if (best_epoch_ == 0 || score > best_) {
    best_ = score;
    best_epoch_ = epoch_;
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::string MetricsLog::to_tsv() const {
  std::string out;
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6f\t%.6f\t%.6g\n", r.epoch, r.train_loss,
                  r.dev_uf1, r.dev_lf1, r.lr);
    out += buf;
  }
  return out;
}

std::vector<SemanticGraph> parse_corpus(const ParserModel& model, const Corpus& corpus,
                                        const std::vector<AdjMatrix>* adjacency) {
  if (model.has_gnn() && (!adjacency || adjacency->size() != corpus.size()))
    throw ContractError("parse_corpus: refining model needs one adjacency per sentence");
  std::vector<SemanticGraph> out;
  out.reserve(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s)
    out.push_back(model.parse(corpus.items[s].sentence,
                              model.has_gnn() ? &(*adjacency)[s] : nullptr));
  return out;
}

std::vector<AdjMatrix> predicted_adjacency(const ParserModel& vanilla, const Corpus& corpus) {
  std::vector<AdjMatrix> out;
  out.reserve(corpus.size());
  for (const auto& item : corpus.items) out.push_back(vanilla_parse(item.sentence, vanilla).first);
  return out;
}

std::vector<AdjMatrix> gold_adjacency(const Corpus& corpus) {
  std::vector<AdjMatrix> out;
  out.reserve(corpus.size());
  for (const auto& item : corpus.items) out.push_back(graph_to_adj(item.graph));
  return out;
}

std::vector<SemanticGraph> parse_pipeline(const ParserModel& vanilla, const ParserModel* hosdp,
                                          const Corpus& corpus) {
  if (!hosdp) {
    std::vector<SemanticGraph> out;
    for (const auto& item : corpus.items) out.push_back(vanilla_parse(item.sentence, vanilla).second);
    return out;
  }
  if (!hosdp->trained()) throw UsageError("refining model is untrained");
  auto adj = predicted_adjacency(vanilla, corpus);
  return parse_corpus(*hosdp, corpus, &adj);
}

namespace {

std::vector<SemanticGraph> gold_graphs(const Corpus& corpus) {
  std::vector<SemanticGraph> out;
  out.reserve(corpus.size());
  for (const auto& item : corpus.items) out.push_back(item.graph);
  return out;
}

void clip_gradients(std::span<Parameter* const> params, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad.data()) sq += g * g;
  double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  double f = max_norm / norm;
  for (Parameter* p : params)
    for (double& g : p->grad.storage()) g *= f;
}

}  // namespace

MetricsLog train_stage(ParserModel& model, const StageInputs& in, const TrainConfig& cfg,
                       std::ostream* progress) {
  cfg.validate();
  if (!in.train || !in.dev) throw ContractError("train_stage: missing corpus");
  const Corpus& train = *in.train;
  const Corpus& dev = *in.dev;
  if (model.has_gnn() && (!in.train_adjacency || in.dev_adjacency.size() != dev.size()))
    throw ContractError("train_stage: refining model needs adjacency for train and dev");

  Rng rng = Rng(cfg.seed).fork(model.has_gnn() ? 2 : 1);
  AdamState adam;
  adam.beta1 = cfg.beta1;
  adam.beta2 = cfg.beta2;
  adam.eps = cfg.eps;
  std::vector<Parameter*> params = model.params().trainable();
  EarlyStopping stopper(cfg.patience);
  std::vector<Tensor> best = model.params().snapshot();
  const std::vector<SemanticGraph> dev_gold = gold_graphs(dev);
  std::vector<AdjMatrix> train_gold_adj = gold_adjacency(train);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t step = 0;
  MetricsLog log;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    double loss_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      model.params().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        std::size_t idx = order[k];
        const AnnotatedSentence& item = train.items[idx];
        Graph g(Mode::kTrain, &rng);
        std::optional<AdjMatrix> adj;
        if (model.has_gnn()) adj = in.train_adjacency(idx, rng);
        Scores sc = model.forward(g, item.sentence, adj ? &*adj : nullptr);
        Var loss = combined_loss(edge_loss(sc.edge, train_gold_adj[idx]),
                                 label_loss(sc.label, item.graph, model.vocab()), cfg.lambda);
        g.backward(loss);
        loss_total += loss.value()[0];
      }
      double inv = 1.0 / static_cast<double>(end - start);
      for (Parameter* p : params)
        for (double& v : p->grad.storage()) v *= inv;
      clip_gradients(params, cfg.clip_norm);
      adam.lr = lr_at(step, cfg);
      adam_step(params, adam);
      ++step;
    }
    auto predicted = parse_corpus(model, dev, model.has_gnn() ? &in.dev_adjacency : nullptr);
    F1Report report = lf1_graphs(predicted, dev_gold);
    EpochMetrics row;
    row.epoch = epoch;
    row.train_loss = loss_total / static_cast<double>(train.size());
    row.dev_uf1 = report.unlabeled().f1;
    row.dev_lf1 = report.labeled().f1;
    row.lr = lr_at(step == 0 ? 0 : step - 1, cfg);
    log.rows.push_back(row);
    if (stopper.update(row.dev_lf1)) best = model.params().snapshot();
    if (progress) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "[%s] epoch %zu  loss %.4f  dev UF1 %.4f  LF1 %.4f%s\n",
                    model.prefix().c_str(), epoch, row.train_loss, row.dev_uf1, row.dev_lf1,
                    stopper.best_epoch() == epoch ? "  *" : "");
      *progress << buf << std::flush;
    }
    if (stopper.should_stop()) break;
  }
  model.params().restore(best);
  model.set_trained(true);
  log.best_epoch = stopper.best_epoch();
  return log;
}

void check_training_data(const Corpus& train, const Corpus& dev) {
  if (train.size() == 0) throw ConfigError("training corpus is empty");
  if (dev.size() == 0) throw ConfigError("dev corpus is empty");
  std::set<std::string> labels;
  for (const auto& item : train.items)
    for (const Edge& e : item.graph.edges()) labels.insert(e.label);
  for (const auto& item : dev.items)
    for (const Edge& e : item.graph.edges())
      if (labels.count(e.label)) return;
  throw ConfigError("dev corpus shares no edge label with the training corpus");
}

namespace {

std::uint64_t init_seed(std::uint64_t seed, std::uint64_t stage) {
  return Rng(seed).fork(100 + stage).next_u64();
}

}  // namespace

std::unique_ptr<ParserModel> train_vanilla(const Corpus& train, const Corpus& dev,
                                           const Vocabulary& vocab, const ModelConfig& mcfg,
                                           const TrainConfig& tcfg, MetricsLog& log,
                                           const TrainOptions& opts) {
  auto model = std::make_unique<ParserModel>(mcfg, vocab, false, init_seed(tcfg.seed, 1),
                                             opts.pretrained);
  StageInputs in;
  in.train = &train;
  in.dev = &dev;
  log = train_stage(*model, in, tcfg, opts.progress);
  return model;
}

std::unique_ptr<ParserModel> train_hosdp(const ParserModel& vanilla, const Corpus& train,
                                         const Corpus& dev, const ModelConfig& mcfg,
                                         const TrainConfig& tcfg, MetricsLog& log,
                                         const TrainOptions& opts) {
  auto model = std::make_unique<ParserModel>(mcfg, vanilla.vocab(), true, init_seed(tcfg.seed, 2),
                                             opts.pretrained);
  auto gold = std::make_shared<std::vector<AdjMatrix>>(gold_adjacency(train));
  auto pred = std::make_shared<std::vector<AdjMatrix>>();
  if (tcfg.adjacency != AdjacencySource::kGold) *pred = predicted_adjacency(vanilla, train);
  StageInputs in;
  in.train = &train;
  in.dev = &dev;
  in.dev_adjacency = predicted_adjacency(vanilla, dev);
  AdjacencySource source = tcfg.adjacency;
  double mix = tcfg.gold_mix;
  in.train_adjacency = [gold, pred, source, mix](std::size_t idx, Rng& rng) {
    switch (source) {
      case AdjacencySource::kGold: return (*gold)[idx];
      case AdjacencySource::kPredicted: return (*pred)[idx];
      case AdjacencySource::kMixed: return rng.bernoulli(mix) ? (*gold)[idx] : (*pred)[idx];
    }
    return (*pred)[idx];
  };
  log = train_stage(*model, in, tcfg, opts.progress);
  return model;
}

TrainResult train(const Corpus& train, const Corpus& dev, const ModelConfig& mcfg,
                  const TrainConfig& tcfg, const TrainOptions& opts) {
  mcfg.validate();
  tcfg.validate();
  check_training_data(train, dev);
  Vocabulary vocab = build_vocab(train, tcfg.min_freq);
  TrainResult result;
  result.vanilla = train_vanilla(train, dev, vocab, mcfg, tcfg, result.vanilla_log, opts);
  if (!opts.vanilla_only)
    result.hosdp = train_hosdp(*result.vanilla, train, dev, mcfg, tcfg, result.hosdp_log, opts);
  return result;
}

}  // namespace hosdp
