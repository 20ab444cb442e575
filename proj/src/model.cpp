#include "hosdp/model.hpp"

#include <sstream>

#include "hosdp/error.hpp"
#include "hosdp/ops.hpp"

namespace hosdp {

ParserModel::ParserModel(const ModelConfig& cfg, const Vocabulary& vocab, bool with_gnn,
                         std::uint64_t seed, const PretrainedEmbeddings* pretrained)
    : cfg_(cfg), vocab_(vocab), prefix_(with_gnn ? "hosdp" : "vanilla") {
  cfg_.validate();
  if (vocab_.labels.size() == 0) throw ConfigError("label vocabulary is empty");
  Rng rng(seed);
  encoder_ = std::make_unique<Encoder>(store_, prefix_ + ".enc", cfg_, vocab_, rng, pretrained);
  if (with_gnn)
    gnn_ = std::make_unique<GnnStack>(store_, prefix_ + ".gnn", cfg_.gnn, encoder_->output_dim(),
                                      rng);
  decoder_ = std::make_unique<Decoder>(store_, prefix_ + ".dec", encoder_->output_dim(),
                                       cfg_.mlp_dim, cfg_.mlp_dropout, vocab_.labels.size(), rng);
}

Scores ParserModel::forward(Graph& g, const Sentence& s, const AdjMatrix* adj) const {
  if (s.size() == 0) throw ContractError("cannot parse an empty sentence");
  Var r = encoder_->encode(g, s);
  if (gnn_) {
    if (!adj) throw ContractError("the refining parser needs an adjacency matrix");
    r = gnn_->forward(g, r, *adj);
  }
  return decoder_->score(g, r);
}

SemanticGraph ParserModel::parse(const Sentence& s, const AdjMatrix* adj) const {
  Graph g(Mode::kEval);
  Scores sc = forward(g, s, adj);
  return decode(sc.edge.value(), sc.label.value(), labels());
}

std::pair<AdjMatrix, SemanticGraph> vanilla_parse(const Sentence& s, const ParserModel& vanilla) {
  if (vanilla.has_gnn()) throw UsageError("vanilla_parse needs a model without GNN layers");
  if (!vanilla.trained()) throw UsageError("vanilla_parse called on an untrained model");
  SemanticGraph graph = vanilla.parse(s);
  AdjMatrix adj = graph_to_adj(graph);
  return {std::move(adj), std::move(graph)};
}

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += s + "\n";
  return out;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace

Checkpoint make_checkpoint(const ParserModel& vanilla, const ParserModel* hosdp) {
  Checkpoint ckpt;
  ckpt.tensors = export_parameters(vanilla.params());
  if (hosdp) {
    auto more = export_parameters(hosdp->params());
    ckpt.tensors.insert(ckpt.tensors.end(), more.begin(), more.end());
  }
  ckpt.sections.emplace_back("model_config", format_key_values(to_key_values(vanilla.config())));
  if (hosdp)
    ckpt.sections.emplace_back("hosdp_config", format_key_values(to_key_values(hosdp->config())));
  ckpt.sections.emplace_back("vocabulary", vanilla.vocab().serialize());
  const auto& rows = vanilla.encoder().tables().pretrained;
  if (rows) {
    ckpt.sections.emplace_back("pretrained_dim", std::to_string(rows->value.cols()));
    ckpt.sections.emplace_back("pretrained_tokens", join_lines(vanilla.encoder().pretrained_tokens()));
  }
  return ckpt;
}

SavedModels restore_models(const Checkpoint& ckpt) {
  const std::string* cfg_text = ckpt.section("model_config");
  const std::string* vocab_text = ckpt.section("vocabulary");
  if (!cfg_text || !vocab_text) throw ParseError(0, "checkpoint lacks model_config or vocabulary");
  auto read_cfg = [](const std::string& text) {
    ModelConfig cfg;
    KeyValues rest = apply_overrides(cfg, parse_key_values(text));
    if (!rest.empty()) throw ParseError(0, "checkpoint config has unknown key " + rest.begin()->first);
    return cfg;
  };
  ModelConfig cfg = read_cfg(*cfg_text);
  Vocabulary vocab = Vocabulary::deserialize(*vocab_text);

  PretrainedEmbeddings pre;
  if (const std::string* dim = ckpt.section("pretrained_dim")) {
    pre.dim = std::stoul(*dim);
    // Values are overwritten by the stored frozen block below.
    for (const auto& tok : split_lines(*ckpt.section("pretrained_tokens")))
      pre.vectors[tok] = std::vector<double>(pre.dim, 0.0);
  }
  const PretrainedEmbeddings* pre_ptr = pre.dim ? &pre : nullptr;

  SavedModels out;
  out.vanilla = std::make_unique<ParserModel>(cfg, vocab, false, 0, pre_ptr);
  import_parameters(out.vanilla->params(), ckpt.tensors);
  out.vanilla->set_trained(true);
  if (const std::string* hcfg = ckpt.section("hosdp_config")) {
    out.hosdp = std::make_unique<ParserModel>(read_cfg(*hcfg), vocab, true, 0, pre_ptr);
    import_parameters(out.hosdp->params(), ckpt.tensors);
    out.hosdp->set_trained(true);
  }
  return out;
}

void save_models(const std::string& path, const ParserModel& vanilla, const ParserModel* hosdp) {
  save_checkpoint(path, make_checkpoint(vanilla, hosdp));
}

SavedModels load_models(const std::string& path) { return restore_models(load_checkpoint(path)); }

}  // namespace hosdp
