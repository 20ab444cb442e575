#include "hosdp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "hosdp/embeddings.hpp"
#include "hosdp/error.hpp"
#include "hosdp/evaluator.hpp"
#include "hosdp/model.hpp"
#include "hosdp/sdp.hpp"
#include "hosdp/synth.hpp"
#include "hosdp/training.hpp"

namespace hosdp {

namespace {

std::string timestamp_line() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::strftime(buf, sizeof buf, "# generated %Y-%m-%dT%H:%M:%SZ\n", &tm);
  return buf;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SerializationError("cannot open " + path + " for writing");
  return out;
}

// Cycle warnings only matter for gold annotations.
Corpus read_corpus(const std::string& path, std::ostream& err, bool warn = true) {
  ParseResult r = read_sdp_file(path);
  if (warn)
    for (const auto& w : r.warnings) err << "warning: " << path << ": " << w << "\n";
  return std::move(r.corpus);
}

void write_corpus(const std::string& path, const Corpus& corpus, bool timestamp) {
  std::ofstream out = open_out(path);
  if (timestamp) out << timestamp_line();
  write_sdp(out, corpus);
  if (!out) throw SerializationError("failed writing " + path);
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::optional<std::size_t> layers;
  std::string adjacency;
  std::string embeddings;
  std::optional<double> lambda;
  std::vector<std::string> sets;
  bool no_timestamp = false;

  // synth
  std::string out;
  std::size_t sentences = 200;
  std::size_t min_len = 6;
  std::size_t max_len = 15;
  double sibling_prob = 0.9;
  std::uint64_t grammar_seed = 0;

  // train
  std::string train, dev, metrics;
  bool vanilla_only = false;
  bool quiet = false;

  // predict / eval / buckets
  std::string model, input, gold, pred;
  bool per_label = false;
  bool tsv = false;
  std::size_t width = 10;
};

void add_shared(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "key=value configuration file");
  sub->add_option("--set", o.sets, "extra key=value override (repeatable)");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--variant", o.variant, "GNN variant: gcn or gat");
  sub->add_option("--layers", o.layers, "number of GNN layers K");
  sub->add_option("--adjacency", o.adjacency, "training adjacency: predicted, gold or mixed");
  sub->add_option("--embeddings", o.embeddings, "pretrained embedding file");
  sub->add_option("--lambda", o.lambda, "edge-loss weight in (0,1)");
}

// Config file first, then --set pairs, then the dedicated flags.
std::pair<ModelConfig, TrainConfig> resolve_configs(const Options& o) {
  KeyValues kv;
  if (!o.config.empty()) kv = parse_key_values(read_text(o.config));
  for (const auto& s : o.sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got '" + s + "'");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  if (o.seed) kv["seed"] = std::to_string(*o.seed);
  if (!o.variant.empty()) kv["gnn.variant"] = o.variant;
  if (o.layers) kv["gnn.layers"] = std::to_string(*o.layers);
  if (!o.adjacency.empty()) kv["adjacency"] = o.adjacency;
  if (o.lambda) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", *o.lambda);
    kv["lambda"] = buf;
  }
  ModelConfig m;
  TrainConfig t;
  KeyValues rest = apply_overrides(t, apply_overrides(m, kv));
  if (!rest.empty()) throw ConfigError("unknown configuration key '" + rest.begin()->first + "'");
  m.validate();
  t.validate();
  return {m, t};
}

int cmd_synth(const Options& o, std::ostream& out) {
  SynthConfig cfg;
  cfg.sentences = o.sentences;
  cfg.min_len = o.min_len;
  cfg.max_len = o.max_len;
  cfg.sibling_prob = o.sibling_prob;
  cfg.grammar_seed = o.grammar_seed;
  if (o.seed) cfg.seed = *o.seed;
  Corpus c = gen_synthetic(cfg);
  write_corpus(o.out, c, !o.no_timestamp);
  out << "wrote " << c.size() << " sentences to " << o.out << "\n";
  return kExitOk;
}

std::string metrics_text(const TrainResult& r, bool timestamp) {
  std::string text = timestamp ? timestamp_line() : "";
  text += "stage\tepoch\ttrain_loss\tdev_uf1\tdev_lf1\tlr\n";
  auto add = [&](const char* stage, const MetricsLog& log) {
    std::istringstream rows(log.to_tsv());
    std::string line;
    while (std::getline(rows, line)) text += std::string(stage) + "\t" + line + "\n";
  };
  add("vanilla", r.vanilla_log);
  if (r.hosdp) add("hosdp", r.hosdp_log);
  return text;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  auto [mcfg, tcfg] = resolve_configs(o);
  Corpus train_set = read_corpus(o.train, err);
  Corpus dev_set = read_corpus(o.dev, err);
  std::optional<PretrainedEmbeddings> pretrained;
  if (!o.embeddings.empty()) pretrained = load_embeddings_file(o.embeddings);
  TrainOptions opts;
  opts.vanilla_only = o.vanilla_only;
  opts.pretrained = pretrained ? &*pretrained : nullptr;
  opts.progress = o.quiet ? nullptr : &err;
  TrainResult r = train(train_set, dev_set, mcfg, tcfg, opts);
  save_models(o.out, *r.vanilla, r.hosdp.get());
  std::string metrics_path = o.metrics.empty() ? o.out + ".metrics.tsv" : o.metrics;
  std::ofstream m = open_out(metrics_path);
  m << metrics_text(r, !o.no_timestamp);
  out << "saved " << (r.hosdp ? "vanilla and refining models" : "vanilla model") << " to " << o.out
      << "; metrics in " << metrics_path << "\n";
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out, std::ostream& err) {
  SavedModels models = load_models(o.model);
  Corpus c = read_corpus(o.input, err, false);
  auto graphs = parse_pipeline(*models.vanilla, models.hosdp.get(), c);
  for (std::size_t s = 0; s < c.size(); ++s) c.items[s].graph = std::move(graphs[s]);
  write_corpus(o.out, c, !o.no_timestamp);
  out << "parsed " << c.size() << " sentences with the "
      << (models.hosdp ? "refining" : "vanilla") << " parser into " << o.out << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
  Corpus gold = read_corpus(o.gold, err);
  Corpus pred = read_corpus(o.pred, err, false);
  F1Report r = lf1(pred, gold, o.per_label);
  if (o.tsv) {
    out << format_report_tsv(r);
    return kExitOk;
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "LF1 %.4f  UF1 %.4f\n", r.labeled().f1, r.unlabeled().f1);
  out << buf << format_report(r);
  return kExitOk;
}

int cmd_buckets(const Options& o, std::ostream& out, std::ostream& err) {
  Corpus gold = read_corpus(o.gold, err);
  Corpus pred = read_corpus(o.pred, err, false);
  std::string tsv = format_buckets_tsv(length_buckets(pred, gold, o.width));
  if (o.out.empty()) {
    out << tsv;
  } else {
    std::ofstream f = open_out(o.out);
    f << tsv;
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Semantic dependency parser with graph-neural refinement"};
  app.name("hosdp");
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "write a synthetic SDP corpus");
  synth->add_option("--out", o.out, "output SDP file")->required();
  synth->add_option("--sentences", o.sentences, "number of sentences");
  synth->add_option("--seed", o.seed, "sampling seed");
  synth->add_option("--grammar-seed", o.grammar_seed, "seed of the lexicon tables");
  synth->add_option("--min-len", o.min_len, "shortest sentence");
  synth->add_option("--max-len", o.max_len, "longest sentence");
  synth->add_option("--sibling-prob", o.sibling_prob, "probability of sibling edges");
  synth->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp header line");

  auto* train_cmd = app.add_subcommand("train", "train the vanilla and refining parsers");
  train_cmd->add_option("--train", o.train, "training SDP file")->required();
  train_cmd->add_option("--dev", o.dev, "development SDP file")->required();
  train_cmd->add_option("--out", o.out, "checkpoint path")->required();
  train_cmd->add_option("--metrics", o.metrics, "metrics log path (default <out>.metrics.tsv)");
  train_cmd->add_flag("--vanilla-only", o.vanilla_only, "stop after the first-order parser");
  train_cmd->add_flag("--quiet", o.quiet, "no per-epoch progress on stderr");
  train_cmd->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp header line");
  add_shared(train_cmd, o);

  auto* predict = app.add_subcommand("predict", "parse an SDP file with a trained checkpoint");
  predict->add_option("--model", o.model, "checkpoint from train")->required();
  predict->add_option("--input", o.input, "SDP file to parse")->required();
  predict->add_option("--out", o.out, "output SDP file")->required();
  predict->add_flag("--no-timestamp", o.no_timestamp, "omit the timestamp header line");

  auto* eval = app.add_subcommand("eval", "labeled and unlabeled F1 of predictions");
  eval->add_option("--gold", o.gold, "gold SDP file")->required();
  eval->add_option("--pred", o.pred, "predicted SDP file")->required();
  eval->add_flag("--per-label", o.per_label, "add per-label counts");
  eval->add_flag("--tsv", o.tsv, "tab-separated output");

  auto* buckets = app.add_subcommand("buckets", "F1 by sentence length, tab-separated");
  buckets->add_option("--gold", o.gold, "gold SDP file")->required();
  buckets->add_option("--pred", o.pred, "predicted SDP file")->required();
  buckets->add_option("--width", o.width, "bucket width in tokens");
  buckets->add_option("--out", o.out, "output file (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out);
    if (train_cmd->parsed()) return cmd_train(o, out, err);
    if (predict->parsed()) return cmd_predict(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out, err);
    return cmd_buckets(o, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace hosdp
