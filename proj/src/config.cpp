#include "hosdp/config.hpp"

#include <charconv>
#include <sstream>

#include "hosdp/error.hpp"

namespace hosdp {

void GnnConfig::validate(std::size_t input_dim) const {
  if (layers == 0) throw ConfigError("gnn.layers must be at least 1");
  if (heads == 0) throw ConfigError("gnn.heads must be at least 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("gnn.dropout must be in [0,1)");
  if (alpha < 0.0) throw ConfigError("gnn.alpha must be non-negative");
  std::size_t dim = hidden ? hidden : input_dim;
  if (variant == GnnVariant::kGat && dim % heads != 0)
    throw ConfigError("gnn hidden dim " + std::to_string(dim) + " is not divisible by " +
                      std::to_string(heads) + " heads");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(word_dim, "word_dim");
  positive(pos_dim, "pos_dim");
  if (use_lemma) positive(lemma_dim, "lemma_dim");
  if (use_char) {
    positive(char_dim, "char_dim");
    positive(char_embed_dim, "char_embed_dim");
    positive(char_hidden, "char_hidden");
  }
  positive(lstm_layers, "lstm_layers");
  positive(lstm_hidden, "lstm_hidden");
  positive(mlp_dim, "mlp_dim");
  for (double p : {embed_dropout, lstm_dropout, mlp_dropout})
    if (!(p >= 0.0 && p < 1.0)) throw ConfigError("dropout rates must be in [0,1)");
  gnn.validate(encoder_output_dim());
  if (gnn.hidden && gnn.hidden != encoder_output_dim())
    throw ConfigError("gnn.hidden must equal the encoder output width (" +
                      std::to_string(encoder_output_dim()) + ")");
}

void TrainConfig::validate() const {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ConfigError("lambda must be in (0,1)");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw ConfigError("betas must be in [0,1)");
  if (!(decay_rate > 0.0)) throw ConfigError("decay_rate must be positive");
  if (decay_steps == 0) throw ConfigError("decay_steps must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (patience >= max_epochs) throw ConfigError("patience must be smaller than max_epochs");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(gold_mix >= 0.0 && gold_mix <= 1.0)) throw ConfigError("gold_mix must be in [0,1]");
  if (clip_norm < 0.0) throw ConfigError("clip_norm must be non-negative");
}

std::string to_string(GnnVariant v) { return v == GnnVariant::kGcn ? "gcn" : "gat"; }

std::string to_string(NeighborMode m) {
  switch (m) {
    case NeighborMode::kSymmetric: return "symmetric";
    case NeighborMode::kHeads: return "heads";
    case NeighborMode::kDependents: return "dependents";
  }
  return "?";
}

std::string to_string(AdjacencySource a) {
  switch (a) {
    case AdjacencySource::kPredicted: return "predicted";
    case AdjacencySource::kGold: return "gold";
    case AdjacencySource::kMixed: return "mixed";
  }
  return "?";
}

GnnVariant parse_variant(const std::string& s) {
  if (s == "gcn") return GnnVariant::kGcn;
  if (s == "gat") return GnnVariant::kGat;
  throw ConfigError("unknown gnn variant '" + s + "' (expected gcn or gat)");
}

NeighborMode parse_neighbor_mode(const std::string& s) {
  if (s == "symmetric") return NeighborMode::kSymmetric;
  if (s == "heads") return NeighborMode::kHeads;
  if (s == "dependents") return NeighborMode::kDependents;
  throw ConfigError("unknown neighbor mode '" + s + "'");
}

AdjacencySource parse_adjacency(const std::string& s) {
  if (s == "predicted") return AdjacencySource::kPredicted;
  if (s == "gold") return AdjacencySource::kGold;
  if (s == "mixed") return AdjacencySource::kMixed;
  throw ConfigError("unknown adjacency source '" + s + "' (expected predicted, gold or mixed)");
}

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(lineno, "expected key=value");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(lineno, "empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
  return out;
}

KeyValues apply_overrides(ModelConfig& c, const KeyValues& kv) {
  KeyValues rest;
  for (const auto& [k, v] : kv) {
    if (k == "word_dim") c.word_dim = to_size(k, v);
    else if (k == "pos_dim") c.pos_dim = to_size(k, v);
    else if (k == "lemma_dim") c.lemma_dim = to_size(k, v);
    else if (k == "char_dim") c.char_dim = to_size(k, v);
    else if (k == "char_embed_dim") c.char_embed_dim = to_size(k, v);
    else if (k == "char_hidden") c.char_hidden = to_size(k, v);
    else if (k == "use_lemma") c.use_lemma = to_bool(k, v);
    else if (k == "use_char") c.use_char = to_bool(k, v);
    else if (k == "embed_dropout") c.embed_dropout = to_double(k, v);
    else if (k == "lstm_layers") c.lstm_layers = to_size(k, v);
    else if (k == "lstm_hidden") c.lstm_hidden = to_size(k, v);
    else if (k == "lstm_dropout") c.lstm_dropout = to_double(k, v);
    else if (k == "mlp_dim") c.mlp_dim = to_size(k, v);
    else if (k == "mlp_dropout") c.mlp_dropout = to_double(k, v);
    else if (k == "gnn.variant") c.gnn.variant = parse_variant(v);
    else if (k == "gnn.layers") c.gnn.layers = to_size(k, v);
    else if (k == "gnn.heads") c.gnn.heads = to_size(k, v);
    else if (k == "gnn.alpha") c.gnn.alpha = to_double(k, v);
    else if (k == "gnn.dropout") c.gnn.dropout = to_double(k, v);
    else if (k == "gnn.hidden") c.gnn.hidden = to_size(k, v);
    else if (k == "gnn.neighbors") c.gnn.neighbors = parse_neighbor_mode(v);
    else rest[k] = v;
  }
  return rest;
}

KeyValues apply_overrides(TrainConfig& c, const KeyValues& kv) {
  KeyValues rest;
  for (const auto& [k, v] : kv) {
    if (k == "lambda") c.lambda = to_double(k, v);
    else if (k == "lr") c.lr = to_double(k, v);
    else if (k == "beta1") c.beta1 = to_double(k, v);
    else if (k == "beta2") c.beta2 = to_double(k, v);
    else if (k == "eps") c.eps = to_double(k, v);
    else if (k == "decay_rate") c.decay_rate = to_double(k, v);
    else if (k == "decay_steps") c.decay_steps = to_size(k, v);
    else if (k == "max_epochs") c.max_epochs = to_size(k, v);
    else if (k == "patience") c.patience = to_size(k, v);
    else if (k == "batch_size") c.batch_size = to_size(k, v);
    else if (k == "seed") c.seed = to_size(k, v);
    else if (k == "min_freq") c.min_freq = to_size(k, v);
    else if (k == "adjacency") c.adjacency = parse_adjacency(v);
    else if (k == "gold_mix") c.gold_mix = to_double(k, v);
    else if (k == "clip_norm") c.clip_norm = to_double(k, v);
    else rest[k] = v;
  }
  return rest;
}

KeyValues to_key_values(const ModelConfig& c) {
  return {
      {"word_dim", std::to_string(c.word_dim)},
      {"pos_dim", std::to_string(c.pos_dim)},
      {"lemma_dim", std::to_string(c.lemma_dim)},
      {"char_dim", std::to_string(c.char_dim)},
      {"char_embed_dim", std::to_string(c.char_embed_dim)},
      {"char_hidden", std::to_string(c.char_hidden)},
      {"use_lemma", c.use_lemma ? "true" : "false"},
      {"use_char", c.use_char ? "true" : "false"},
      {"embed_dropout", num(c.embed_dropout)},
      {"lstm_layers", std::to_string(c.lstm_layers)},
      {"lstm_hidden", std::to_string(c.lstm_hidden)},
      {"lstm_dropout", num(c.lstm_dropout)},
      {"mlp_dim", std::to_string(c.mlp_dim)},
      {"mlp_dropout", num(c.mlp_dropout)},
      {"gnn.variant", to_string(c.gnn.variant)},
      {"gnn.layers", std::to_string(c.gnn.layers)},
      {"gnn.heads", std::to_string(c.gnn.heads)},
      {"gnn.alpha", num(c.gnn.alpha)},
      {"gnn.dropout", num(c.gnn.dropout)},
      {"gnn.hidden", std::to_string(c.gnn.hidden)},
      {"gnn.neighbors", to_string(c.gnn.neighbors)},
  };
}

KeyValues to_key_values(const TrainConfig& c) {
  return {
      {"lambda", num(c.lambda)},
      {"lr", num(c.lr)},
      {"beta1", num(c.beta1)},
      {"beta2", num(c.beta2)},
      {"eps", num(c.eps)},
      {"decay_rate", num(c.decay_rate)},
      {"decay_steps", std::to_string(c.decay_steps)},
      {"max_epochs", std::to_string(c.max_epochs)},
      {"patience", std::to_string(c.patience)},
      {"batch_size", std::to_string(c.batch_size)},
      {"seed", std::to_string(c.seed)},
      {"min_freq", std::to_string(c.min_freq)},
      {"adjacency", to_string(c.adjacency)},
      {"gold_mix", num(c.gold_mix)},
      {"clip_norm", num(c.clip_norm)},
  };
}

}  // namespace hosdp
