#include "longconv/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>

#include "longconv/attention.hpp"
#include "longconv/checkpoint.hpp"
#include "longconv/heads.hpp"
#include "longconv/optim.hpp"

namespace longconv {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Enum names
// ---------------------------------------------------------------------------

std::string to_string(TaskKind t) {
  switch (t) {
    case TaskKind::conversations: return "conversations";
    case TaskKind::listops: return "listops";
    case TaskKind::text: return "text";
    case TaskKind::retrieval: return "retrieval";
  }
  return "?";
}

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::cnn_large: return "cnn_large";
    case ModelKind::cnn_small: return "cnn_small";
    case ModelKind::cnn_custom: return "cnn_custom";
    case ModelKind::full_attention: return "full_attention";
  }
  return "?";
}

std::string to_string(Paradigm p) {
  switch (p) {
    case Paradigm::mtl: return "mtl";
    case Paradigm::stl_conv: return "stl_conv";
    case Paradigm::stl_utt: return "stl_utt";
  }
  return "?";
}

std::string to_string(Precision p) { return p == Precision::f32 ? "f32" : "f64"; }

// ---------------------------------------------------------------------------
// Config parsing with field-path diagnostics
// ---------------------------------------------------------------------------

namespace {

void reject_unknown(const json& j, const std::string& prefix,
                    std::initializer_list<const char*> allowed) {
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* a : allowed)
      if (item.key() == a) {
        known = true;
        break;
      }
    if (!known) throw ConfigError(prefix + item.key() + ": unknown field");
  }
}

double get_num(const json& j, const std::string& prefix, const char* key, double def) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  if (!it->is_number()) throw ConfigError(prefix + key + ": expected a number");
  return it->get<double>();
}

std::int64_t get_int(const json& j, const std::string& prefix, const char* key,
                     std::int64_t def) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  if (!it->is_number_integer()) throw ConfigError(prefix + key + ": expected an integer");
  return it->get<std::int64_t>();
}

std::string get_str(const json& j, const std::string& prefix, const char* key,
                    const std::string& def) {
  auto it = j.find(key);
  if (it == j.end()) return def;
  if (!it->is_string()) throw ConfigError(prefix + key + ": expected a string");
  return it->get<std::string>();
}

std::vector<std::int64_t> get_int_array(const json& j, const std::string& prefix,
                                        const char* key) {
  auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_array()) throw ConfigError(prefix + key + ": expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& v : *it) {
    if (!v.is_number_integer()) throw ConfigError(prefix + key + ": expected an array of integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

}  // namespace

RunConfig parse_run_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  reject_unknown(j, "",
                 {"task", "model", "paradigm", "seed", "total_steps", "batch_size", "precision",
                  "lambda_utt", "threshold", "n_seeds", "data_path", "k_conv", "k_utt",
                  "vocab_size", "optimizer", "architecture"});
  RunConfig cfg;

  const std::string task = get_str(j, "", "task", "conversations");
  if (task == "conversations") cfg.task = TaskKind::conversations;
  else if (task == "listops") cfg.task = TaskKind::listops;
  else if (task == "text") cfg.task = TaskKind::text;
  else if (task == "retrieval") cfg.task = TaskKind::retrieval;
  else throw ConfigError("task: must be one of conversations|listops|text|retrieval");

  const std::string model = get_str(j, "", "model", "cnn_small");
  if (model == "cnn_large") cfg.model = ModelKind::cnn_large;
  else if (model == "cnn_small") cfg.model = ModelKind::cnn_small;
  else if (model == "cnn_custom") cfg.model = ModelKind::cnn_custom;
  else if (model == "full_attention") cfg.model = ModelKind::full_attention;
  else throw ConfigError("model: must be one of cnn_large|cnn_small|cnn_custom|full_attention");

  const std::string paradigm = get_str(j, "", "paradigm", "mtl");
  if (paradigm == "mtl") cfg.paradigm = Paradigm::mtl;
  else if (paradigm == "stl_conv") cfg.paradigm = Paradigm::stl_conv;
  else if (paradigm == "stl_utt") cfg.paradigm = Paradigm::stl_utt;
  else throw ConfigError("paradigm: must be one of mtl|stl_conv|stl_utt");
  if (cfg.paradigm == Paradigm::stl_utt && cfg.task != TaskKind::conversations)
    throw ConfigError("paradigm: stl_utt requires task=conversations");

  const std::int64_t seed = get_int(j, "", "seed", 1);
  if (seed < 0) throw ConfigError("seed: must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.total_steps = get_int(j, "", "total_steps", 100);
  if (cfg.total_steps < 1) throw ConfigError("total_steps: must be >= 1");
  cfg.batch_size = get_int(j, "", "batch_size", 16);
  if (cfg.batch_size < 1) throw ConfigError("batch_size: must be >= 1");

  const std::string precision = get_str(j, "", "precision", "f32");
  if (precision == "f32") cfg.precision = Precision::f32;
  else if (precision == "f64") cfg.precision = Precision::f64;
  else throw ConfigError("precision: must be f32 or f64");

  cfg.lambda_utt = get_num(j, "", "lambda_utt", 1.0);
  if (cfg.lambda_utt < 0.0) throw ConfigError("lambda_utt: must be >= 0");
  cfg.threshold = get_num(j, "", "threshold", 0.5);
  if (cfg.threshold <= 0.0 || cfg.threshold >= 1.0)
    throw ConfigError("threshold: must be in (0,1)");
  cfg.n_seeds = static_cast<int>(get_int(j, "", "n_seeds", 1));
  if (cfg.n_seeds < 1) throw ConfigError("n_seeds: must be >= 1");
  cfg.data_path = get_str(j, "", "data_path", "");
  cfg.k_conv = static_cast<int>(get_int(j, "", "k_conv", 10));
  if (cfg.k_conv < 2) throw ConfigError("k_conv: must be >= 2");
  cfg.k_utt = static_cast<int>(get_int(j, "", "k_utt", 30));
  if (cfg.k_utt < 1) throw ConfigError("k_utt: must be >= 1");
  cfg.vocab_size = static_cast<int>(get_int(j, "", "vocab_size", 256));
  if (cfg.vocab_size < 4) throw ConfigError("vocab_size: must be >= 4");

  if (auto it = j.find("optimizer"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("optimizer: expected an object");
    const json& o = *it;
    reject_unknown(o, "optimizer.",
                   {"kind", "max_lr", "momentum", "weight_decay", "schedule", "warmup_fraction",
                    "div_factor", "final_div_factor", "beta1", "beta2", "eps"});
    auto& opt = cfg.optimizer;
    opt.kind = get_str(o, "optimizer.", "kind", opt.kind);
    if (opt.kind != "sgd" && opt.kind != "adam")
      throw ConfigError("optimizer.kind: must be sgd or adam");
    opt.max_lr = get_num(o, "optimizer.", "max_lr", opt.max_lr);
    if (opt.max_lr <= 0.0) throw ConfigError("optimizer.max_lr: must be > 0");
    opt.momentum = get_num(o, "optimizer.", "momentum", opt.momentum);
    if (opt.momentum < 0.0 || opt.momentum >= 1.0)
      throw ConfigError("optimizer.momentum: must be in [0,1)");
    opt.weight_decay = get_num(o, "optimizer.", "weight_decay", opt.weight_decay);
    if (opt.weight_decay < 0.0) throw ConfigError("optimizer.weight_decay: must be >= 0");
    opt.schedule = get_str(o, "optimizer.", "schedule", opt.schedule);
    if (opt.schedule != "one_cycle" && opt.schedule != "warmup_linear")
      throw ConfigError("optimizer.schedule: must be one_cycle or warmup_linear");
    opt.warmup_fraction = get_num(o, "optimizer.", "warmup_fraction", opt.warmup_fraction);
    if (opt.warmup_fraction <= 0.0 || opt.warmup_fraction >= 1.0)
      throw ConfigError("optimizer.warmup_fraction: must be in (0,1)");
    opt.div_factor = get_num(o, "optimizer.", "div_factor", opt.div_factor);
    opt.final_div_factor = get_num(o, "optimizer.", "final_div_factor", opt.final_div_factor);
    if (opt.div_factor <= 0.0 || opt.final_div_factor <= 0.0)
      throw ConfigError("optimizer.div_factor: must be > 0");
    opt.beta1 = get_num(o, "optimizer.", "beta1", opt.beta1);
    opt.beta2 = get_num(o, "optimizer.", "beta2", opt.beta2);
    opt.eps = get_num(o, "optimizer.", "eps", opt.eps);
  }

  if (auto it = j.find("architecture"); it != j.end()) {
    if (!it->is_object()) throw ConfigError("architecture: expected an object");
    const json& a = *it;
    reject_unknown(a, "architecture.",
                   {"embedding_dim", "dropout", "padding", "kernels", "dilations", "filters",
                    "layers", "model_dim", "heads", "ff_dim", "max_len"});
    auto& arch = cfg.architecture;
    arch.embedding_dim = get_int(a, "architecture.", "embedding_dim", arch.embedding_dim);
    if (arch.embedding_dim < 0) throw ConfigError("architecture.embedding_dim: must be >= 0");
    arch.dropout = get_num(a, "architecture.", "dropout", arch.dropout);
    if (arch.dropout < 0.0 || arch.dropout >= 1.0)
      throw ConfigError("architecture.dropout: must be in [0,1)");
    arch.padding = get_str(a, "architecture.", "padding", arch.padding);
    if (arch.padding != "bidirectional" && arch.padding != "causal")
      throw ConfigError("architecture.padding: must be bidirectional or causal");
    arch.kernels = get_int_array(a, "architecture.", "kernels");
    arch.dilations = get_int_array(a, "architecture.", "dilations");
    arch.filters = get_int_array(a, "architecture.", "filters");
    if (arch.kernels.size() > 2)
      throw ConfigError("architecture.kernels: expected 1 or 2 entries (towers)");
    if (arch.dilations.size() != arch.filters.size())
      throw ConfigError("architecture.dilations: must match filters in length");
    if (!arch.kernels.empty() && arch.dilations.empty())
      throw ConfigError("architecture.dilations: required when kernels are given");
    arch.layers = get_int(a, "architecture.", "layers", arch.layers);
    arch.model_dim = get_int(a, "architecture.", "model_dim", arch.model_dim);
    arch.heads = get_int(a, "architecture.", "heads", arch.heads);
    arch.ff_dim = get_int(a, "architecture.", "ff_dim", arch.ff_dim);
    arch.max_len = get_int(a, "architecture.", "max_len", arch.max_len);
    if (arch.max_len < 0) throw ConfigError("architecture.max_len: must be >= 0");
  }

  if (cfg.model == ModelKind::cnn_custom && cfg.task == TaskKind::conversations &&
      cfg.architecture.kernels.empty())
    throw ConfigError("architecture.kernels: required for cnn_custom on conversations");

  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  return parse_run_config(j);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["task"] = to_string(cfg.task);
  j["model"] = to_string(cfg.model);
  j["paradigm"] = to_string(cfg.paradigm);
  j["seed"] = cfg.seed;
  j["total_steps"] = cfg.total_steps;
  j["batch_size"] = cfg.batch_size;
  j["precision"] = to_string(cfg.precision);
  j["lambda_utt"] = cfg.lambda_utt;
  j["threshold"] = cfg.threshold;
  j["n_seeds"] = cfg.n_seeds;
  j["data_path"] = cfg.data_path;
  j["k_conv"] = cfg.k_conv;
  j["k_utt"] = cfg.k_utt;
  j["vocab_size"] = cfg.vocab_size;
  j["optimizer"] = {{"kind", cfg.optimizer.kind},
                    {"max_lr", cfg.optimizer.max_lr},
                    {"momentum", cfg.optimizer.momentum},
                    {"weight_decay", cfg.optimizer.weight_decay},
                    {"schedule", cfg.optimizer.schedule},
                    {"warmup_fraction", cfg.optimizer.warmup_fraction},
                    {"div_factor", cfg.optimizer.div_factor},
                    {"final_div_factor", cfg.optimizer.final_div_factor},
                    {"beta1", cfg.optimizer.beta1},
                    {"beta2", cfg.optimizer.beta2},
                    {"eps", cfg.optimizer.eps}};
  j["architecture"] = {{"embedding_dim", cfg.architecture.embedding_dim},
                       {"dropout", cfg.architecture.dropout},
                       {"padding", cfg.architecture.padding},
                       {"kernels", cfg.architecture.kernels},
                       {"dilations", cfg.architecture.dilations},
                       {"filters", cfg.architecture.filters},
                       {"layers", cfg.architecture.layers},
                       {"model_dim", cfg.architecture.model_dim},
                       {"heads", cfg.architecture.heads},
                       {"ff_dim", cfg.architecture.ff_dim},
                       {"max_len", cfg.architecture.max_len}};
  return j;
}

// ---------------------------------------------------------------------------
// Task geometry and model resolution
// ---------------------------------------------------------------------------

std::int64_t task_max_len(const RunConfig& cfg) {
  if (cfg.architecture.max_len > 0) return cfg.architecture.max_len;
  return cfg.task == TaskKind::listops ? 2048 : 4096;
}

std::int64_t task_vocab(const RunConfig& cfg) {
  switch (cfg.task) {
    case TaskKind::conversations: return cfg.vocab_size + 2;  // + speaker specials
    case TaskKind::listops: return 128;                       // ASCII characters
    case TaskKind::text:
    case TaskKind::retrieval: return 256;  // bytes
  }
  return 0;
}

int task_classes(const RunConfig& cfg) {
  switch (cfg.task) {
    case TaskKind::conversations: return cfg.k_conv;
    case TaskKind::listops: return 10;
    case TaskKind::text:
    case TaskKind::retrieval: return 2;
  }
  return 0;
}

DualTowerConfig resolve_cnn_config(const RunConfig& cfg) {
  if (cfg.model == ModelKind::full_attention)
    throw ConfigError("model: full_attention has no CNN config");
  const PaddingMode mode =
      cfg.architecture.padding == "causal" ? PaddingMode::causal : PaddingMode::bidirectional;
  const double dropout = cfg.architecture.dropout;
  std::vector<std::int64_t> kernels, dilations, filters;
  std::int64_t default_e = 64;
  if (cfg.model == ModelKind::cnn_large) {
    kernels = {11, 15};
    dilations = {1, 2, 4, 8};
    filters = {128, 256, 512, 1024};
    default_e = 768;
  } else if (cfg.model == ModelKind::cnn_small) {
    kernels = {5, 11};
    dilations = {1, 2, 4, 8};
    filters = {48, 96, 192, 384};
    default_e = 768;
  } else if (!cfg.architecture.kernels.empty()) {
    kernels = cfg.architecture.kernels;
    dilations = cfg.architecture.dilations;
    filters = cfg.architecture.filters;
  } else if (cfg.task == TaskKind::retrieval) {
    // Single long-range stack for retrieval.
    kernels = {17};
    dilations = {1, 2};
    filters = {32, 48};
  } else {
    // LRA text/listops: two stacks, three layers each.
    kernels = {9, 13};
    dilations = {1, 2, 4};
    filters = {8, 16, 32};
  }
  const std::int64_t e =
      cfg.architecture.embedding_dim > 0 ? cfg.architecture.embedding_dim : default_e;
  return DualTowerConfig::make(task_vocab(cfg), e, kernels, dilations, filters, mode, dropout);
}

AttentionConfig resolve_attention_config(const RunConfig& cfg) {
  AttentionConfig a;
  a.layers = cfg.architecture.layers;
  a.model_dim = cfg.architecture.model_dim;
  a.heads = cfg.architecture.heads;
  a.ff_dim = cfg.architecture.ff_dim;
  a.max_len = task_max_len(cfg);
  a.vocab_size = task_vocab(cfg);
  a.validate();
  return a;
}

// ---------------------------------------------------------------------------
// Data loading
// ---------------------------------------------------------------------------

namespace {

struct EncodedConv {
  std::vector<int> tokens;
  std::vector<UtteranceSpan> spans;
  MtlTargets targets;
};

struct LoadedData {
  std::vector<EncodedConv> convs;
  std::vector<ListOpsExample> listops;
  std::vector<TextExample> text;
  std::vector<RetrievalPair> retrieval;
  std::vector<std::size_t> train_idx, valid_idx, test_idx;
};

std::pair<int, int> speaker_ids(const RunConfig& cfg) {
  return {cfg.vocab_size, cfg.vocab_size + 1};
}

LoadedData load_data(const RunConfig& cfg) {
  if (cfg.data_path.empty()) throw ConfigError("data_path: required for training/evaluation");
  if (!fs::exists(cfg.data_path))
    throw ConfigError("data_path: file not found: " + cfg.data_path);
  LoadedData data;
  auto split_by_index = [&](std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto bucket = i % 10;
      if (bucket < 8) data.train_idx.push_back(i);
      else if (bucket == 8) data.valid_idx.push_back(i);
      else data.test_idx.push_back(i);
    }
  };
  switch (cfg.task) {
    case TaskKind::conversations: {
      const auto corpus = read_conversations_jsonl(cfg.data_path);
      data.convs.reserve(corpus.size());
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto batch =
            encode_batch({corpus[i]}, 0, speaker_ids(cfg), cfg.k_utt, task_max_len(cfg));
        EncodedConv ec{batch.tokens[0], batch.spans[0], batch.targets[0]};
        if (corpus[i].conv_label < 0 || corpus[i].conv_label >= cfg.k_conv)
          throw DataError("conversation '" + corpus[i].id + "' label outside [0,k_conv)");
        data.convs.push_back(std::move(ec));
        switch (split_of(corpus[i].id)) {
          case Split::train: data.train_idx.push_back(i); break;
          case Split::valid: data.valid_idx.push_back(i); break;
          case Split::test: data.test_idx.push_back(i); break;
        }
      }
      break;
    }
    case TaskKind::listops: {
      data.listops = read_listops_jsonl(cfg.data_path);
      for (const auto& ex : data.listops)
        if (ex.label < 0 || ex.label > 9) throw DataError("listops label outside [0,10)");
      split_by_index(data.listops.size());
      break;
    }
    case TaskKind::text: {
      data.text = read_text_jsonl(cfg.data_path);
      split_by_index(data.text.size());
      break;
    }
    case TaskKind::retrieval: {
      data.retrieval = read_retrieval_jsonl(cfg.data_path);
      split_by_index(data.retrieval.size());
      break;
    }
  }
  if (data.train_idx.empty()) throw HarnessError("training split is empty");
  if (data.test_idx.empty()) throw HarnessError("test split is empty");
  return data;
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

template <typename S>
struct TaskModel {
  RunConfig cfg;
  std::optional<DualTowerConfig> cnn_cfg;
  std::unique_ptr<DualTowerEncoder<S>> cnn;
  std::unique_ptr<AttentionEncoder<S>> attn;
  AffineHead<S> conv_head;
  AffineHead<S> utt_head;

  bool has_conv_head() const { return conv_head.defined(); }
  bool has_utt_head() const { return utt_head.defined(); }

  std::int64_t encoder_channels() const {
    return cnn ? cnn->config().final_channels() : attn->config().model_dim;
  }

  Tensor<S> encode(const std::vector<int>& ids, bool train, Rng& rng) const {
    return cnn ? cnn->encode(ids, train, rng) : attn->forward(ids);
  }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters() const {
    auto named = cnn ? cnn->named_parameters() : attn->named_parameters();
    if (has_conv_head()) conv_head.collect_params("head.conv", named);
    if (has_utt_head()) utt_head.collect_params("head.utt", named);
    return named;
  }

  std::vector<Tensor<S>> parameters() const {
    std::vector<Tensor<S>> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (auto& [name, t] : named_parameters()) n += t.numel();
    return n;
  }

  FlopsBreakdown encoder_flops(std::int64_t t_len) const {
    FlopsBreakdown f = cnn ? count_flops(*cnn_cfg, t_len) : count_flops(attn->config(), t_len);
    if (cfg.task == TaskKind::retrieval) {
      // Both documents pass through the shared encoder.
      f.conv *= 2;
      f.affine *= 2;
      f.attn_proj *= 2;
      f.attn_score *= 2;
      f.attn_ffn *= 2;
    }
    return f;
  }
};

template <typename S>
TaskModel<S> build_model(const RunConfig& cfg) {
  TaskModel<S> m;
  m.cfg = cfg;
  if (cfg.model == ModelKind::full_attention) {
    m.attn = std::make_unique<AttentionEncoder<S>>(resolve_attention_config(cfg), cfg.seed);
  } else {
    m.cnn_cfg = resolve_cnn_config(cfg);
    m.cnn = std::make_unique<DualTowerEncoder<S>>(*m.cnn_cfg, cfg.seed);
  }
  Rng head_rng = Rng(cfg.seed).fork(0x4EAD);
  const std::int64_t c = m.encoder_channels();
  const bool conversations = cfg.task == TaskKind::conversations;
  const bool want_conv = !conversations || cfg.paradigm != Paradigm::stl_utt;
  const bool want_utt = conversations && cfg.paradigm != Paradigm::stl_conv;
  if (want_conv) {
    const std::int64_t in_dim = cfg.task == TaskKind::retrieval ? 4 * c : c;
    m.conv_head = AffineHead<S>(in_dim, task_classes(cfg), head_rng);
  }
  if (want_utt) m.utt_head = AffineHead<S>(c, cfg.k_utt, head_rng);
  return m;
}

// ---------------------------------------------------------------------------
// Per-example loss and prediction
// ---------------------------------------------------------------------------

template <typename S>
struct StepLoss {
  Tensor<S> loss;
  double conv_part = 0.0;
  double utt_part = 0.0;
};

template <typename S>
Tensor<S> retrieval_logits(const TaskModel<S>& model, const RetrievalPair& pair, bool train,
                           Rng& rng) {
  Tensor<S> pa = pool_max(model.encode(pair.doc_a, train, rng));
  Tensor<S> pb = pool_max(model.encode(pair.doc_b, train, rng));
  Tensor<S> feats =
      concat(std::vector<Tensor<S>>{pa, pb, absolute(sub(pa, pb)), mul(pa, pb)}, 0);
  return linear(feats, model.conv_head.weight, model.conv_head.bias);
}

template <typename S>
StepLoss<S> example_loss(const TaskModel<S>& model, const LoadedData& data, std::size_t idx,
                         bool train, Rng& rng) {
  StepLoss<S> out;
  const RunConfig& cfg = model.cfg;
  switch (cfg.task) {
    case TaskKind::conversations: {
      const EncodedConv& ex = data.convs[idx];
      Tensor<S> features = model.encode(ex.tokens, train, rng);
      Tensor<S> ce, bce;
      if (model.has_conv_head()) {
        Tensor<S> logits = conversation_logits(features, model.conv_head);
        ce = softmax_cross_entropy(logits, ex.targets.conversation_label);
        out.conv_part = static_cast<double>(ce.data()[0]);
      }
      if (model.has_utt_head()) {
        Tensor<S> logits = utterance_logits(features, ex.spans, model.utt_head);
        Tensor<S> targets = targets_tensor<S>(ex.targets.utterance_labels, cfg.k_utt);
        bce = sigmoid_bce(logits, targets);
        out.utt_part = static_cast<double>(bce.data()[0]);
      }
      if (cfg.paradigm == Paradigm::mtl) out.loss = add(ce, scale(bce, cfg.lambda_utt));
      else if (cfg.paradigm == Paradigm::stl_conv) out.loss = ce;
      else out.loss = bce;
      break;
    }
    case TaskKind::listops: {
      const auto& ex = data.listops[idx];
      Tensor<S> features = model.encode(listops_tokens(ex.expr), train, rng);
      Tensor<S> logits = conversation_logits(features, model.conv_head);
      out.loss = softmax_cross_entropy(logits, ex.label);
      out.conv_part = static_cast<double>(out.loss.data()[0]);
      break;
    }
    case TaskKind::text: {
      const auto& ex = data.text[idx];
      Tensor<S> features = model.encode(ex.bytes, train, rng);
      Tensor<S> logits = conversation_logits(features, model.conv_head);
      out.loss = softmax_cross_entropy(logits, ex.label);
      out.conv_part = static_cast<double>(out.loss.data()[0]);
      break;
    }
    case TaskKind::retrieval: {
      const auto& ex = data.retrieval[idx];
      Tensor<S> logits = retrieval_logits(model, ex, train, rng);
      out.loss = softmax_cross_entropy(logits, ex.match);
      out.conv_part = static_cast<double>(out.loss.data()[0]);
      break;
    }
  }
  return out;
}

struct EvalMetrics {
  double conv_f1 = std::nan("");
  double utt_f1 = std::nan("");
  double acc = std::nan("");
};

template <typename S>
EvalMetrics evaluate_split(const TaskModel<S>& model, const LoadedData& data,
                           const std::vector<std::size_t>& indices) {
  const RunConfig& cfg = model.cfg;
  Rng rng(0);  // eval path never draws from it
  EvalMetrics metrics;
  if (cfg.task == TaskKind::conversations) {
    std::vector<int> conv_preds, conv_golds;
    std::vector<std::vector<int>> utt_preds, utt_golds;
    for (std::size_t idx : indices) {
      const EncodedConv& ex = data.convs[idx];
      Tensor<S> features = model.encode(ex.tokens, false, rng);
      if (model.has_conv_head()) {
        Tensor<S> logits = conversation_logits(features, model.conv_head);
        conv_preds.push_back(decide_multiclass(logits));
        conv_golds.push_back(ex.targets.conversation_label);
      }
      if (model.has_utt_head()) {
        Tensor<S> logits = utterance_logits(features, ex.spans, model.utt_head);
        for (std::size_t s = 0; s < ex.spans.size(); ++s) {
          Tensor<S> row = Tensor<S>::zeros({static_cast<std::int64_t>(cfg.k_utt)});
          for (int k = 0; k < cfg.k_utt; ++k)
            row.data()[k] = logits.data()[static_cast<std::int64_t>(s) * cfg.k_utt + k];
          utt_preds.push_back(decide_multilabel(row, cfg.threshold));
          std::vector<int> gold;
          for (int k = 0; k < cfg.k_utt; ++k)
            if (ex.targets.utterance_labels[s][static_cast<std::size_t>(k)]) gold.push_back(k);
          utt_golds.push_back(std::move(gold));
        }
      }
    }
    if (!conv_preds.empty()) {
      metrics.conv_f1 = macro_f1(conv_preds, conv_golds, cfg.k_conv);
      metrics.acc = accuracy(conv_preds, conv_golds);
    }
    if (!utt_preds.empty()) metrics.utt_f1 = macro_f1(utt_preds, utt_golds, cfg.k_utt);
    return metrics;
  }
  std::vector<int> preds, golds;
  for (std::size_t idx : indices) {
    if (cfg.task == TaskKind::retrieval) {
      const auto& ex = data.retrieval[idx];
      preds.push_back(decide_multiclass(retrieval_logits(model, ex, false, rng)));
      golds.push_back(ex.match);
    } else {
      const std::vector<int>& ids = cfg.task == TaskKind::listops
                                        ? listops_tokens(data.listops[idx].expr)
                                        : data.text[idx].bytes;
      Tensor<S> features = model.encode(ids, false, rng);
      preds.push_back(decide_multiclass(conversation_logits(features, model.conv_head)));
      golds.push_back(cfg.task == TaskKind::listops ? data.listops[idx].label
                                                    : data.text[idx].label);
    }
  }
  metrics.acc = accuracy(preds, golds);
  return metrics;
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw HarnessError("cannot open " + path);
  os << "step,loss_conv,loss_utt,lr\n";
  char buf[160];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(p.step), p.loss_conv, p.loss_utt, p.lr);
    os << buf;
  }
}

template <typename S>
void emit_reports(const RunConfig& cfg, const TaskModel<S>& model, const EvalMetrics& metrics,
                  double steps_per_sec, std::int64_t peak_bytes, const std::string& out_dir,
                  TrainOutcome& outcome) {
  outcome.conv_f1 = metrics.conv_f1;
  outcome.utt_f1 = metrics.utt_f1;
  outcome.acc = metrics.acc;
  const double flops_g = model.encoder_flops(task_max_len(cfg)).total_g();
  const std::string report_path = out_dir + "/report.csv";
  auto make_row = [&](const std::string& task, double quality) {
    BenchReport r;
    r.task = task;
    r.model = to_string(cfg.model);
    r.quality = quality;
    r.flops_g = flops_g;
    r.steps_per_sec = steps_per_sec;
    r.peak_bytes = peak_bytes;
    r.params = model.param_count();
    r.seed = cfg.seed;
    return r;
  };
  if (cfg.task == TaskKind::conversations) {
    if (model.has_conv_head()) {
      outcome.report = make_row("conversations-conv", metrics.conv_f1);
      append_report_csv(report_path, outcome.report);
    }
    if (model.has_utt_head()) {
      BenchReport utt_row = make_row("conversations-utt", metrics.utt_f1);
      append_report_csv(report_path, utt_row);
      if (!model.has_conv_head()) outcome.report = utt_row;
    }
  } else {
    outcome.report = make_row(to_string(cfg.task), metrics.acc);
    append_report_csv(report_path, outcome.report);
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

template <typename S>
TrainOutcome run_training_impl(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  {
    std::ofstream os(out_dir + "/resolved_config.json");
    json j = config_to_json(cfg);
    if (cfg.model != ModelKind::full_attention) {
      const DualTowerConfig rc = resolve_cnn_config(cfg);
      json resolved;
      resolved["embedding_dim"] = rc.embedding_dim;
      resolved["vocab"] = rc.vocab_size;
      resolved["max_len"] = task_max_len(cfg);
      std::vector<std::int64_t> kernels;
      for (const auto& tw : rc.towers) kernels.push_back(tw.layers[0].kernel_size);
      resolved["kernels"] = kernels;
      j["resolved"] = resolved;
    } else {
      j["resolved"] = {{"max_len", task_max_len(cfg)},
                       {"vocab", task_vocab(cfg)},
                       {"model_dim", cfg.architecture.model_dim}};
    }
    os << j.dump(2) << '\n';
  }

  const LoadedData data = load_data(cfg);
  TaskModel<S> model = build_model<S>(cfg);
  auto params = model.parameters();

  ScheduleConfig sched;
  sched.total_steps = cfg.total_steps;
  sched.kind = cfg.optimizer.schedule == "one_cycle" ? ScheduleKind::one_cycle
                                                     : ScheduleKind::warmup_linear;
  sched.max_lr = cfg.optimizer.max_lr;
  sched.warmup_fraction = cfg.optimizer.warmup_fraction;
  sched.div_factor = cfg.optimizer.div_factor;
  sched.final_div_factor = cfg.optimizer.final_div_factor;

  std::optional<Sgd<S>> sgd;
  std::optional<Adam<S>> adam;
  if (cfg.optimizer.kind == "sgd")
    sgd.emplace(cfg.optimizer.momentum, cfg.optimizer.weight_decay);
  else
    adam.emplace(cfg.optimizer.beta1, cfg.optimizer.beta2, cfg.optimizer.eps,
                 cfg.optimizer.weight_decay);

  Rng batch_rng = Rng(cfg.seed).fork(0xBA7C4);
  Rng drop_rng = Rng(cfg.seed).fork(0xD607);

  TrainOutcome outcome;
  outcome.trace.reserve(static_cast<std::size_t>(cfg.total_steps));
  MemoryTracker::instance().reset_peak();
  const auto t0 = std::chrono::steady_clock::now();

  for (std::int64_t step = 0; step < cfg.total_steps; ++step) {
    try {
      const double lr = schedule_lr(step, sched);
      Tape<S> tape;
      TapeScope<S> scope(tape);
      Tensor<S> total;
      double conv_sum = 0.0, utt_sum = 0.0;
      for (std::int64_t b = 0; b < cfg.batch_size; ++b) {
        const std::size_t idx = data.train_idx[static_cast<std::size_t>(
            batch_rng.uniform_int(0, static_cast<std::int64_t>(data.train_idx.size())))];
        StepLoss<S> sl = example_loss(model, data, idx, true, drop_rng);
        conv_sum += sl.conv_part;
        utt_sum += sl.utt_part;
        total = total.defined() ? add(total, sl.loss) : sl.loss;
      }
      Tensor<S> loss = scale(total, 1.0 / static_cast<double>(cfg.batch_size));
      const double loss_value = static_cast<double>(loss.data()[0]);
      if (!std::isfinite(loss_value))
        throw HarnessError("non-finite loss at step " + std::to_string(step));
      for (auto& p : params) p.zero_grad();
      backward(tape, loss);
      if (sgd) sgd->step(params, lr);
      else adam->step(params, lr);
      outcome.trace.push_back({step, conv_sum / static_cast<double>(cfg.batch_size),
                               utt_sum / static_cast<double>(cfg.batch_size), lr});
    } catch (const TensorError& e) {
      throw HarnessError("aborted at step " + std::to_string(step) + ": " + e.what());
    } catch (const OptimError& e) {
      throw HarnessError("aborted at step " + std::to_string(step) + ": " + e.what());
    }
  }

  const auto t1 = std::chrono::steady_clock::now();
  const double train_secs = std::chrono::duration<double>(t1 - t0).count();
  const double steps_per_sec =
      static_cast<double>(cfg.total_steps) / std::max(train_secs, 1e-12);
  const std::int64_t peak_bytes = MemoryTracker::instance().peak_bytes();

  const EvalMetrics metrics = evaluate_split(model, data, data.test_idx);

  outcome.checkpoint_path = out_dir + "/checkpoint.lcv";
  save_model(outcome.checkpoint_path, model.named_parameters());
  write_trace_csv(out_dir + "/trace.csv", outcome.trace);
  emit_reports(cfg, model, metrics, steps_per_sec, peak_bytes, out_dir, outcome);
  return outcome;
}

}  // namespace

TrainOutcome run_training(const RunConfig& cfg, const std::string& out_dir) {
  return cfg.precision == Precision::f32 ? run_training_impl<float>(cfg, out_dir)
                                         : run_training_impl<double>(cfg, out_dir);
}

TrainOutcome evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path) {
  const LoadedData data = load_data(cfg);
  TrainOutcome outcome;
  if (cfg.precision == Precision::f32) {
    TaskModel<float> model = build_model<float>(cfg);
    auto named = model.named_parameters();
    load_entries(read_checkpoint(checkpoint_path), named);
    const EvalMetrics m = evaluate_split(model, data, data.test_idx);
    outcome.conv_f1 = m.conv_f1;
    outcome.utt_f1 = m.utt_f1;
    outcome.acc = m.acc;
  } else {
    TaskModel<double> model = build_model<double>(cfg);
    auto named = model.named_parameters();
    load_entries(read_checkpoint(checkpoint_path), named);
    const EvalMetrics m = evaluate_split(model, data, data.test_idx);
    outcome.conv_f1 = m.conv_f1;
    outcome.utt_f1 = m.utt_f1;
    outcome.acc = m.acc;
  }
  outcome.checkpoint_path = checkpoint_path;
  return outcome;
}

// ---------------------------------------------------------------------------
// Seed sweeps, appendix-style mean (+/- sd)
// ---------------------------------------------------------------------------

std::string format_mean_sd(double mean_pct, double sd_pct) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.1f (±%.1f)", mean_pct, sd_pct);
  return buf;
}

namespace {

SweepStat make_stat(const std::string& metric, const std::vector<double>& values) {
  SweepStat stat;
  stat.metric = metric;
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  // Sample standard deviation across seeds.
  const double sd = values.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
  stat.mean = mean;
  stat.sd = sd;
  stat.formatted = format_mean_sd(100.0 * mean, 100.0 * sd);
  return stat;
}

}  // namespace

SweepOutcome run_seed_sweep(const RunConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  SweepOutcome sweep;
  for (int i = 0; i < cfg.n_seeds; ++i) {
    RunConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed + static_cast<std::uint64_t>(i);
    sweep.runs.push_back(
        run_training(run_cfg, out_dir + "/seed_" + std::to_string(run_cfg.seed)));
  }
  auto collect = [&](const std::string& metric, auto getter) {
    std::vector<double> values;
    for (const auto& run : sweep.runs) {
      const double v = getter(run);
      if (!std::isnan(v)) values.push_back(v);
    }
    if (!values.empty()) sweep.stats.push_back(make_stat(metric, values));
  };
  collect("conv_f1", [](const TrainOutcome& o) { return o.conv_f1; });
  collect("utt_f1", [](const TrainOutcome& o) { return o.utt_f1; });
  collect("acc", [](const TrainOutcome& o) { return o.acc; });

  std::ofstream os(out_dir + "/sweep.csv", std::ios::trunc);
  os << "task,model,metric,n_seeds,mean,sd,formatted\n";
  for (const auto& stat : sweep.stats) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%.6f,%.6f,%s\n", to_string(cfg.task).c_str(),
                  to_string(cfg.model).c_str(), stat.metric.c_str(), cfg.n_seeds, stat.mean,
                  stat.sd, stat.formatted.c_str());
    os << buf;
  }
  return sweep;
}

// ---------------------------------------------------------------------------
// Kernel-size ablation (single-tower retrieval configs)
// ---------------------------------------------------------------------------

namespace {

DualTowerConfig ablation_cnn_config(const RunConfig& base, std::int64_t k) {
  // Mirrors the published sweep: dilations step up at k >= 257, the k=17
  // point uses the smaller second-layer filter bank.
  const std::vector<std::int64_t> dilations = k >= 257 ? std::vector<std::int64_t>{2, 4}
                                                       : std::vector<std::int64_t>{1, 2};
  const std::vector<std::int64_t> filters = k == 17 ? std::vector<std::int64_t>{32, 48}
                                                    : std::vector<std::int64_t>{32, 64};
  const std::int64_t e =
      base.architecture.embedding_dim > 0 ? base.architecture.embedding_dim : 64;
  return DualTowerConfig::make(task_vocab(base), e, {k}, dilations, filters,
                               PaddingMode::bidirectional, base.architecture.dropout);
}

template <typename S>
std::pair<double, std::int64_t> measure_train_step(const DualTowerConfig& cnn_cfg,
                                                   std::uint64_t seed,
                                                   std::int64_t throughput_len) {
  DualTowerEncoder<S> encoder(cnn_cfg, seed);
  Rng head_rng = Rng(seed).fork(0x4EAD);
  AffineHead<S> head(4 * cnn_cfg.final_channels(), 2, head_rng);
  auto named = encoder.named_parameters();
  head.collect_params("head.conv", named);
  std::vector<Tensor<S>> params;
  for (auto& [name, t] : named) params.push_back(t);
  Sgd<S> opt(0.9, 0.0);
  Rng data_rng = Rng(seed).fork(0xDA7A);
  std::vector<int> doc_a(static_cast<std::size_t>(throughput_len));
  std::vector<int> doc_b(static_cast<std::size_t>(throughput_len));
  for (auto& t : doc_a) t = static_cast<int>(data_rng.uniform_int(0, 240));
  for (auto& t : doc_b) t = static_cast<int>(data_rng.uniform_int(0, 240));
  Rng drop_rng = Rng(seed).fork(0xD607);
  auto step = [&]() {
    Tape<S> tape;
    TapeScope<S> scope(tape);
    Tensor<S> pa = pool_max(encoder.encode(doc_a, true, drop_rng));
    Tensor<S> pb = pool_max(encoder.encode(doc_b, true, drop_rng));
    Tensor<S> feats =
        concat(std::vector<Tensor<S>>{pa, pb, absolute(sub(pa, pb)), mul(pa, pb)}, 0);
    Tensor<S> loss = softmax_cross_entropy(linear(feats, head.weight, head.bias), 1);
    for (auto& p : params) p.zero_grad();
    backward(tape, loss);
    opt.step(params, 1e-3);
  };
  const std::int64_t peak = track_peak_memory(step);
  const double rate = measure_throughput(step, 2, 1, 3);
  return {rate, peak};
}

}  // namespace

std::vector<AblationRow> run_ablation(const RunConfig& base,
                                      const std::vector<std::int64_t>& kernels,
                                      const std::string& out_dir, std::int64_t flops_len,
                                      std::int64_t throughput_len, std::int64_t train_steps) {
  if (kernels.empty()) throw ConfigError("ablation: kernel list must be nonempty");
  if (base.task != TaskKind::retrieval)
    throw ConfigError("task: ablation sweeps the retrieval task");
  fs::create_directories(out_dir);
  std::vector<AblationRow> rows;
  for (std::int64_t k : kernels) {
    const DualTowerConfig cnn_cfg = ablation_cnn_config(base, k);
    AblationRow row;
    row.kernel = k;
    row.receptive_field = receptive_field(cnn_cfg).final_rf;
    row.flops_g = 2.0 * count_flops(cnn_cfg, flops_len).total_g();  // two documents
    const auto [rate, peak] =
        base.precision == Precision::f64
            ? measure_train_step<double>(cnn_cfg, base.seed, throughput_len)
            : measure_train_step<float>(cnn_cfg, base.seed, throughput_len);
    row.steps_per_sec = rate;
    row.peak_bytes = peak;
    if (train_steps > 0) {
      RunConfig cfg = base;
      cfg.model = ModelKind::cnn_custom;
      cfg.total_steps = train_steps;
      cfg.architecture.kernels = {k};
      const auto& layers = cnn_cfg.towers[0].layers;
      cfg.architecture.dilations.clear();
      cfg.architecture.filters.clear();
      for (const auto& blk : layers) {
        cfg.architecture.dilations.push_back(blk.dilation);
        cfg.architecture.filters.push_back(blk.out_channels);
      }
      TrainOutcome outcome = run_training(cfg, out_dir + "/k_" + std::to_string(k));
      row.accuracy = outcome.acc;
    }
    rows.push_back(row);

    BenchReport report;
    report.task = "retrieval";
    report.model = "cnn_k" + std::to_string(k);
    report.quality = std::isnan(row.accuracy) ? 0.0 : row.accuracy;
    report.flops_g = row.flops_g;
    report.steps_per_sec = row.steps_per_sec;
    report.peak_bytes = row.peak_bytes;
    report.params = 0;
    report.seed = base.seed;
    append_report_csv(out_dir + "/report.csv", report);
  }

  std::ofstream os(out_dir + "/ablation.csv", std::ios::trunc);
  os << "k,receptive_field,flops_g,steps_per_sec,peak_bytes,accuracy\n";
  for (const auto& row : rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%lld,%lld,%.6f,%.4f,%lld,%s\n",
                  static_cast<long long>(row.kernel),
                  static_cast<long long>(row.receptive_field), row.flops_g, row.steps_per_sec,
                  static_cast<long long>(row.peak_bytes),
                  std::isnan(row.accuracy) ? ""
                                           : std::to_string(row.accuracy).c_str());
    os << buf;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Synthetic-input benchmarking
// ---------------------------------------------------------------------------

namespace {

template <typename S>
BenchRow bench_at_length(const RunConfig& cfg, std::int64_t seq_len, bool inference) {
  TaskModel<S> model = build_model<S>(cfg);
  auto params = model.parameters();
  Sgd<S> opt(0.9, 0.0);
  Rng data_rng = Rng(cfg.seed).fork(0xDA7A);
  Rng drop_rng = Rng(cfg.seed).fork(0xD607);
  const std::int64_t vocab = task_vocab(cfg);
  std::vector<int> ids(static_cast<std::size_t>(seq_len));
  for (auto& t : ids) t = static_cast<int>(data_rng.uniform_int(0, vocab));

  LoadedData synth;
  if (cfg.task == TaskKind::conversations) {
    EncodedConv ec;
    ec.tokens = ids;
    ec.tokens[0] = cfg.vocab_size;  // agent speaker token opens the first span
    std::int64_t start = 0;
    std::int64_t utt_index = 0;
    while (start < seq_len) {
      const std::int64_t end = std::min<std::int64_t>(seq_len, start + 32);
      ec.tokens[static_cast<std::size_t>(start)] =
          utt_index % 2 == 0 ? cfg.vocab_size : cfg.vocab_size + 1;
      ec.spans.push_back({start, end, utt_index++});
      std::vector<std::uint8_t> labels(static_cast<std::size_t>(cfg.k_utt), 0);
      labels[static_cast<std::size_t>(utt_index) % static_cast<std::size_t>(cfg.k_utt)] = 1;
      ec.targets.utterance_labels.push_back(std::move(labels));
      start = end;
    }
    ec.targets.conversation_label = 0;
    synth.convs.push_back(std::move(ec));
  } else if (cfg.task == TaskKind::listops) {
    ListOpsExample ex;
    ex.expr.assign(static_cast<std::size_t>(seq_len), '1');
    ex.label = 1;
    synth.listops.push_back(std::move(ex));
  } else if (cfg.task == TaskKind::text) {
    synth.text.push_back({ids, 0});
  } else {
    RetrievalPair pair;
    pair.doc_a = ids;
    pair.doc_b = ids;
    pair.match = 1;
    synth.retrieval.push_back(std::move(pair));
  }

  auto train_step = [&]() {
    Tape<S> tape;
    TapeScope<S> scope(tape);
    StepLoss<S> sl = example_loss(model, synth, 0, true, drop_rng);
    for (auto& p : params) p.zero_grad();
    backward(tape, sl.loss);
    opt.step(params, 1e-3);
  };

  BenchRow row;
  row.seq_len = seq_len;
  row.flops_g = model.encoder_flops(seq_len).total_g();
  row.peak_bytes = track_peak_memory(train_step);
  row.steps_per_sec = measure_throughput(train_step, 2, 1, 3);
  if (inference) {
    // Latency of a batch of 8 forward passes.
    auto fwd = [&]() {
      Rng eval_rng(0);
      for (int i = 0; i < 8; ++i) model.encode(ids, false, eval_rng);
    };
    const double rate = measure_throughput(fwd, 1, 1, 3);
    row.inference_latency_sec = 1.0 / rate;
  }
  return row;
}

}  // namespace

std::vector<BenchRow> run_bench(const RunConfig& cfg, const std::vector<std::int64_t>& seq_lens,
                                bool inference, const std::string& out_dir) {
  if (seq_lens.empty()) throw ConfigError("bench: sequence length list must be nonempty");
  fs::create_directories(out_dir);
  std::vector<BenchRow> rows;
  for (std::int64_t t_len : seq_lens) {
    rows.push_back(cfg.precision == Precision::f64
                       ? bench_at_length<double>(cfg, t_len, inference)
                       : bench_at_length<float>(cfg, t_len, inference));
  }
  std::ofstream os(out_dir + "/bench.csv", std::ios::trunc);
  os << "task,model,seq_len,flops_g,steps_per_sec,peak_bytes,inference_latency_sec\n";
  for (const auto& row : rows) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%.6f,%.4f,%lld,%s\n",
                  to_string(cfg.task).c_str(), to_string(cfg.model).c_str(),
                  static_cast<long long>(row.seq_len), row.flops_g, row.steps_per_sec,
                  static_cast<long long>(row.peak_bytes),
                  std::isnan(row.inference_latency_sec)
                      ? ""
                      : std::to_string(row.inference_latency_sec).c_str());
    os << buf;
  }
  return rows;
}

}  // namespace longconv
