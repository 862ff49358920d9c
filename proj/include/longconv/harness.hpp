#pragma once

// Experiment driver: declarative run configs, training/evaluation for every
// task, seed sweeps with mean +/- sd reporting, benchmarking, and the
// retrieval kernel-size ablation. One training run per process.

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "longconv/datagen.hpp"
#include "longconv/profiler.hpp"
#include "longconv/tcn.hpp"

namespace longconv {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TaskKind { conversations, listops, text, retrieval };
enum class ModelKind { cnn_large, cnn_small, cnn_custom, full_attention };
enum class Paradigm { mtl, stl_conv, stl_utt };
enum class Precision { f32, f64 };

std::string to_string(TaskKind t);
std::string to_string(ModelKind m);
std::string to_string(Paradigm p);
std::string to_string(Precision p);

struct OptimizerConfig {
  std::string kind = "sgd";            // sgd | adam
  double max_lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::string schedule = "one_cycle";  // one_cycle | warmup_linear
  double warmup_fraction = 0.3;
  double div_factor = 25.0;
  double final_div_factor = 1e4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct ArchitectureConfig {
  std::int64_t embedding_dim = 0;  // 0 = model/task default
  double dropout = 0.1;
  std::string padding = "bidirectional";  // cnn: bidirectional | causal
  // cnn_custom (empty = task's built-in CNN config):
  std::vector<std::int64_t> kernels;    // one entry per tower
  std::vector<std::int64_t> dilations;  // one entry per layer
  std::vector<std::int64_t> filters;    // one entry per layer
  // full_attention:
  std::int64_t layers = 2;
  std::int64_t model_dim = 64;
  std::int64_t heads = 2;
  std::int64_t ff_dim = 128;
  std::int64_t max_len = 0;  // 0 = task default
};

struct RunConfig {
  TaskKind task = TaskKind::conversations;
  ModelKind model = ModelKind::cnn_small;
  Paradigm paradigm = Paradigm::mtl;
  std::uint64_t seed = 1;
  std::int64_t total_steps = 100;
  std::int64_t batch_size = 16;
  Precision precision = Precision::f32;
  double lambda_utt = 1.0;
  double threshold = 0.5;  // multi-label decision threshold
  int n_seeds = 1;
  std::string data_path;
  // Label/vocab geometry of the conversations corpus.
  int k_conv = 10;
  int k_utt = 30;
  int vocab_size = 256;
  OptimizerConfig optimizer;
  ArchitectureConfig architecture;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);

// Task conventions shared by models and the profiler.
std::int64_t task_max_len(const RunConfig& cfg);
std::int64_t task_vocab(const RunConfig& cfg);  // includes speaker specials
int task_classes(const RunConfig& cfg);

// Resolved encoder configuration for a CNN run (built-in tables for
// cnn_large / cnn_small / the per-task LRA configs, or the custom arrays).
DualTowerConfig resolve_cnn_config(const RunConfig& cfg);
AttentionConfig resolve_attention_config(const RunConfig& cfg);

struct TracePoint {
  std::int64_t step;
  double loss_conv;
  double loss_utt;
  double lr;
};

struct TrainOutcome {
  BenchReport report;
  double conv_f1 = std::nan("");
  double utt_f1 = std::nan("");
  double acc = std::nan("");
  std::vector<TracePoint> trace;
  std::string checkpoint_path;
};

// Trains, evaluates on the test split, writes checkpoint + report.csv +
// trace.csv + resolved_config.json under out_dir.
TrainOutcome run_training(const RunConfig& cfg, const std::string& out_dir);

struct SweepStat {
  std::string metric;
  double mean = 0.0;
  double sd = 0.0;
  std::string formatted;  // appendix style, e.g. "94.9 (+/-0.3)"
};

struct SweepOutcome {
  std::vector<TrainOutcome> runs;
  std::vector<SweepStat> stats;
};

// n_seeds runs with seeds seed, seed+1, ...; writes sweep.csv.
SweepOutcome run_seed_sweep(const RunConfig& cfg, const std::string& out_dir);

std::string format_mean_sd(double mean_pct, double sd_pct);

// Evaluates an existing checkpoint on the test split.
TrainOutcome evaluate_checkpoint(const RunConfig& cfg, const std::string& checkpoint_path);

struct AblationRow {
  std::int64_t kernel = 0;
  std::int64_t receptive_field = 0;
  double flops_g = 0.0;
  double steps_per_sec = 0.0;
  std::int64_t peak_bytes = 0;
  double accuracy = std::nan("");
};

// Single-tower retrieval config swept over kernel sizes. FLOPs counted at
// flops_len per document (x2 docs); throughput measured at throughput_len.
// train_steps > 0 additionally trains each point for an accuracy column.
std::vector<AblationRow> run_ablation(const RunConfig& base,
                                      const std::vector<std::int64_t>& kernels,
                                      const std::string& out_dir,
                                      std::int64_t flops_len = 4096,
                                      std::int64_t throughput_len = 1024,
                                      std::int64_t train_steps = 0);

struct BenchRow {
  std::int64_t seq_len = 0;
  double flops_g = 0.0;
  double steps_per_sec = 0.0;  // training steps (fwd+bwd+update)
  std::int64_t peak_bytes = 0;
  double inference_latency_sec = std::nan("");  // batch-of-8 forward, --inference
};

// Synthetic-input efficiency profile of the configured model.
std::vector<BenchRow> run_bench(const RunConfig& cfg, const std::vector<std::int64_t>& seq_lens,
                                bool inference, const std::string& out_dir);

}  // namespace longconv
