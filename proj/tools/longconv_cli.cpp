// Experiment driver CLI: data generation, training (STL/MTL), evaluation,
// efficiency benchmarking, and the retrieval kernel-size ablation.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "longconv/datagen.hpp"
#include "longconv/harness.hpp"

namespace lc = longconv;

namespace {

void cmd_gen_data(const std::string& task, const std::string& out_path, std::uint64_t seed,
                  int n, const lc::GeneratorSpec& conv_spec, const lc::ListOpsSpec& listops_spec,
                  const lc::TextSpec& text_spec, const lc::RetrievalSpec& retrieval_spec) {
  nlohmann::ordered_json oracle;
  oracle["task"] = task;
  oracle["seed"] = seed;
  if (task == "conversations") {
    lc::GeneratorSpec spec = conv_spec;
    spec.seed = seed;
    spec.n_conversations = n;
    const auto corpus = lc::gen_conversations(spec);
    lc::write_conversations_jsonl(out_path, corpus);
    lc::PlantOracle po(spec);
    oracle["conv_patterns"] = nlohmann::ordered_json::array();
    for (int c = 0; c < spec.k_conv; ++c) oracle["conv_patterns"].push_back(po.conv_pattern(c));
    oracle["utt_patterns"] = nlohmann::ordered_json::array();
    for (int a = 0; a < spec.k_utt; ++a) oracle["utt_patterns"].push_back(po.utt_pattern(a));
    std::cout << "wrote " << corpus.size() << " conversations to " << out_path << "\n";
  } else if (task == "listops") {
    lc::ListOpsSpec spec = listops_spec;
    spec.seed = seed;
    spec.n = n;
    const auto corpus = lc::gen_listops(spec);
    lc::write_listops_jsonl(out_path, corpus);
    std::cout << "wrote " << corpus.size() << " listops expressions to " << out_path << "\n";
  } else if (task == "text") {
    lc::TextSpec spec = text_spec;
    spec.seed = seed;
    spec.n = n;
    if (spec.motifs.empty()) spec.motifs = lc::TextSpec::default_motifs(seed);
    const auto corpus = lc::gen_text_bytes(spec);
    lc::write_text_jsonl(out_path, corpus);
    oracle["motifs"] = spec.motifs;
    std::cout << "wrote " << corpus.size() << " text examples to " << out_path << "\n";
  } else if (task == "retrieval") {
    lc::RetrievalSpec spec = retrieval_spec;
    spec.seed = seed;
    spec.n = n;
    const auto corpus = lc::gen_retrieval(spec);
    lc::write_retrieval_jsonl(out_path, corpus);
    oracle["n_topics"] = spec.n_topics;
    oracle["signature_count"] = spec.signature_count;
    std::cout << "wrote " << corpus.size() << " retrieval pairs to " << out_path << "\n";
  } else {
    throw lc::ConfigError("task: must be one of conversations|listops|text|retrieval");
  }
  std::ofstream os(out_path + ".oracle.json");
  os << oracle.dump(2) << '\n';
}

void print_outcome(const lc::TrainOutcome& outcome) {
  if (!std::isnan(outcome.conv_f1))
    std::printf("conversation macro-F1: %.4f\n", outcome.conv_f1);
  if (!std::isnan(outcome.utt_f1)) std::printf("utterance macro-F1:   %.4f\n", outcome.utt_f1);
  if (!std::isnan(outcome.acc)) std::printf("accuracy:             %.4f\n", outcome.acc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"longconv: dual-tower TCN long-sequence toolkit"};
  app.require_subcommand(1);

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic task corpus (JSONL)");
  std::string gen_task = "conversations";
  std::string gen_out = "data.jsonl";
  std::uint64_t gen_seed = 1;
  int gen_n = 1000;
  lc::GeneratorSpec conv_spec;
  lc::ListOpsSpec listops_spec;
  lc::TextSpec text_spec;
  lc::RetrievalSpec retrieval_spec;
  gen->add_option("--task", gen_task, "conversations|listops|text|retrieval");
  gen->add_option("--out", gen_out, "output JSONL path");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--n", gen_n, "number of examples");
  gen->add_option("--k-conv", conv_spec.k_conv, "conversation label count");
  gen->add_option("--k-utt", conv_spec.k_utt, "utterance label count");
  gen->add_option("--vocab", conv_spec.vocab_size, "vocabulary size");
  gen->add_option("--mean-len", conv_spec.mean_len, "mean sequence length");
  gen->add_option("--sd-len", conv_spec.sd_len, "sequence length stddev");
  gen->add_option("--max-len", conv_spec.max_len, "max sequence length");
  gen->add_option("--plant-density", conv_spec.utt_plant_density,
                  "fraction of utterances carrying actions");
  gen->add_option("--zipf", conv_spec.zipf_s, "action label frequency skew");
  gen->add_option("--max-depth", listops_spec.max_depth, "listops nesting depth");
  gen->add_option("--max-args", listops_spec.max_args, "listops operator arity");
  gen->add_option("--expr-len", listops_spec.max_len, "listops expression length budget");
  gen->add_option("--text-mean-len", text_spec.mean_len, "text mean length");
  gen->add_option("--text-sd-len", text_spec.sd_len, "text length stddev");
  gen->add_option("--doc-len", retrieval_spec.doc_len, "retrieval document length");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model from a config file");
  std::string train_config;
  std::string train_out = "runs/latest";
  std::int64_t train_seed = -1;
  std::string train_precision;
  train->add_option("--config", train_config, "run config JSON")->required();
  train->add_option("--out-dir", train_out, "output directory");
  train->add_option("--seed", train_seed, "override config seed");
  train->add_option("--precision", train_precision, "f32|f64 override");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  std::string eval_config, eval_checkpoint;
  eval->add_option("--config", eval_config, "run config JSON")->required();
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint path")->required();

  // ---- bench ----
  auto* bench = app.add_subcommand("bench", "profile FLOPs / speed / memory on synthetic input");
  std::string bench_config;
  std::string bench_out = "runs/bench";
  std::vector<std::int64_t> bench_lens{512, 1024, 2048, 4096};
  bool bench_inference = false;
  bench->add_option("--config", bench_config, "run config JSON")->required();
  bench->add_option("--out-dir", bench_out, "output directory");
  bench->add_option("--seq-lens", bench_lens, "sequence lengths to profile");
  bench->add_flag("--inference", bench_inference, "also measure batch-of-8 forward latency");

  // ---- ablate ----
  auto* ablate = app.add_subcommand("ablate", "retrieval kernel-size ablation sweep");
  std::string ablate_config;
  std::string ablate_out = "runs/ablation";
  std::vector<std::int64_t> ablate_kernels{17, 21, 65, 129, 257, 513};
  std::int64_t ablate_train_steps = 0;
  std::int64_t ablate_flops_len = 4096;
  std::int64_t ablate_tp_len = 1024;
  ablate->add_option("--config", ablate_config, "run config JSON (task=retrieval)")->required();
  ablate->add_option("--out-dir", ablate_out, "output directory");
  ablate->add_option("--kernels", ablate_kernels, "kernel sizes to sweep");
  ablate->add_option("--train-steps", ablate_train_steps,
                     "per-kernel training steps for the accuracy column (0 = skip)");
  ablate->add_option("--flops-len", ablate_flops_len, "per-document length for the FLOPs column");
  ablate->add_option("--throughput-len", ablate_tp_len, "document length for speed measurement");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cmd_gen_data(gen_task, gen_out, gen_seed, gen_n, conv_spec, listops_spec, text_spec,
                   retrieval_spec);
    } else if (train->parsed()) {
      lc::RunConfig cfg = lc::load_run_config(train_config);
      if (train_seed >= 0) cfg.seed = static_cast<std::uint64_t>(train_seed);
      if (!train_precision.empty()) {
        if (train_precision == "f32") cfg.precision = lc::Precision::f32;
        else if (train_precision == "f64") cfg.precision = lc::Precision::f64;
        else throw lc::ConfigError("precision: must be f32 or f64");
      }
      if (cfg.n_seeds > 1) {
        const auto sweep = lc::run_seed_sweep(cfg, train_out);
        for (const auto& stat : sweep.stats)
          std::printf("%-8s %s\n", stat.metric.c_str(), stat.formatted.c_str());
      } else {
        const auto outcome = lc::run_training(cfg, train_out);
        print_outcome(outcome);
        std::printf("steps/sec: %.3f  peak bytes: %lld  checkpoint: %s\n",
                    outcome.report.steps_per_sec,
                    static_cast<long long>(outcome.report.peak_bytes),
                    outcome.checkpoint_path.c_str());
      }
    } else if (eval->parsed()) {
      lc::RunConfig cfg = lc::load_run_config(eval_config);
      print_outcome(lc::evaluate_checkpoint(cfg, eval_checkpoint));
    } else if (bench->parsed()) {
      lc::RunConfig cfg = lc::load_run_config(bench_config);
      const auto rows = lc::run_bench(cfg, bench_lens, bench_inference, bench_out);
      for (const auto& row : rows)
        std::printf("T=%-6lld flops %.4f G  %.3f steps/s  peak %lld bytes\n",
                    static_cast<long long>(row.seq_len), row.flops_g, row.steps_per_sec,
                    static_cast<long long>(row.peak_bytes));
    } else if (ablate->parsed()) {
      lc::RunConfig cfg = lc::load_run_config(ablate_config);
      const auto rows = lc::run_ablation(cfg, ablate_kernels, ablate_out, ablate_flops_len,
                                         ablate_tp_len, ablate_train_steps);
      for (const auto& row : rows)
        std::printf("k=%-4lld rf %-6lld flops %.4f G  %.3f steps/s  peak %lld bytes\n",
                    static_cast<long long>(row.kernel),
                    static_cast<long long>(row.receptive_field), row.flops_g, row.steps_per_sec,
                    static_cast<long long>(row.peak_bytes));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
