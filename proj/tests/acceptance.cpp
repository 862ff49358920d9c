// Acceptance suite: one pass/fail line per criterion. Exits nonzero if any
// criterion fails. Run with --only <n> to execute a single criterion.

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <regex>
#include <string>
#include <vector>

#include "longconv/attention.hpp"
#include "longconv/checkpoint.hpp"
#include "longconv/datagen.hpp"
#include "longconv/harness.hpp"
#include "longconv/heads.hpp"
#include "longconv/optim.hpp"
#include "longconv/profiler.hpp"
#include "longconv/tcn.hpp"
#include "testutil.hpp"

using namespace longconv;
namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw CheckFailure(what);
}

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list args;
  va_start(args, f);
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

// ---------------------------------------------------------------------------
// Criterion 1: gradient suite, >=100 randomized finite-difference cases per op
// ---------------------------------------------------------------------------

using lctest::gradcheck;
using lctest::rand_tensor;

// Keeps |values| >= margin so ReLU/abs kinks and pool ties stay away from the
// finite-difference step.
Tensor<double> rand_margin(Shape shape, Rng& rng, double margin = 5e-3) {
  auto t = rand_tensor<double>(std::move(shape), rng);
  for (std::int64_t i = 0; i < t.numel(); ++i) {
    double v = t.data()[i];
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
    t.data()[i] = v;
  }
  return t;
}

Tensor<double> rand_like_zero(const Tensor<double>& ref, std::int64_t used_cols) {
  return Tensor<double>::zeros({ref.dim(0), ref.dim(1) - used_cols});
}

Tensor<double> rand_gapped_rows(Shape shape, Rng& rng, double gap = 2e-3) {
  for (;;) {
    auto t = rand_tensor<double>(shape, rng);
    bool ok = true;
    const std::int64_t rows = shape[0], cols = shape[1];
    for (std::int64_t r = 0; r < rows && ok; ++r) {
      double top = -1e30, second = -1e30;
      for (std::int64_t c = 0; c < cols; ++c) {
        const double v = t.data()[r * cols + c];
        if (v > top) {
          second = top;
          top = v;
        } else if (v > second) {
          second = v;
        }
      }
      ok = cols < 2 || top - second > gap;
    }
    if (ok) return t;
  }
}

void criterion_gradients() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240811);
  const int cases = 100;

  auto run = [&](const char* op, const std::function<double()>& one_case) {
    double worst = 0.0;
    for (int i = 0; i < cases; ++i) worst = std::max(worst, one_case());
    require(worst < 1e-4, fmt("%s: max rel err %.3g >= 1e-4", op, worst));
    std::printf("    gradients %-22s %d cases, max rel err %.2e\n", op, cases, worst);
  };

  run("conv1d", [&]() {
    const std::int64_t ci = rng.uniform_int(1, 4), co = rng.uniform_int(1, 4);
    const std::int64_t k = rng.uniform_int(1, 4), d = rng.uniform_int(1, 3);
    const std::int64_t pl = rng.uniform_int(0, 4), pr = rng.uniform_int(0, 4);
    const std::int64_t t_len =
        std::max<std::int64_t>(1, (k - 1) * d + 1 - pl - pr) + rng.uniform_int(0, 5);
    auto x = rand_tensor<double>({ci, t_len}, rng);
    auto w = rand_tensor<double>({co, ci, k}, rng);
    auto b = rand_tensor<double>({co}, rng);
    const std::int64_t t_out = t_len + pl + pr - (k - 1) * d;
    auto c = rand_tensor<double>({co, t_out}, rng);
    return gradcheck({x, w, b},
                     [&]() { return sum(mul(conv1d(x, w, b, d, Pad{pl, pr}), c)); });
  });

  run("embed", [&]() {
    const std::int64_t v = rng.uniform_int(2, 8), e = rng.uniform_int(1, 5);
    const std::int64_t t_len = rng.uniform_int(1, 7);
    auto table = rand_tensor<double>({v, e}, rng);
    std::vector<int> ids;
    for (std::int64_t i = 0; i < t_len; ++i)
      ids.push_back(static_cast<int>(rng.uniform_int(0, v)));
    auto c = rand_tensor<double>({e, t_len}, rng);
    return gradcheck({table}, [&]() { return sum(mul(embed(table, ids), c)); });
  });

  run("linear.vec", [&]() {
    const std::int64_t di = rng.uniform_int(1, 6), dout = rng.uniform_int(1, 6);
    auto x = rand_tensor<double>({di}, rng);
    auto w = rand_tensor<double>({dout, di}, rng);
    auto b = rand_tensor<double>({dout}, rng);
    auto c = rand_tensor<double>({dout}, rng);
    return gradcheck({x, w, b}, [&]() { return sum(mul(linear(x, w, b), c)); });
  });

  run("linear.mat", [&]() {
    const std::int64_t n = rng.uniform_int(1, 5);
    const std::int64_t di = rng.uniform_int(1, 5), dout = rng.uniform_int(1, 5);
    auto x = rand_tensor<double>({n, di}, rng);
    auto w = rand_tensor<double>({dout, di}, rng);
    auto b = rand_tensor<double>({dout}, rng);
    auto c = rand_tensor<double>({n, dout}, rng);
    return gradcheck({x, w, b}, [&]() { return sum(mul(linear(x, w, b), c)); });
  });

  run("relu", [&]() {
    auto x = rand_margin({rng.uniform_int(1, 4), rng.uniform_int(1, 6)}, rng);
    auto c = rand_tensor<double>(x.shape(), rng);
    return gradcheck({x}, [&]() { return sum(mul(relu(x), c)); });
  });

  run("sigmoid", [&]() {
    auto x = rand_tensor<double>({rng.uniform_int(1, 8)}, rng, -3, 3);
    auto c = rand_tensor<double>(x.shape(), rng);
    return gradcheck({x}, [&]() { return sum(mul(sigmoid(x), c)); });
  });

  run("dropout", [&]() {
    auto x = rand_tensor<double>({rng.uniform_int(2, 6), rng.uniform_int(1, 5)}, rng);
    auto c = rand_tensor<double>(x.shape(), rng);
    const std::uint64_t mask_seed = rng.next_u64();
    return gradcheck({x}, [&]() {
      Rng drng(mask_seed);  // same mask on every evaluation
      return sum(mul(dropout(x, 0.4, true, drng), c));
    });
  });

  run("add/sub/mul/scale/abs", [&]() {
    auto a = rand_margin({rng.uniform_int(1, 5)}, rng);
    auto b = rand_margin(a.shape(), rng);
    auto c = rand_tensor<double>(a.shape(), rng);
    return gradcheck({a, b}, [&]() {
      auto mixed = add(mul(a, b), sub(scale(absolute(a), 0.7), b));
      return sum(mul(mixed, c));
    });
  });

  run("concat.axis0", [&]() {
    const std::int64_t t_len = rng.uniform_int(1, 5);
    auto a = rand_tensor<double>({rng.uniform_int(1, 4), t_len}, rng);
    auto b = rand_tensor<double>({rng.uniform_int(1, 4), t_len}, rng);
    auto c = rand_tensor<double>({a.dim(0) + b.dim(0), t_len}, rng);
    return gradcheck({a, b}, [&]() { return sum(mul(concat(a, b, 0), c)); });
  });

  run("concat.axis1", [&]() {
    const std::int64_t rows = rng.uniform_int(1, 4);
    auto a = rand_tensor<double>({rows, rng.uniform_int(1, 4)}, rng);
    auto b = rand_tensor<double>({rows, rng.uniform_int(1, 4)}, rng);
    auto c = rand_tensor<double>({rows, a.dim(1) + b.dim(1)}, rng);
    return gradcheck({a, b}, [&]() { return sum(mul(concat(a, b, 1), c)); });
  });

  run("pool_max", [&]() {
    const std::int64_t t_len = rng.uniform_int(2, 9);
    auto x = rand_gapped_rows({rng.uniform_int(1, 4), t_len}, rng);
    const std::int64_t start = rng.uniform_int(0, t_len - 1);
    const std::int64_t end = rng.uniform_int(start + 1, t_len + 1);
    auto c = rand_tensor<double>({x.dim(0)}, rng);
    return gradcheck({x}, [&]() {
      return sum(mul(pool_max(x, std::make_pair(start, end)), c));
    });
  });

  run("matmul", [&]() {
    const std::int64_t m = rng.uniform_int(1, 4), k = rng.uniform_int(1, 4),
                       n = rng.uniform_int(1, 4);
    auto a = rand_tensor<double>({m, k}, rng);
    auto b = rand_tensor<double>({k, n}, rng);
    auto c = rand_tensor<double>({m, n}, rng);
    return gradcheck({a, b}, [&]() { return sum(mul(matmul(a, b), c)); });
  });

  run("transpose/slice/stack", [&]() {
    const std::int64_t m = rng.uniform_int(2, 5), n = rng.uniform_int(2, 5);
    auto a = rand_tensor<double>({m, n}, rng);
    auto row1 = rand_tensor<double>({n}, rng);
    auto row2 = rand_tensor<double>({n}, rng);
    const std::int64_t c0 = rng.uniform_int(0, n - 1);
    const std::int64_t c1 = rng.uniform_int(c0 + 1, n + 1);
    auto c = rand_tensor<double>({2 + m, n}, rng);
    return gradcheck({a, row1, row2}, [&]() {
      auto sliced = slice_cols(transpose(transpose(a)), c0, c1);
      auto padded = concat(sliced, rand_like_zero(a, c1 - c0), 1);
      auto stacked = concat(stack_rows(std::vector<Tensor<double>>{row1, row2}), padded, 0);
      return sum(mul(stacked, c));
    });
  });

  run("row_softmax", [&]() {
    auto x = rand_tensor<double>({rng.uniform_int(1, 4), rng.uniform_int(2, 6)}, rng, -3, 3);
    auto c = rand_tensor<double>(x.shape(), rng);
    return gradcheck({x}, [&]() { return sum(mul(row_softmax(x), c)); });
  });

  run("layer_norm", [&]() {
    const std::int64_t n = rng.uniform_int(1, 4), d = rng.uniform_int(2, 6);
    auto x = rand_tensor<double>({n, d}, rng);
    auto g = rand_tensor<double>({d}, rng, 0.5, 1.5);
    auto b = rand_tensor<double>({d}, rng);
    auto c = rand_tensor<double>({n, d}, rng);
    return gradcheck({x, g, b}, [&]() { return sum(mul(layer_norm(x, g, b), c)); });
  });

  run("softmax_cross_entropy", [&]() {
    const std::int64_t k = rng.uniform_int(2, 8);
    auto z = rand_tensor<double>({k}, rng, -3, 3);
    const std::int64_t target = rng.uniform_int(0, k);
    return gradcheck({z}, [&]() { return softmax_cross_entropy(z, target); });
  });

  run("sigmoid_bce", [&]() {
    const std::int64_t n = rng.uniform_int(1, 3), k = rng.uniform_int(1, 6);
    auto z = rand_tensor<double>({n, k}, rng, -3, 3);
    auto t = Tensor<double>::zeros({n, k});
    for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return gradcheck({z}, [&]() { return sigmoid_bce(z, t); });
  });

  run("temporal_block", [&]() {
    TemporalBlockConfig cfg;
    cfg.kernel_size = rng.uniform_int(1, 4);
    cfg.dilation = rng.uniform_int(1, 3);
    cfg.in_channels = rng.uniform_int(1, 3);
    cfg.out_channels = rng.uniform_int(1, 3);
    cfg.dropout = 0.0;
    Rng init(rng.next_u64());
    TemporalBlock<double> block(cfg, init);
    const std::int64_t t_len = rng.uniform_int(3, 8);
    auto x = rand_margin({cfg.in_channels, t_len}, rng);
    auto c = rand_tensor<double>({cfg.out_channels, t_len}, rng);
    Rng drng(0);
    std::vector<Tensor<double>> inputs{x, block.w1, block.b1, block.w2, block.b2};
    if (block.w_skip.defined()) {
      inputs.push_back(block.w_skip);
      inputs.push_back(block.b_skip);
    }
    return gradcheck(inputs, [&]() { return sum(mul(block.forward(x, false, drng), c)); });
  });

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  require(secs < 120.0, fmt("gradient suite took %.1fs, budget is 120s", secs));
  std::printf("    gradient suite completed in %.1fs (< 120s budget)\n", secs);
}

// ---------------------------------------------------------------------------
// Criterion 2: receptive-field oracle
// ---------------------------------------------------------------------------

template <typename S>
void make_positive(DualTowerEncoder<S>& enc) {
  for (auto& [name, t] : enc.named_parameters())
    for (std::int64_t i = 0; i < t.numel(); ++i)
      t.data()[i] = static_cast<S>(std::abs(static_cast<double>(t.data()[i])) + 1e-3);
}

std::vector<int> ramp_ids(std::int64_t t_len, int vocab) {
  std::vector<int> ids(static_cast<std::size_t>(t_len));
  for (std::int64_t i = 0; i < t_len; ++i)
    ids[static_cast<std::size_t>(i)] = static_cast<int>((i * 13 + 5) % vocab);
  return ids;
}

template <typename S>
bool column_changes(const DualTowerEncoder<S>& enc, const std::vector<int>& base_ids,
                    const Tensor<S>& base_out, std::int64_t t, std::int64_t flip_pos, int vocab) {
  auto ids = base_ids;
  auto& tok = ids[static_cast<std::size_t>(flip_pos)];
  tok = (tok + 7) % vocab;
  Rng drng(0);
  const Tensor<S> out = enc.encode(ids, false, drng);
  const std::int64_t t_len = out.dim(1);
  for (std::int64_t c = 0; c < out.dim(0); ++c)
    if (out.data()[c * t_len + t] != base_out.data()[c * t_len + t]) return true;
  return false;
}

// Perturbation experiment: tokens within (rf-1)/2 of t must influence column
// t, tokens beyond must not (bitwise).
template <typename S>
void check_rf_by_perturbation(const DualTowerConfig& cfg, std::int64_t expected_rf, int vocab) {
  require(receptive_field(cfg).final_rf == expected_rf,
          fmt("analytic rf != expected %lld", static_cast<long long>(expected_rf)));
  DualTowerEncoder<S> enc(cfg, 97);
  make_positive(enc);
  const std::int64_t radius = (expected_rf - 1) / 2;
  const std::int64_t t_len = expected_rf + 20;
  const std::int64_t t = t_len / 2;
  const auto ids = ramp_ids(t_len, vocab);
  Rng drng(0);
  const Tensor<S> base = enc.encode(ids, false, drng);
  for (const std::int64_t offset : {-radius, radius})
    require(column_changes(enc, ids, base, t, t + offset, vocab),
            fmt("flip at +/-%lld (inside rf) left column unchanged",
                static_cast<long long>(radius)));
  for (const std::int64_t offset : {-(radius + 1), radius + 1})
    require(!column_changes(enc, ids, base, t, t + offset, vocab),
            fmt("flip at +/-%lld (outside rf) changed column",
                static_cast<long long>(radius + 1)));
}

void criterion_receptive_field() {
  // CNN_Large merged table and per-tower closed forms.
  const auto large = DualTowerConfig::make(258, 768, {11, 15}, {1, 2, 4, 8},
                                           {128, 256, 512, 1024});
  const auto rf = receptive_field(large);
  require(rf.final_rf == 421, "CNN_Large merged rf != 421");
  require(rf.per_tower_per_layer[0] == std::vector<std::int64_t>{21, 69, 165, 357},
          "CNN_Large tower-0 rf table mismatch");
  require(rf.per_tower_per_layer[1] == std::vector<std::int64_t>{29, 85, 197, 421},
          "CNN_Large tower-1 rf table mismatch");

  const auto tower11 = DualTowerConfig::make(258, 768, {11}, {1, 2, 4, 8},
                                             {128, 256, 512, 1024});
  const auto tower15 = DualTowerConfig::make(258, 768, {15}, {1, 2, 4, 8},
                                             {128, 256, 512, 1024});
  require(receptive_field(tower11).final_rf == 301, "k=11 tower alone rf != 301");
  require(receptive_field(tower15).final_rf == 421, "k=15 tower alone rf != 421");

  std::printf("    perturbation-checking CNN_Large towers (301 / 421) ...\n");
  check_rf_by_perturbation<float>(tower11, 301, 258);
  check_rf_by_perturbation<float>(tower15, 421, 258);
  std::printf("    perturbation-checking the full CNN_Large config (421) ...\n");
  check_rf_by_perturbation<float>(large, 421, 258);

  // Ten random configurations; odd kernels keep the padding symmetric so the
  // single-int field width has exact +/- (rf-1)/2 semantics.
  Rng rng(555);
  for (int i = 0; i < 10; ++i) {
    const std::int64_t n_towers = rng.uniform_int(1, 3);
    const std::int64_t layers = rng.uniform_int(1, 3);
    std::vector<std::int64_t> kernels, dilations, filters;
    for (std::int64_t tw = 0; tw < n_towers; ++tw)
      kernels.push_back(2 * rng.uniform_int(1, 4) + 1);  // 3/5/7
    for (std::int64_t l = 0; l < layers; ++l) {
      dilations.push_back(rng.uniform_int(1, 4));
      filters.push_back(rng.uniform_int(2, 6));
    }
    const auto cfg = DualTowerConfig::make(32, 4, kernels, dilations, filters,
                                           PaddingMode::bidirectional, 0.0);
    check_rf_by_perturbation<double>(cfg, receptive_field(cfg).final_rf, 32);
  }
  std::printf("    10 random configs match their analytic receptive fields exactly\n");

  // Bidirectional mode demonstrably uses future context; causal never does.
  const auto bi = DualTowerConfig::make(32, 6, {3, 5}, {1, 2}, {4, 4},
                                        PaddingMode::bidirectional, 0.0);
  DualTowerEncoder<double> bi_enc(bi, 7);
  make_positive(bi_enc);
  const auto ids = ramp_ids(30, 32);
  Rng drng(0);
  const auto bi_base = bi_enc.encode(ids, false, drng);
  require(column_changes(bi_enc, ids, bi_base, 10, 13, 32),
          "bidirectional mode ignored a future token inside the field");

  const auto causal = DualTowerConfig::make(32, 6, {3, 5}, {1, 2}, {4, 4},
                                            PaddingMode::causal, 0.0);
  DualTowerEncoder<double> causal_enc(causal, 7);
  make_positive(causal_enc);
  const auto causal_base = causal_enc.encode(ids, false, drng);
  for (std::int64_t future = 11; future < 30; ++future)
    require(!column_changes(causal_enc, ids, causal_base, 10, future, 32),
            "causal mode used future context");
}

// ---------------------------------------------------------------------------
// Criterion 3: cross-feed wiring
// ---------------------------------------------------------------------------

void criterion_cross_feed() {
  const auto cfg = DualTowerConfig::make(32, 6, {3, 5}, {1, 2}, {4, 6},
                                         PaddingMode::bidirectional, 0.0);
  DualTowerEncoder<double> enc(cfg, 3);
  make_positive(enc);
  const auto ids = ramp_ids(24, 32);
  Rng drng(0);

  // Tower A layer 2 consumes concat(A1, B1): zeroing B1 must change it.
  Tensor<double> e = embed(enc.embedding(), ids);
  const auto& blocks = enc.blocks();
  auto a1 = blocks[0][0].forward(e, false, drng);
  auto b1 = blocks[1][0].forward(e, false, drng);
  auto a2 = blocks[0][1].forward(concat(a1, b1, 0), false, drng);
  auto a2_cut = blocks[0][1].forward(concat(a1, Tensor<double>::zeros(b1.shape()), 0), false,
                                     drng);
  double delta = 0.0;
  for (std::int64_t i = 0; i < a2.numel(); ++i)
    delta = std::max(delta, std::abs(a2.data()[i] - a2_cut.data()[i]));
  require(delta > 0.0, "zeroing tower B layer 1 left tower A layer 2 unchanged");

  // Same probe through the encoder ablation hook on the final representation.
  const auto full = enc.encode(ids, false, drng);
  const TowerAblation cut{1, 0};
  const auto ablated = enc.encode(ids, false, drng, &cut);
  bool changed = false;
  for (std::int64_t i = 0; i < full.numel() && !changed; ++i)
    changed = full.data()[i] != ablated.data()[i];
  require(changed, "tower ablation did not reach the final representation");
  std::printf("    cross-feed carries tower B features into tower A (max delta %.3g)\n", delta);
}

// ---------------------------------------------------------------------------
// Criterion 4: efficiency ordering (Table 4 pattern)
// ---------------------------------------------------------------------------

RunConfig lra_text_cnn_run() {
  nlohmann::json j = {{"task", "text"}, {"model", "cnn_custom"}, {"seed", 1}};
  return parse_run_config(j);
}

RunConfig lra_text_attention_run() {
  nlohmann::json j = {{"task", "text"}, {"model", "full_attention"}, {"seed", 1}};
  return parse_run_config(j);
}

void criterion_efficiency() {
  const auto cnn_cfg = resolve_cnn_config(lra_text_cnn_run());
  const auto attn_cfg = resolve_attention_config(lra_text_attention_run());

  const auto cnn4096 = count_flops(cnn_cfg, 4096);
  const auto attn4096 = count_flops(attn_cfg, 4096);
  std::printf("    analytic FLOPs at T=4096: cnn %.3f G vs attention %.3f G\n",
              cnn4096.total_g(), attn4096.total_g());
  require(10 * cnn4096.total() <= attn4096.total(),
          "CNN FLOPs not <= 0.1x of full attention at T=4096");

  for (std::int64_t t : {512, 1024, 2048, 4096}) {
    require(count_flops(cnn_cfg, 2 * t).total() == 2 * count_flops(cnn_cfg, t).total(),
            "CNN FLOPs not exactly linear in T");
    require(count_flops(attn_cfg, 2 * t).attn_score == 4 * count_flops(attn_cfg, t).attn_score,
            "attention score FLOPs not exactly quadratic in T");
  }

  fs::create_directories("acceptance_out/bench");
  const auto cnn_rows = run_bench(lra_text_cnn_run(), {2048}, false, "acceptance_out/bench/cnn");
  const auto attn_rows =
      run_bench(lra_text_attention_run(), {2048}, false, "acceptance_out/bench/attn");
  std::printf("    measured at T=2048: cnn %.3f steps/s vs attention %.3f steps/s\n",
              cnn_rows[0].steps_per_sec, attn_rows[0].steps_per_sec);
  require(cnn_rows[0].steps_per_sec > attn_rows[0].steps_per_sec,
          "CNN did not train faster than attention at T=2048");
}

// ---------------------------------------------------------------------------
// Criterion 5: ablation monotonicity (Table 5 pattern)
// ---------------------------------------------------------------------------

void criterion_ablation() {
  nlohmann::json j = {{"task", "retrieval"}, {"model", "cnn_custom"}, {"seed", 1}};
  const auto base = parse_run_config(j);
  const std::vector<std::int64_t> kernels{17, 21, 65, 129, 257, 513};
  const auto rows = run_ablation(base, kernels, "acceptance_out/ablation", 4096, 1024, 0);
  require(rows.size() == kernels.size(), "ablation row count");
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::printf("    k=%-4lld rf=%-5lld flops=%.3f G  %.3f steps/s\n",
                static_cast<long long>(rows[i].kernel),
                static_cast<long long>(rows[i].receptive_field), rows[i].flops_g,
                rows[i].steps_per_sec);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    require(rows[i].flops_g > rows[i - 1].flops_g, "FLOPs not strictly increasing in k");
    require(rows[i].receptive_field > rows[i - 1].receptive_field,
            "receptive field not strictly increasing in k");
    require(rows[i].steps_per_sec <= rows[i - 1].steps_per_sec,
            fmt("steps/sec increased from k=%lld to k=%lld",
                static_cast<long long>(rows[i - 1].kernel),
                static_cast<long long>(rows[i].kernel)));
  }
  require(rows[0].flops_g > 0.95 && rows[0].flops_g < 1.05,
          "k=17 FLOPs should sit near the published 1.0 G");
}

// ---------------------------------------------------------------------------
// Criterion 6: learnability on the conversations generator
// ---------------------------------------------------------------------------

void criterion_learnability() {
  const auto t0 = std::chrono::steady_clock::now();
  GeneratorSpec spec;
  spec.seed = 11;
  spec.n_conversations = 2000;
  spec.k_conv = 10;
  spec.k_utt = 30;
  spec.vocab_size = 256;
  spec.mean_len = 200;
  spec.sd_len = 70;
  spec.max_len = 1024;
  spec.utt_plant_density = 0.9;
  spec.zipf_s = 0.0;
  const auto corpus = gen_conversations(spec);
  fs::create_directories("acceptance_out/learn");
  const std::string data_path = "acceptance_out/learn/conversations.jsonl";
  write_conversations_jsonl(data_path, corpus);

  // Majority-class baseline: constant conversation class, no utterance labels.
  std::vector<int> class_count(10, 0);
  std::vector<int> conv_golds;
  std::vector<std::vector<int>> utt_golds, utt_empty;
  for (const auto& conv : corpus) {
    const Split split = split_of(conv.id);
    if (split == Split::train) ++class_count[static_cast<std::size_t>(conv.conv_label)];
    if (split == Split::test) {
      conv_golds.push_back(conv.conv_label);
      for (const auto& utt : conv.utterances) {
        utt_golds.push_back(utt.labels);
        utt_empty.push_back({});
      }
    }
  }
  int majority = 0;
  for (int c = 1; c < 10; ++c)
    if (class_count[static_cast<std::size_t>(c)] > class_count[static_cast<std::size_t>(majority)])
      majority = c;
  const std::vector<int> conv_majority(conv_golds.size(), majority);
  const double conv_baseline = macro_f1(conv_majority, conv_golds, 10);
  const double utt_baseline = macro_f1(utt_empty, utt_golds, 30);
  std::printf("    majority baselines: conv %.4f, utt %.4f (must stay < 0.1)\n", conv_baseline,
              utt_baseline);
  require(conv_baseline < 0.1, "conversation majority baseline >= 0.1");
  require(utt_baseline < 0.1, "utterance majority baseline >= 0.1");

  nlohmann::json j = {
      {"task", "conversations"},
      {"model", "cnn_custom"},
      {"paradigm", "mtl"},
      {"seed", 1},
      {"total_steps", 2000},
      {"batch_size", 16},
      {"vocab_size", 256},
      {"lambda_utt", 3.0},
      {"data_path", data_path},
      {"optimizer",
       {{"kind", "adam"}, {"max_lr", 0.004}, {"weight_decay", 0.0},
        {"schedule", "warmup_linear"}, {"warmup_fraction", 0.3}}},
      {"architecture",
       {{"embedding_dim", 32},
        {"dropout", 0.0},
        {"kernels", {3, 7}},
        {"dilations", {1, 2}},
        {"filters", {32, 48}}}}};
  const auto outcome = run_training(parse_run_config(j), "acceptance_out/learn/run");
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("    2000 MTL steps in %.0fs: conv macro-F1 %.4f (>= 0.95), utt macro-F1 %.4f "
              "(>= 0.85)\n",
              secs, outcome.conv_f1, outcome.utt_f1);
  require(outcome.conv_f1 >= 0.95, fmt("conversation macro-F1 %.4f < 0.95", outcome.conv_f1));
  require(outcome.utt_f1 >= 0.85, fmt("utterance macro-F1 %.4f < 0.85", outcome.utt_f1));
  require(secs < 1800.0, fmt("learnability run took %.0fs, budget 30 min", secs));
}

// ---------------------------------------------------------------------------
// Criterion 7: ListOps oracle equivalence and above-chance CNN
// ---------------------------------------------------------------------------

void criterion_listops() {
  ListOpsSpec wide;
  wide.seed = 77;
  wide.n = 10000;
  wide.max_depth = 3;
  wide.max_args = 5;
  wide.max_len = 200;
  const auto expressions = gen_listops(wide);
  require(expressions.size() == 10000, "expected 10000 expressions");
  for (const auto& ex : expressions) {
    const int stack_value = lctest::eval_listops_stack(ex.expr);
    require(ex.label == eval_listops(ex.expr) && ex.label == stack_value,
            "recursive and stack-machine evaluation disagree on: " + ex.expr);
  }
  std::printf("    eval_listops == stack machine on 10000 random expressions\n");

  ListOpsSpec shallow;
  shallow.seed = 7;
  shallow.n = 4000;
  shallow.max_depth = 2;
  shallow.max_args = 4;
  shallow.max_len = 64;
  fs::create_directories("acceptance_out/listops");
  const std::string data_path = "acceptance_out/listops/listops.jsonl";
  write_listops_jsonl(data_path, gen_listops(shallow));

  nlohmann::json j = {
      {"task", "listops"},
      {"model", "cnn_custom"},
      {"seed", 1},
      {"total_steps", 3000},
      {"batch_size", 16},
      {"data_path", data_path},
      {"optimizer",
       {{"kind", "adam"}, {"max_lr", 0.003}, {"weight_decay", 0.0},
        {"schedule", "warmup_linear"}}},
      {"architecture",
       {{"embedding_dim", 48},
        {"dropout", 0.0},
        {"kernels", {3, 7}},
        {"dilations", {1, 2, 4}},
        {"filters", {24, 48, 64}}}}};
  const auto outcome = run_training(parse_run_config(j), "acceptance_out/listops/run");
  std::printf("    depth<=2 ListOps accuracy %.4f (must exceed 0.30 = 3x chance)\n",
              outcome.acc);
  require(outcome.acc > 0.30, fmt("ListOps accuracy %.4f <= 0.30", outcome.acc));
}

// ---------------------------------------------------------------------------
// Criterion 8: determinism and sweep reporting
// ---------------------------------------------------------------------------

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void criterion_determinism() {
  GeneratorSpec spec;
  spec.seed = 31;
  spec.n_conversations = 80;
  spec.vocab_size = 64;
  spec.mean_len = 90;
  spec.sd_len = 25;
  spec.max_len = 512;
  fs::create_directories("acceptance_out/determinism");
  const std::string data_path = "acceptance_out/determinism/conversations.jsonl";
  write_conversations_jsonl(data_path, gen_conversations(spec));

  nlohmann::json j = {{"task", "conversations"},
                      {"model", "cnn_custom"},
                      {"seed", 4},
                      {"total_steps", 40},
                      {"batch_size", 4},
                      {"vocab_size", 64},
                      {"data_path", data_path},
                      {"optimizer", {{"kind", "sgd"}, {"max_lr", 0.05}}},
                      {"architecture",
                       {{"embedding_dim", 12},
                        {"kernels", {3, 5}},
                        {"dilations", {1, 2}},
                        {"filters", {8, 12}}}}};
  const auto cfg = parse_run_config(j);
  run_training(cfg, "acceptance_out/determinism/a");
  run_training(cfg, "acceptance_out/determinism/b");
  const std::string trace_a = slurp("acceptance_out/determinism/a/trace.csv");
  require(!trace_a.empty() && trace_a == slurp("acceptance_out/determinism/b/trace.csv"),
          "loss traces are not bitwise identical");
  std::printf("    identical config+seed reproduced a bitwise-identical trace.csv\n");

  auto sweep_cfg = cfg;
  sweep_cfg.n_seeds = 4;
  sweep_cfg.total_steps = 5;
  const auto sweep = run_seed_sweep(sweep_cfg, "acceptance_out/determinism/sweep");
  require(sweep.runs.size() == 4, "sweep did not run 4 seeds");
  require(!sweep.stats.empty(), "sweep produced no stats");
  const std::regex formatted("^[0-9]+\\.[0-9] \\(\u00b1[0-9]+\\.[0-9]\\)$");
  for (const auto& stat : sweep.stats) {
    require(std::regex_match(stat.formatted, formatted),
            "sweep stat '" + stat.formatted + "' not in appendix mean (+/-sd) format");
    std::printf("    4-seed sweep %-8s -> %s\n", stat.metric.c_str(), stat.formatted.c_str());
  }
}

// ---------------------------------------------------------------------------
// Criterion 9: schedule exactness
// ---------------------------------------------------------------------------

void criterion_schedules() {
  ScheduleConfig one;
  one.total_steps = 1000;
  one.kind = ScheduleKind::one_cycle;
  one.max_lr = 0.01;
  require(one_cycle_lr(300, one) == 0.01, "one_cycle peak != 0.01 exactly");
  require(one_cycle_lr(0, one) == 0.01 / 25.0, "one_cycle start != max/div exactly");
  require(one_cycle_lr(1000, one) == 0.01 / 1e4, "one_cycle end != max/final_div exactly");

  ScheduleConfig warm;
  warm.total_steps = 1000;
  warm.kind = ScheduleKind::warmup_linear;
  warm.max_lr = 1e-4;
  require(warmup_linear_lr(300, warm) == 1e-4, "warmup peak at 30% != max exactly");
  require(warmup_linear_lr(150, warm) == 5e-5, "warmup midpoint != max/2 exactly");
  require(warmup_linear_lr(650, warm) == 5e-5, "decay midpoint != max/2 exactly");
  std::printf("    pinned schedule values reproduced to machine precision\n");
}

struct Criterion {
  int id;
  const char* name;
  std::function<void()> body;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[i + 1]);

  const std::vector<Criterion> criteria = {
      {1, "gradient suite (finite differences, 64-bit, <2 min)", criterion_gradients},
      {2, "receptive-field oracle (421 merged, 301/421 per tower, 10 random configs)",
       criterion_receptive_field},
      {3, "cross-feed concatenation wiring", criterion_cross_feed},
      {4, "efficiency ordering (FLOPs <= 0.1x, linear vs quadratic, steps/sec)",
       criterion_efficiency},
      {5, "kernel ablation monotonicity over k={17,21,65,129,257,513}", criterion_ablation},
      {6, "learnability: conv F1 >= 0.95, utt F1 >= 0.85 in 2000 MTL steps",
       criterion_learnability},
      {7, "ListOps oracle equivalence and above-chance CNN", criterion_listops},
      {8, "determinism and 4-seed mean (+/-sd) reporting", criterion_determinism},
      {9, "schedule exactness at the pinned values", criterion_schedules},
  };

  fs::remove_all("acceptance_out");
  fs::create_directories("acceptance_out");
  int failures = 0;
  for (const auto& criterion : criteria) {
    if (only != 0 && criterion.id != only) continue;
    std::printf("criterion %d: %s\n", criterion.id, criterion.name);
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criterion.body();
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("[PASS] criterion %d: %s (%.1fs)\n", criterion.id, criterion.name, secs);
    } catch (const std::exception& e) {
      ++failures;
      std::printf("[FAIL] criterion %d: %s -- %s\n", criterion.id, criterion.name, e.what());
    }
    std::fflush(stdout);
  }
  if (failures) std::printf("%d criterion(s) FAILED\n", failures);
  else std::printf("all criteria passed\n");
  return failures == 0 ? 0 : 1;
}
