#pragma once

// The three efficiency axes: analytic FLOPs (MACs), measured training
// throughput, and the allocator high-water mark for tensor buffers.

#include <cstdint>
#include <functional>
#include <string>

#include "longconv/attention.hpp"
#include "longconv/tcn.hpp"
#include "longconv/tensor.hpp"

namespace longconv {

// One MAC counts as one FLOP; bias adds and nonlinearities are excluded.
inline std::int64_t flops_conv1d(std::int64_t t_out, std::int64_t c_in, std::int64_t c_out,
                                 std::int64_t k) {
  return t_out * c_out * c_in * k;
}

inline std::int64_t flops_affine(std::int64_t t, std::int64_t d_in, std::int64_t d_out) {
  return t * d_in * d_out;
}

struct FlopsBreakdown {
  std::int64_t conv = 0;
  std::int64_t affine = 0;
  std::int64_t attn_proj = 0;
  std::int64_t attn_score = 0;
  std::int64_t attn_ffn = 0;

  std::int64_t total() const { return conv + affine + attn_proj + attn_score + attn_ffn; }
  double total_g() const { return static_cast<double>(total()) / 1e9; }
};

// Per-forward encoder MACs at sequence length T. Embedding lookups count 0;
// every term is proportional to T, so the count is exactly linear in T.
inline FlopsBreakdown count_flops(const DualTowerConfig& cfg, std::int64_t t_len) {
  cfg.validate();
  if (t_len < 1) throw TensorError("count_flops: T must be >= 1");
  FlopsBreakdown f;
  for (const auto& tower : cfg.towers) {
    for (const auto& blk : tower.layers) {
      f.conv += flops_conv1d(t_len, blk.in_channels, blk.out_channels, blk.kernel_size);
      f.conv += flops_conv1d(t_len, blk.out_channels, blk.out_channels, blk.kernel_size);
      if (blk.in_channels != blk.out_channels)
        f.conv += flops_conv1d(t_len, blk.in_channels, blk.out_channels, 1);
    }
  }
  return f;
}

// Per layer: 4*T*D^2 projections, 2*T^2*D scores + weighted sum, 2*T*D*D_ff FFN.
inline FlopsBreakdown count_flops(const AttentionConfig& cfg, std::int64_t t_len) {
  cfg.validate();
  if (t_len < 1) throw TensorError("count_flops: T must be >= 1");
  FlopsBreakdown f;
  const std::int64_t d = cfg.model_dim;
  f.attn_proj = cfg.layers * 4 * t_len * d * d;
  f.attn_score = cfg.layers * 2 * t_len * t_len * d;
  f.attn_ffn = cfg.layers * 2 * t_len * d * cfg.ff_dim;
  return f;
}

// Wall clock over n_steps after warmup_steps, median of >=3 repetitions.
double measure_throughput(const std::function<void()>& step, int n_steps, int warmup_steps,
                          int repetitions = 3);

// Peak simultaneous live tensor bytes while the closure runs.
std::int64_t track_peak_memory(const std::function<void()>& run);

// ---------------------------------------------------------------------------
// Benchmark report rows
// ---------------------------------------------------------------------------

struct BenchReport {
  std::string task;
  std::string model;
  double quality = 0.0;  // macro-F1 or accuracy
  double flops_g = 0.0;  // per forward pass, giga-MACs
  double steps_per_sec = 0.0;
  std::int64_t peak_bytes = 0;
  std::int64_t params = 0;
  std::uint64_t seed = 0;
};

// Appends one row, writing the documentation comment + header first if the
// file does not exist yet.
void append_report_csv(const std::string& path, const BenchReport& report);

}  // namespace longconv
