#pragma once

// Dual-tower TCN encoder: two stacks of dilated residual temporal blocks with
// distinct kernel sizes, bidirectional (or causal) padding, and per-layer
// cross-tower concatenation feeding both towers.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "longconv/ops.hpp"
#include "longconv/rng.hpp"
#include "longconv/tensor.hpp"

namespace longconv {

enum class PaddingMode { causal, bidirectional };

struct TemporalBlockConfig {
  std::int64_t kernel_size = 3;
  std::int64_t dilation = 1;
  std::int64_t in_channels = 1;
  std::int64_t out_channels = 1;
  PaddingMode padding_mode = PaddingMode::bidirectional;
  double dropout = 0.1;

  void validate() const {
    if (kernel_size < 1) throw TensorError("TemporalBlockConfig: kernel_size must be >= 1");
    if (dilation < 1) throw TensorError("TemporalBlockConfig: dilation must be >= 1");
    if (in_channels < 1 || out_channels < 1)
      throw TensorError("TemporalBlockConfig: channel counts must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
      throw TensorError("TemporalBlockConfig: dropout must be in [0,1)");
  }
};

enum class TowerRole { short_range, long_range };

struct TowerConfig {
  std::vector<TemporalBlockConfig> layers;
  TowerRole role_tag = TowerRole::short_range;
};

struct DualTowerConfig {
  std::int64_t embedding_dim = 0;
  std::int64_t vocab_size = 0;
  std::vector<TowerConfig> towers;  // exactly 1 or 2
  bool cross_feed = false;          // true iff two towers

  std::int64_t n_towers() const { return static_cast<std::int64_t>(towers.size()); }
  std::int64_t n_layers() const { return static_cast<std::int64_t>(towers[0].layers.size()); }

  std::int64_t final_channels() const {
    std::int64_t c = 0;
    for (const auto& tw : towers) c += tw.layers.back().out_channels;
    return c;
  }

  void validate() const {
    if (embedding_dim < 1) throw TensorError("DualTowerConfig: embedding_dim must be >= 1");
    if (vocab_size < 1) throw TensorError("DualTowerConfig: vocab_size must be >= 1");
    if (towers.size() != 1 && towers.size() != 2)
      throw TensorError("DualTowerConfig: need exactly 1 or 2 towers");
    if ((towers.size() == 2) != cross_feed)
      throw TensorError("DualTowerConfig: cross_feed must be set iff there are two towers");
    const std::size_t layers = towers[0].layers.size();
    if (layers == 0) throw TensorError("DualTowerConfig: towers need at least one layer");
    for (const auto& tw : towers)
      if (tw.layers.size() != layers)
        throw TensorError("DualTowerConfig: towers must have equal layer counts");
    // Layer l+1 of every tower consumes the concat width produced after layer l.
    for (std::size_t l = 0; l < layers; ++l) {
      std::int64_t expected_in = 0;
      if (l == 0) {
        expected_in = embedding_dim;
      } else {
        for (const auto& tw : towers) expected_in += tw.layers[l - 1].out_channels;
      }
      for (const auto& tw : towers) {
        tw.layers[l].validate();
        if (tw.layers[l].in_channels != expected_in)
          throw TensorError("DualTowerConfig: layer " + std::to_string(l + 1) +
                            " in_channels must equal " + std::to_string(expected_in));
      }
    }
  }

  // Builds the standard wiring: shared embedding in, per-layer dilations and
  // filter counts shared across towers, kernel size fixed per tower.
  static DualTowerConfig make(std::int64_t vocab_size, std::int64_t embedding_dim,
                              const std::vector<std::int64_t>& kernel_per_tower,
                              const std::vector<std::int64_t>& dilations,
                              const std::vector<std::int64_t>& filters,
                              PaddingMode mode = PaddingMode::bidirectional,
                              double dropout = 0.1) {
    if (dilations.size() != filters.size())
      throw TensorError("DualTowerConfig::make: dilations and filters must have equal length");
    DualTowerConfig cfg;
    cfg.embedding_dim = embedding_dim;
    cfg.vocab_size = vocab_size;
    cfg.cross_feed = kernel_per_tower.size() == 2;
    const std::int64_t n_towers = static_cast<std::int64_t>(kernel_per_tower.size());
    for (std::int64_t tw = 0; tw < n_towers; ++tw) {
      TowerConfig tower;
      tower.role_tag = (n_towers == 2 && tw == 0) ? TowerRole::short_range : TowerRole::long_range;
      std::int64_t in = embedding_dim;
      for (std::size_t l = 0; l < dilations.size(); ++l) {
        TemporalBlockConfig blk;
        blk.kernel_size = kernel_per_tower[static_cast<std::size_t>(tw)];
        blk.dilation = dilations[l];
        blk.in_channels = in;
        blk.out_channels = filters[l];
        blk.padding_mode = mode;
        blk.dropout = dropout;
        tower.layers.push_back(blk);
        in = n_towers == 2 ? 2 * filters[l] : filters[l];
      }
      cfg.towers.push_back(std::move(tower));
    }
    cfg.validate();
    return cfg;
  }
};

// Total pad (k-1)*d, split so output length equals input length:
// causal puts it all on the left, bidirectional splits ceil/floor.
inline Pad pad_amounts(std::int64_t k, std::int64_t d, PaddingMode mode) {
  if (k < 1) throw TensorError("pad_amounts: kernel size must be >= 1");
  if (d < 1) throw TensorError("pad_amounts: dilation must be >= 1");
  const std::int64_t p = (k - 1) * d;
  if (mode == PaddingMode::causal) return Pad{p, 0};
  return Pad{(p + 1) / 2, p / 2};
}

// ---------------------------------------------------------------------------
// Temporal block: two (conv -> relu -> dropout) sublayers at the block's
// dilation plus a residual skip (1x1 conv when channel counts differ).
// ---------------------------------------------------------------------------

template <typename S>
struct TemporalBlock {
  TemporalBlockConfig cfg;
  Tensor<S> w1, b1, w2, b2;
  Tensor<S> w_skip, b_skip;  // defined only when in_channels != out_channels

  TemporalBlock(TemporalBlockConfig config, Rng& rng) : cfg(config) {
    cfg.validate();
    w1 = init_normal(rng, {cfg.out_channels, cfg.in_channels, cfg.kernel_size});
    b1 = Tensor<S>::zeros({cfg.out_channels}, true);
    w2 = init_normal(rng, {cfg.out_channels, cfg.out_channels, cfg.kernel_size});
    b2 = Tensor<S>::zeros({cfg.out_channels}, true);
    if (cfg.in_channels != cfg.out_channels) {
      w_skip = init_normal(rng, {cfg.out_channels, cfg.in_channels, 1});
      b_skip = Tensor<S>::zeros({cfg.out_channels}, true);
    }
  }

  Tensor<S> forward(const Tensor<S>& x, bool train, Rng& rng) const {
    const Pad pad = pad_amounts(cfg.kernel_size, cfg.dilation, cfg.padding_mode);
    Tensor<S> h = dropout(relu(conv1d(x, w1, b1, cfg.dilation, pad)), cfg.dropout, train, rng);
    h = dropout(relu(conv1d(h, w2, b2, cfg.dilation, pad)), cfg.dropout, train, rng);
    Tensor<S> skip = w_skip.defined() ? conv1d(x, w_skip, b_skip, 1, Pad{0, 0}) : x;
    return add(h, skip);
  }

  void collect_params(const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor<S>>>& out) const {
    out.emplace_back(prefix + ".conv1.weight", w1);
    out.emplace_back(prefix + ".conv1.bias", b1);
    out.emplace_back(prefix + ".conv2.weight", w2);
    out.emplace_back(prefix + ".conv2.bias", b2);
    if (w_skip.defined()) {
      out.emplace_back(prefix + ".skip.weight", w_skip);
      out.emplace_back(prefix + ".skip.bias", b_skip);
    }
  }

 private:
  // Bai et al. initialization: conv weights ~ N(0, 0.01), biases zero.
  static Tensor<S> init_normal(Rng& rng, Shape shape) {
    Tensor<S> t = Tensor<S>::zeros(std::move(shape), true);
    for (std::int64_t i = 0; i < t.numel(); ++i)
      t.data()[i] = static_cast<S>(rng.normal(0.0, 0.01));
    return t;
  }
};

// Zero out one block's output before the cross-feed concat; wiring probe.
struct TowerAblation {
  std::int64_t tower = -1;
  std::int64_t layer = -1;  // 0-based
};

template <typename S>
class DualTowerEncoder {
 public:
  DualTowerEncoder(DualTowerConfig config, std::uint64_t seed) : cfg_(std::move(config)) {
    cfg_.validate();
    Rng rng(seed);
    embedding_ = Tensor<S>::zeros({cfg_.vocab_size, cfg_.embedding_dim}, true);
    for (std::int64_t i = 0; i < embedding_.numel(); ++i)
      embedding_.data()[i] = static_cast<S>(rng.normal(0.0, 0.02));
    for (const auto& tower_cfg : cfg_.towers) {
      std::vector<TemporalBlock<S>> blocks;
      for (const auto& blk : tower_cfg.layers) blocks.emplace_back(blk, rng);
      towers_.push_back(std::move(blocks));
    }
  }

  // ids -> [C_final_total, T]; any T >= 1, no fixed maximum.
  Tensor<S> encode(const std::vector<int>& ids, bool train, Rng& rng,
                   const TowerAblation* ablation = nullptr) const {
    if (ids.empty()) throw TensorError("dual_tower_encode: empty sequence");
    Tensor<S> cur = embed(embedding_, ids);  // [E,T]
    const std::int64_t n_towers = cfg_.n_towers();
    const std::int64_t n_layers = cfg_.n_layers();
    for (std::int64_t l = 0; l < n_layers; ++l) {
      std::vector<Tensor<S>> outs;
      outs.reserve(static_cast<std::size_t>(n_towers));
      for (std::int64_t tw = 0; tw < n_towers; ++tw) {
        Tensor<S> out = towers_[static_cast<std::size_t>(tw)][static_cast<std::size_t>(l)]
                            .forward(cur, train, rng);
        if (ablation && ablation->tower == tw && ablation->layer == l)
          out = Tensor<S>::zeros(out.shape());
        outs.push_back(std::move(out));
      }
      cur = n_towers == 2 ? concat(outs[0], outs[1], 0) : outs[0];
    }
    return cur;
  }

  const DualTowerConfig& config() const { return cfg_; }
  Tensor<S>& embedding() { return embedding_; }
  const std::vector<std::vector<TemporalBlock<S>>>& blocks() const { return towers_; }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor<S>>> out;
    out.emplace_back("embedding", embedding_);
    for (std::size_t tw = 0; tw < towers_.size(); ++tw)
      for (std::size_t l = 0; l < towers_[tw].size(); ++l)
        towers_[tw][l].collect_params(
            "tower" + std::to_string(tw) + ".block" + std::to_string(l), out);
    return out;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : named_parameters()) n += t.numel();
    return n;
  }

 private:
  DualTowerConfig cfg_;
  Tensor<S> embedding_;  // shared by both towers
  std::vector<std::vector<TemporalBlock<S>>> towers_;
};

// ---------------------------------------------------------------------------
// Receptive-field table. Each block widens the field by 2*(k-1)*d; with
// cross-feed the towers' layer-l fields merge to their max before layer l+1.
// ---------------------------------------------------------------------------

struct ReceptiveField {
  std::vector<std::vector<std::int64_t>> per_tower_per_layer;  // [tower][layer]
  std::int64_t final_rf = 1;
};

inline ReceptiveField receptive_field(const DualTowerConfig& cfg) {
  cfg.validate();
  ReceptiveField rf;
  rf.per_tower_per_layer.assign(cfg.towers.size(), {});
  std::int64_t rf_in = 1;
  for (std::size_t l = 0; l < static_cast<std::size_t>(cfg.n_layers()); ++l) {
    std::int64_t merged = 0;
    for (std::size_t tw = 0; tw < cfg.towers.size(); ++tw) {
      const auto& blk = cfg.towers[tw].layers[l];
      const std::int64_t grown = rf_in + 2 * (blk.kernel_size - 1) * blk.dilation;
      rf.per_tower_per_layer[tw].push_back(grown);
      merged = std::max(merged, grown);
    }
    rf_in = cfg.cross_feed ? merged : rf.per_tower_per_layer[0].back();
  }
  rf.final_rf = 0;
  for (const auto& tower : rf.per_tower_per_layer)
    rf.final_rf = std::max(rf.final_rf, tower.back());
  return rf;
}

// Parameter count implied by a config (embedding + convs + biases), without
// materializing weights.
inline std::int64_t config_param_count(const DualTowerConfig& cfg) {
  cfg.validate();
  std::int64_t n = cfg.vocab_size * cfg.embedding_dim;
  for (const auto& tower : cfg.towers)
    for (const auto& blk : tower.layers) {
      n += blk.out_channels * blk.in_channels * blk.kernel_size + blk.out_channels;
      n += blk.out_channels * blk.out_channels * blk.kernel_size + blk.out_channels;
      if (blk.in_channels != blk.out_channels)
        n += blk.out_channels * blk.in_channels + blk.out_channels;
    }
  return n;
}

}  // namespace longconv
