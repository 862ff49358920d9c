#pragma once

// Vanilla full self-attention encoder, the quadratic-cost reference point.
// Pre-norm residual blocks, learned absolute positional embeddings, hence a
// hard maximum input length.

#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "longconv/ops.hpp"
#include "longconv/rng.hpp"
#include "longconv/tensor.hpp"

namespace longconv {

struct AttentionConfig {
  std::int64_t layers = 2;
  std::int64_t model_dim = 64;
  std::int64_t heads = 2;
  std::int64_t ff_dim = 128;
  std::int64_t max_len = 4096;
  std::int64_t vocab_size = 0;

  void validate() const {
    if (layers < 0) throw TensorError("AttentionConfig: layers must be >= 0");
    if (model_dim < 1 || heads < 1 || ff_dim < 1)
      throw TensorError("AttentionConfig: dims must be >= 1");
    if (model_dim % heads != 0)
      throw TensorError("AttentionConfig: model_dim must be divisible by heads");
    if (max_len < 1) throw TensorError("AttentionConfig: max_len must be >= 1");
    if (vocab_size < 1) throw TensorError("AttentionConfig: vocab_size must be >= 1");
  }
};

template <typename S>
class AttentionEncoder {
 public:
  struct Layer {
    Tensor<S> ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor<S> ln2_g, ln2_b, w1, b1, w2, b2;
  };

  AttentionEncoder(AttentionConfig config, std::uint64_t seed) : cfg_(config) {
    cfg_.validate();
    Rng rng(seed);
    tok_emb_ = init_normal(rng, {cfg_.vocab_size, cfg_.model_dim});
    pos_emb_ = init_normal(rng, {cfg_.max_len, cfg_.model_dim});
    const std::int64_t d = cfg_.model_dim, f = cfg_.ff_dim;
    for (std::int64_t l = 0; l < cfg_.layers; ++l) {
      Layer layer;
      layer.ln1_g = Tensor<S>::full({d}, S(1), true);
      layer.ln1_b = Tensor<S>::zeros({d}, true);
      layer.wq = init_normal(rng, {d, d});
      layer.bq = Tensor<S>::zeros({d}, true);
      layer.wk = init_normal(rng, {d, d});
      layer.bk = Tensor<S>::zeros({d}, true);
      layer.wv = init_normal(rng, {d, d});
      layer.bv = Tensor<S>::zeros({d}, true);
      layer.wo = init_normal(rng, {d, d});
      layer.bo = Tensor<S>::zeros({d}, true);
      layer.ln2_g = Tensor<S>::full({d}, S(1), true);
      layer.ln2_b = Tensor<S>::zeros({d}, true);
      layer.w1 = init_normal(rng, {f, d});
      layer.b1 = Tensor<S>::zeros({f}, true);
      layer.w2 = init_normal(rng, {d, f});
      layer.b2 = Tensor<S>::zeros({d}, true);
      layers_.push_back(std::move(layer));
    }
    ln_f_g_ = Tensor<S>::full({d}, S(1), true);
    ln_f_b_ = Tensor<S>::zeros({d}, true);
  }

  // Multi-head bidirectional (unmasked) scaled dot-product attention on [T,D].
  Tensor<S> self_attention(const Tensor<S>& x, std::int64_t layer_index) const {
    check_len(x.dim(0));
    const Layer& ly = layers_[static_cast<std::size_t>(layer_index)];
    const std::int64_t d = cfg_.model_dim;
    const std::int64_t dh = d / cfg_.heads;
    Tensor<S> q = linear(x, ly.wq, ly.bq);
    Tensor<S> k = linear(x, ly.wk, ly.bk);
    Tensor<S> v = linear(x, ly.wv, ly.bv);
    std::vector<Tensor<S>> head_outs;
    head_outs.reserve(static_cast<std::size_t>(cfg_.heads));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    for (std::int64_t h = 0; h < cfg_.heads; ++h) {
      Tensor<S> qh = slice_cols(q, h * dh, (h + 1) * dh);
      Tensor<S> kh = slice_cols(k, h * dh, (h + 1) * dh);
      Tensor<S> vh = slice_cols(v, h * dh, (h + 1) * dh);
      Tensor<S> scores = scale(matmul(qh, transpose(kh)), inv_sqrt);  // [T,T]
      Tensor<S> probs = row_softmax(scores);
      head_outs.push_back(matmul(probs, vh));
    }
    Tensor<S> cat = cfg_.heads == 1 ? head_outs[0] : concat(head_outs, 1);
    return linear(cat, ly.wo, ly.bo);
  }

  // ids -> [D,T], channel-major for head compatibility.
  Tensor<S> forward(const std::vector<int>& ids) const {
    if (ids.empty()) throw TensorError("attention encoder: empty sequence");
    check_len(static_cast<std::int64_t>(ids.size()));
    const std::int64_t t_len = static_cast<std::int64_t>(ids.size());
    std::vector<int> positions(static_cast<std::size_t>(t_len));
    std::iota(positions.begin(), positions.end(), 0);
    Tensor<S> x = add(transpose(embed(tok_emb_, ids)),
                      transpose(embed(pos_emb_, positions)));  // [T,D]
    for (std::int64_t l = 0; l < cfg_.layers; ++l) {
      const Layer& ly = layers_[static_cast<std::size_t>(l)];
      x = add(x, self_attention(layer_norm(x, ly.ln1_g, ly.ln1_b), l));
      Tensor<S> h = layer_norm(x, ly.ln2_g, ly.ln2_b);
      h = linear(relu(linear(h, ly.w1, ly.b1)), ly.w2, ly.b2);
      x = add(x, h);
    }
    x = layer_norm(x, ln_f_g_, ln_f_b_);
    return transpose(x);
  }

  const AttentionConfig& config() const { return cfg_; }
  std::vector<Layer>& layers() { return layers_; }
  Tensor<S>& token_embedding() { return tok_emb_; }
  Tensor<S>& positional_embedding() { return pos_emb_; }

  std::vector<std::pair<std::string, Tensor<S>>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor<S>>> out;
    out.emplace_back("tok_emb", tok_emb_);
    out.emplace_back("pos_emb", pos_emb_);
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const std::string p = "layer" + std::to_string(l);
      const Layer& ly = layers_[l];
      out.emplace_back(p + ".ln1.gamma", ly.ln1_g);
      out.emplace_back(p + ".ln1.beta", ly.ln1_b);
      out.emplace_back(p + ".attn.wq", ly.wq);
      out.emplace_back(p + ".attn.bq", ly.bq);
      out.emplace_back(p + ".attn.wk", ly.wk);
      out.emplace_back(p + ".attn.bk", ly.bk);
      out.emplace_back(p + ".attn.wv", ly.wv);
      out.emplace_back(p + ".attn.bv", ly.bv);
      out.emplace_back(p + ".attn.wo", ly.wo);
      out.emplace_back(p + ".attn.bo", ly.bo);
      out.emplace_back(p + ".ln2.gamma", ly.ln2_g);
      out.emplace_back(p + ".ln2.beta", ly.ln2_b);
      out.emplace_back(p + ".ffn.w1", ly.w1);
      out.emplace_back(p + ".ffn.b1", ly.b1);
      out.emplace_back(p + ".ffn.w2", ly.w2);
      out.emplace_back(p + ".ffn.b2", ly.b2);
    }
    out.emplace_back("ln_f.gamma", ln_f_g_);
    out.emplace_back("ln_f.beta", ln_f_b_);
    return out;
  }

  std::int64_t param_count() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : named_parameters()) n += t.numel();
    return n;
  }

 private:
  void check_len(std::int64_t t_len) const {
    if (t_len > cfg_.max_len)
      throw TensorError("attention encoder: sequence length " + std::to_string(t_len) +
                        " exceeds fixed max_len " + std::to_string(cfg_.max_len));
  }

  static Tensor<S> init_normal(Rng& rng, Shape shape) {
    Tensor<S> t = Tensor<S>::zeros(std::move(shape), true);
    for (std::int64_t i = 0; i < t.numel(); ++i)
      t.data()[i] = static_cast<S>(rng.normal(0.0, 0.02));
    return t;
  }

  AttentionConfig cfg_;
  Tensor<S> tok_emb_, pos_emb_;
  std::vector<Layer> layers_;
  Tensor<S> ln_f_g_, ln_f_b_;
};

}  // namespace longconv
