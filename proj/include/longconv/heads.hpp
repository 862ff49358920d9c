#pragma once

// Dual-granularity heads: global max-pool + affine for the conversation
// label, per-span local max-pool + shared affine for utterance labels, a
// joint MTL objective, and the evaluation metrics.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "longconv/ops.hpp"
#include "longconv/rng.hpp"
#include "longconv/tensor.hpp"

namespace longconv {

// Token range of one utterance; starts at its speaker special token.
struct UtteranceSpan {
  std::int64_t start = 0;  // inclusive
  std::int64_t end = 0;    // exclusive
  std::int64_t utterance_index = 0;
};

inline void validate_spans(const std::vector<UtteranceSpan>& spans, std::int64_t t_len) {
  std::int64_t prev_end = 0;
  for (const auto& s : spans) {
    if (s.start >= s.end) throw TensorError("utterance span must satisfy start < end");
    if (s.start < prev_end || s.end > t_len)
      throw TensorError("utterance spans must be sorted, non-overlapping, in range");
    prev_end = s.end;
  }
}

// Targets for one conversation: one class plus per-span binary label vectors.
struct MtlTargets {
  int conversation_label = 0;
  std::vector<std::vector<std::uint8_t>> utterance_labels;  // [n_spans][K_utt]
};

template <typename S>
struct AffineHead {
  Tensor<S> weight, bias;  // [K, C], [K]

  AffineHead() = default;
  AffineHead(std::int64_t in_dim, std::int64_t classes, Rng& rng) {
    weight = Tensor<S>::zeros({classes, in_dim}, true);
    for (std::int64_t i = 0; i < weight.numel(); ++i)
      weight.data()[i] = static_cast<S>(rng.normal(0.0, 0.02));
    bias = Tensor<S>::zeros({classes}, true);
  }

  bool defined() const { return weight.defined(); }

  void collect_params(const std::string& prefix,
                      std::vector<std::pair<std::string, Tensor<S>>>& out) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
};

// Global max-pool then affine. Pass the valid-length span to keep pad
// positions out of the pool.
template <typename S>
Tensor<S> conversation_logits(const Tensor<S>& features, const AffineHead<S>& head,
                              std::optional<std::pair<std::int64_t, std::int64_t>> span =
                                  std::nullopt) {
  return linear(pool_max(features, span), head.weight, head.bias);
}

// Local max-pool per span through a shared affine head -> [n_spans, K_utt].
template <typename S>
Tensor<S> utterance_logits(const Tensor<S>& features, const std::vector<UtteranceSpan>& spans,
                           const AffineHead<S>& head) {
  if (spans.empty()) throw TensorError("utterance_logits: no spans");
  validate_spans(spans, features.dim(1));
  std::vector<Tensor<S>> rows;
  rows.reserve(spans.size());
  for (const auto& s : spans)
    rows.push_back(linear(pool_max(features, std::make_pair(s.start, s.end)), head.weight,
                          head.bias));
  return stack_rows(rows);
}

template <typename S>
Tensor<S> targets_tensor(const std::vector<std::vector<std::uint8_t>>& utt_labels,
                         std::int64_t k_utt) {
  Tensor<S> t = Tensor<S>::zeros({static_cast<std::int64_t>(utt_labels.size()), k_utt});
  for (std::size_t i = 0; i < utt_labels.size(); ++i)
    for (std::int64_t k = 0; k < k_utt; ++k)
      t.data()[static_cast<std::int64_t>(i) * k_utt + k] = static_cast<S>(utt_labels[i][k]);
  return t;
}

// softmax CE on the conversation head + lambda_utt * mean-over-spans BCE.
template <typename S>
Tensor<S> mtl_loss(const Tensor<S>& conv_logits, std::int64_t conv_target,
                   const Tensor<S>& utt_logits, const Tensor<S>& utt_targets,
                   double lambda_utt = 1.0) {
  Tensor<S> loss = softmax_cross_entropy(conv_logits, conv_target);
  if (lambda_utt != 0.0 && utt_logits.defined() && utt_logits.numel() > 0)
    loss = add(loss, scale(sigmoid_bce(utt_logits, utt_targets), lambda_utt));
  return loss;
}

// Multi-label decision rule: predict label i iff sigmoid(logit_i) > threshold,
// i.e. logit_i > logit(threshold); default threshold 0.5 means logit > 0.
template <typename S>
std::vector<int> decide_multilabel(const Tensor<S>& logits_row, double threshold = 0.5) {
  const double cut = std::log(threshold / (1.0 - threshold));
  std::vector<int> out;
  for (std::int64_t i = 0; i < logits_row.numel(); ++i)
    if (static_cast<double>(logits_row.data()[i]) > cut) out.push_back(static_cast<int>(i));
  return out;
}

template <typename S>
int decide_multiclass(const Tensor<S>& logits) {
  int best = 0;
  for (std::int64_t i = 1; i < logits.numel(); ++i)
    if (logits.data()[i] > logits.data()[best]) best = static_cast<int>(i);
  return best;
}

// ---------------------------------------------------------------------------
// Metrics (label-set based; multi-class passes singleton sets)
// ---------------------------------------------------------------------------

// Unweighted mean over ALL classes of per-class F1; a class with
// precision + recall == 0 (including zero-support classes) scores 0.
inline double macro_f1(const std::vector<std::vector<int>>& preds,
                       const std::vector<std::vector<int>>& golds, int num_classes) {
  if (preds.size() != golds.size() || preds.empty())
    throw TensorError("macro_f1: prediction/gold size mismatch or empty evaluation set");
  std::vector<std::int64_t> tp(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::int64_t> fp(static_cast<std::size_t>(num_classes), 0);
  std::vector<std::int64_t> fn(static_cast<std::size_t>(num_classes), 0);
  std::vector<char> in_pred(static_cast<std::size_t>(num_classes));
  std::vector<char> in_gold(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    std::fill(in_pred.begin(), in_pred.end(), 0);
    std::fill(in_gold.begin(), in_gold.end(), 0);
    for (int c : preds[i]) {
      if (c < 0 || c >= num_classes) throw TensorError("macro_f1: label out of range");
      in_pred[static_cast<std::size_t>(c)] = 1;
    }
    for (int c : golds[i]) {
      if (c < 0 || c >= num_classes) throw TensorError("macro_f1: label out of range");
      in_gold[static_cast<std::size_t>(c)] = 1;
    }
    for (int c = 0; c < num_classes; ++c) {
      const std::size_t cs = static_cast<std::size_t>(c);
      if (in_pred[cs] && in_gold[cs]) ++tp[cs];
      else if (in_pred[cs]) ++fp[cs];
      else if (in_gold[cs]) ++fn[cs];
    }
  }
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    const std::size_t cs = static_cast<std::size_t>(c);
    const std::int64_t denom = 2 * tp[cs] + fp[cs] + fn[cs];
    total += denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp[cs]) / static_cast<double>(denom);
  }
  return total / static_cast<double>(num_classes);
}

inline double macro_f1(const std::vector<int>& preds, const std::vector<int>& golds,
                       int num_classes) {
  std::vector<std::vector<int>> p, g;
  p.reserve(preds.size());
  g.reserve(golds.size());
  for (int c : preds) p.push_back({c});
  for (int c : golds) g.push_back({c});
  return macro_f1(p, g, num_classes);
}

inline double accuracy(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.size() != golds.size() || preds.empty())
    throw TensorError("accuracy: prediction/gold size mismatch or empty evaluation set");
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == golds[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(preds.size());
}

}  // namespace longconv
