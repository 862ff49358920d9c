#include <doctest.h>

#include <cmath>
#include <numeric>

#include "longconv/attention.hpp"
#include "testutil.hpp"

using namespace longconv;

namespace {

AttentionConfig tiny_cfg(std::int64_t max_len = 32) {
  AttentionConfig cfg;
  cfg.layers = 2;
  cfg.model_dim = 8;
  cfg.heads = 2;
  cfg.ff_dim = 16;
  cfg.max_len = max_len;
  cfg.vocab_size = 24;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  auto cfg = tiny_cfg();
  cfg.model_dim = 10;
  cfg.heads = 4;
  CHECK_THROWS_WITH_AS(cfg.validate(), doctest::Contains("divisible"), TensorError);
}

TEST_CASE("attention weight rows sum to 1 for random inputs") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    auto scores = lctest::rand_tensor<double>({5, 7}, rng, -4, 4);
    auto probs = row_softmax(scores);
    for (std::int64_t r = 0; r < 5; ++r) {
      double s = 0;
      for (std::int64_t c = 0; c < 7; ++c) s += probs.data()[r * 7 + c];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
    }
  }
}

TEST_CASE("T=1: attention reduces to value then output projection") {
  AttentionEncoder<double> enc(tiny_cfg(), 5);
  Rng rng(9);
  auto x = lctest::rand_tensor<double>({1, 8}, rng);
  auto got = enc.self_attention(x, 0);
  const auto& ly = enc.layers()[0];
  auto want = linear(linear(x, ly.wv, ly.bv), ly.wo, ly.bo);
  REQUIRE(got.shape() == want.shape());
  for (std::int64_t i = 0; i < got.numel(); ++i)
    CHECK(got.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
}

TEST_CASE("identical keys give uniform attention: all output rows match") {
  AttentionEncoder<double> enc(tiny_cfg(), 5);
  auto& ly = enc.layers()[0];
  for (std::int64_t i = 0; i < ly.wk.numel(); ++i) ly.wk.data()[i] = 0;  // keys = bk everywhere
  Rng rng(2);
  auto x = lctest::rand_tensor<double>({6, 8}, rng);
  auto out = enc.self_attention(x, 0);
  for (std::int64_t r = 1; r < 6; ++r)
    for (std::int64_t c = 0; c < 8; ++c)
      CHECK(out.data()[r * 8 + c] == doctest::Approx(out.data()[c]).epsilon(1e-9));
}

TEST_CASE("encoder_forward: shape, position sensitivity, residual-path trace") {
  auto cfg = tiny_cfg();
  AttentionEncoder<double> enc(cfg, 7);
  std::vector<int> ids{1, 2, 3, 4, 5};
  auto out = enc.forward(ids);
  CHECK(out.shape() == Shape{8, 5});

  // Permuting tokens changes the output (positional embeddings are active).
  auto permuted = enc.forward({5, 4, 3, 2, 1});
  bool differs = false;
  for (std::int64_t i = 0; i < out.numel() && !differs; ++i)
    differs = std::abs(out.data()[i] - permuted.data()[i]) > 1e-12;
  CHECK(differs);

  // Zeroed attention/FFN weights: the residual stream is embedding+positional
  // passed through the final norm.
  AttentionEncoder<double> zeroed(cfg, 7);
  for (auto& ly : zeroed.layers()) {
    for (auto* w : {&ly.wq, &ly.bq, &ly.wk, &ly.bk, &ly.wv, &ly.bv, &ly.wo, &ly.bo, &ly.w1,
                    &ly.b1, &ly.w2, &ly.b2})
      for (std::int64_t i = 0; i < w->numel(); ++i) w->data()[i] = 0;
  }
  auto traced = zeroed.forward(ids);
  std::vector<int> positions(ids.size());
  std::iota(positions.begin(), positions.end(), 0);
  auto stream = add(transpose(embed(zeroed.token_embedding(), ids)),
                    transpose(embed(zeroed.positional_embedding(), positions)));
  auto gamma = Tensor<double>::full({8}, 1.0);
  auto beta = Tensor<double>::zeros({8});
  auto want = transpose(layer_norm(stream, gamma, beta));
  for (std::int64_t i = 0; i < traced.numel(); ++i)
    CHECK(traced.data()[i] == doctest::Approx(want.data()[i]).epsilon(1e-12));
}

TEST_CASE("fixed-length violation") {
  AttentionEncoder<float> enc(tiny_cfg(4), 1);
  CHECK_THROWS_WITH_AS(static_cast<void>(enc.forward({1, 2, 3, 4, 5})),
                       doctest::Contains("max_len"), TensorError);
  CHECK_NOTHROW(static_cast<void>(enc.forward({1, 2, 3, 4})));
  CHECK_THROWS_AS(static_cast<void>(enc.forward({})), TensorError);
}

TEST_CASE("attention encoder gradients pass finite differences") {
  auto cfg = tiny_cfg();
  cfg.layers = 1;
  AttentionEncoder<double> enc(cfg, 13);
  std::vector<int> ids{3, 1, 4, 1};
  Rng rng(21);
  auto coef = lctest::rand_tensor<double>({8, 4}, rng);
  auto& ly = enc.layers()[0];
  const double err = lctest::gradcheck(
      {enc.token_embedding(), ly.wq, ly.wk, ly.wv, ly.wo, ly.w1, ly.ln1_g, ly.b1},
      [&]() { return sum(mul(enc.forward(ids), coef)); });
  CHECK(err < 1e-4);
}
