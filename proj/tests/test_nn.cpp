#include <doctest.h>

#include <cmath>
#include <cstring>

#include "clsr/adamw.hpp"
#include "clsr/binary_io.hpp"
#include "clsr/checkpoint.hpp"
#include "clsr/encoder.hpp"
#include "clsr/retrieval.hpp"
#include "oracles.hpp"

using namespace clsr;

namespace {

Encoder trained_like(std::uint64_t seed) {
  Encoder model;
  Rng rng = substream(seed, {1});
  model.init_weights(rng);
  std::vector<Situation> data;
  for (int i = 0; i < 16; ++i) data.push_back(oracle::random_situation(rng, "n" + std::to_string(i)));
  model.fit_normalization(std::span<const Situation>(data));
  // Move BN running statistics away from their initial values.
  Rng d = substream(seed, {2});
  std::vector<const Situation*> ptrs;
  for (auto& s : data) ptrs.push_back(&s);
  const auto x = stack_situations<float>(ptrs, 30, 1);
  model.train_forward(x, data.size(), d);
  return model;
}

}  // namespace

TEST_CASE("encoder maps (4, 30, 1) to (4, 128)") {
  Encoder model = trained_like(1);
  Tensor x({4, 30, 1}, std::vector<float>(120, 10.0f));
  const auto y = model.forward(x, Mode::Eval);
  CHECK(y.shape == std::vector<std::size_t>{4, 128});
}

TEST_CASE("eval mode is deterministic") {
  Encoder model = trained_like(2);
  Rng rng = substream(2, {9});
  Tensor x({3, 30, 1}, {});
  for (int i = 0; i < 90; ++i) x.data.push_back(static_cast<float>(uniform(rng, 0.0, 100.0)));
  const auto a = model.forward(x, Mode::Eval);
  const auto b = model.forward(x, Mode::Eval);
  CHECK(a.data == b.data);
}

TEST_CASE("wrong input shape and missing normalization are reported") {
  Encoder model;
  Rng rng = substream(3, {1});
  model.init_weights(rng);
  Tensor x({2, 30, 1}, std::vector<float>(60, 0.0f));
  try {
    model.forward(x, Mode::Eval);
    FAIL("expected a state error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::State);
  }
  model.set_normalization(std::vector<float>{0.0f}, std::vector<float>{1.0f});
  Tensor bad({2, 29, 1}, std::vector<float>(58, 0.0f));
  try {
    model.forward(bad, Mode::Eval);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Shape);
  }
}

TEST_CASE("constant input through zero conv weights follows the hand-evaluated bias path") {
  ModelConfig cfg;
  cfg.conv_widths = {3, 2, 4};
  cfg.dense_units = 3;
  cfg.embedding = 2;
  BasicEncoder<double> model(cfg);
  Rng rng = substream(4, {1});
  model.init_weights(rng);
  model.set_normalization(std::vector<double>{7.0}, std::vector<double>{2.0});
  auto tensors = model.tensors();
  // conv{1,2,3}.weight zero; biases b_i chosen by hand
  const std::vector<std::vector<double>> biases{{0.5, -1.0, 2.0}, {1.5, -0.25}, {-3.0, 0.75, 1.0, 0.1}};
  for (std::size_t blk = 0; blk < 3; ++blk) {
    tensors[blk * 6]->value.setZero();
    for (std::size_t j = 0; j < biases[blk].size(); ++j) tensors[blk * 6 + 1]->value(0, static_cast<Eigen::Index>(j)) = biases[blk][j];
  }
  auto& dw = tensors[18]->value;
  auto& db = tensors[19]->value;
  auto& hw = tensors[20]->value;
  auto& hb = tensors[21]->value;

  // BN at inference with running mean 0, var 1, gamma 1, beta 0: v / sqrt(1 + eps).
  const double eps = static_cast<double>(cfg.bn_epsilon);
  std::vector<double> h3(4);
  for (std::size_t j = 0; j < 4; ++j) h3[j] = std::max(0.0, biases[2][j] / std::sqrt(1.0 + eps));
  std::vector<double> dense(3), out(2);
  for (std::size_t u = 0; u < 3; ++u) {
    dense[u] = db(0, static_cast<Eigen::Index>(u));
    for (std::size_t j = 0; j < 4; ++j) dense[u] += h3[j] * dw(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(u));
  }
  for (std::size_t e = 0; e < 2; ++e) {
    out[e] = hb(0, static_cast<Eigen::Index>(e));
    for (std::size_t u = 0; u < 3; ++u) out[e] += dense[u] * hw(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(e));
  }
  const auto y = model.infer(nn::Matrix<double>::Zero(30, 1), 1);
  CHECK(y(0, 0) == doctest::Approx(out[0]).epsilon(1e-12));
  CHECK(y(0, 1) == doctest::Approx(out[1]).epsilon(1e-12));
}

TEST_CASE("normalization statistics") {
  SUBCASE("two values {0, 2}") {
    Situation s("s", 30, 1);
    for (std::size_t t = 0; t < 30; ++t) {
      s.values[t] = (t % 2 == 0) ? 0.0f : 2.0f;
      s.mask[t] = 1;
    }
    Encoder model;
    model.fit_normalization(std::vector<Situation>{s});
    CHECK(model.normalization().mean()(0, 0) == doctest::Approx(1.0));
    CHECK(model.normalization().stddev()(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("constant data floors the std and maps to zero") {
    Situation s("s", 30, 1);
    std::fill(s.values.begin(), s.values.end(), 42.0f);
    std::fill(s.mask.begin(), s.mask.end(), 1);
    Encoder model;
    model.fit_normalization(std::vector<Situation>{s});
    CHECK(model.normalization().mean()(0, 0) == 42.0f);
    CHECK(model.normalization().stddev()(0, 0) == doctest::Approx(1e-6));
    const auto z = model.normalization().forward(nn::Matrix<float>::Constant(30, 1, 42.0f));
    CHECK(z.cwiseAbs().maxCoeff() == 0.0f);
  }
  SUBCASE("sentinel cells count") {
    Situation s("s", 30, 1);
    s = impute(s, -100.0f);
    Encoder model;
    model.fit_normalization(std::vector<Situation>{s});
    CHECK(model.normalization().mean()(0, 0) == -100.0f);
  }
}

TEST_CASE("train-mode batch norm standardizes each channel") {
  Rng rng = substream(5, {1});
  nn::BatchNorm<double> bn("bn", 3, 1e-3, 0.99);
  bn.init();
  nn::Matrix<double> x(64, 3);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng, 4.0, 3.0);
  const auto y = bn.forward(x, false);
  for (Eigen::Index c = 0; c < 3; ++c) {
    const double mean = y.col(c).mean();
    const double var = (y.col(c).array() - mean).square().mean();
    CHECK(std::abs(mean) < 1e-5);
    // biased variance plus epsilon in the denominator: var(y) = v / (v + eps)
    const double v = (x.col(c).array() - x.col(c).mean()).square().mean();
    CHECK(var == doctest::Approx(v / (v + 1e-3)).epsilon(1e-9));
    CHECK(std::abs(var - 1.0) < 1e-3);
  }
}

TEST_CASE("AdamW first step from a fresh state") {
  AdamWConfig cfg;  // lr 1e-5, wd 1e-4
  AdamW opt(cfg);
  std::vector<float> p{1.0f};
  const std::vector<float> g{1.0f};
  const std::vector<ParamSlot> slots{{p, g}};
  opt.step(slots);
  const double expected = 1.0 - cfg.lr * (1.0 / (1.0 + cfg.epsilon)) - cfg.lr * cfg.weight_decay * 1.0;
  CHECK(p[0] == static_cast<float>(expected));
  CHECK(opt.step_count() == 1);
}

TEST_CASE("AdamW with zero gradient and no decay leaves parameters alone") {
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(cfg);
  std::vector<float> p{0.3f, -2.0f};
  const std::vector<float> g{0.0f, 0.0f};
  const std::vector<ParamSlot> slots{{p, g}};
  for (int i = 0; i < 3; ++i) opt.step(slots);
  CHECK(p == std::vector<float>{0.3f, -2.0f});
}

TEST_CASE("AdamW moments follow the scalar recursion") {
  AdamWConfig cfg;
  cfg.lr = 1e-3;
  AdamW opt(cfg);
  std::vector<float> p{0.5f};
  const std::vector<float> g{0.25f};
  const std::vector<ParamSlot> slots{{p, g}};

  double m = 0, v = 0, ref = 0.5;
  for (int t = 1; t <= 2; ++t) {
    opt.step(slots);
    m = cfg.beta1 * m + (1 - cfg.beta1) * 0.25;
    v = cfg.beta2 * v + (1 - cfg.beta2) * 0.0625;
    const double mhat = m / (1 - std::pow(cfg.beta1, t)), vhat = v / (1 - std::pow(cfg.beta2, t));
    ref = ref - cfg.lr * mhat / (std::sqrt(vhat) + cfg.epsilon) - cfg.lr * cfg.weight_decay * ref;
    ref = static_cast<float>(ref);
  }
  CHECK(opt.step_count() == 2);
  CHECK(opt.first_moments()[0][0] == doctest::Approx(m).epsilon(1e-12));
  CHECK(opt.second_moments()[0][0] == doctest::Approx(v).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("AdamW on an encoder leaves running statistics and normalization alone") {
  Encoder model = trained_like(6);
  const auto before = checkpoint_bytes(model);
  std::vector<nn::Matrix<float>> stats;
  for (auto* p : model.tensors())
    if (!p->trainable) stats.push_back(p->value);
  for (auto* p : model.parameters()) p->grad = nn::Matrix<float>::Constant(p->value.rows(), p->value.cols(), 0.1f);
  AdamW opt;
  opt.step(model);
  std::size_t i = 0;
  for (auto* p : model.tensors())
    if (!p->trainable) CHECK(p->value == stats[i++]);
  CHECK(checkpoint_bytes(model) != before);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Encoder model = trained_like(7);
  const auto bytes = checkpoint_bytes(model);
  const Encoder back = checkpoint_from_bytes(bytes);
  CHECK(checkpoint_bytes(back) == bytes);
  CHECK(back.config() == model.config());
  Rng rng = substream(7, {5});
  std::vector<Situation> items;
  for (int i = 0; i < 40; ++i) items.push_back(oracle::random_situation(rng, "c" + std::to_string(i), 30, 1, 0.2));
  const auto a = embed(model, items, false);
  const auto b = embed(back, items, false);
  REQUIRE(a.size() == b.size());
  CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("corrupted checkpoints are format errors") {
  const auto bytes = checkpoint_bytes(trained_like(8));
  auto expect_format = [](std::string data) {
    try {
      checkpoint_from_bytes(data);
      FAIL("expected a format error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Format);
    }
  };
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_format(bad_magic);
  std::string bad_version = bytes;
  bad_version[4] = static_cast<char>(kCheckpointVersion + 1);
  expect_format(bad_version);
  expect_format(bytes.substr(0, bytes.size() - 3));
  expect_format(bytes + "x");
}
