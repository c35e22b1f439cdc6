#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "minimt/error.hpp"
#include "minimt/nmt.hpp"
#include "support.hpp"

using namespace minimt;
using namespace minimt::nmt;
using corpus::Vocab;

namespace {

Vocab vocab_of_size(std::size_t n, const std::string& prefix) {
  std::vector<std::string> syms;
  for (std::size_t i = Vocab::kReserved; i < n; ++i) syms.push_back(prefix + std::to_string(i));
  return Vocab::from_symbols(syms);
}

Seq2SeqModel small_word_model(bool attention, std::uint64_t seed = 3, std::size_t hidden = 6, double range = 0.5) {
  ModelShape shape{ModelKind::Word, 5, hidden, attention};
  return init_model(vocab_of_size(12, "s"), vocab_of_size(10, "t"), shape, seed, range);
}

Seq2SeqModel small_char_model(std::uint64_t seed = 3) {
  ModelShape shape{ModelKind::Char, 0, 6, false};
  return init_model(vocab_of_size(9, "c"), vocab_of_size(9, "c"), shape, seed, 0.5);
}

Batch toy_batch(const Seq2SeqModel& m, std::uint32_t seed, std::size_t n = 3) {
  std::mt19937 rng(seed);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    Example ex;
    std::size_t ls = 1 + rng() % 4, lt = rng() % 4;
    for (std::size_t k = 0; k < ls; ++k) ex.src.push_back(Vocab::kReserved + rng() % (m.src_vocab.size() - Vocab::kReserved));
    for (std::size_t k = 0; k < lt; ++k) ex.tgt.push_back(Vocab::kReserved + rng() % (m.tgt_vocab.size() - Vocab::kReserved));
    b.push_back(ex);
  }
  return b;
}

// ---- straight-line oracle: plain loops, no shared kernels ----

using Vec = std::vector<double>;

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

Vec affine(const Matrix& W, const Vec& x, const Vector* b) {
  Vec out(static_cast<std::size_t>(W.rows()), 0.0);
  for (Eigen::Index r = 0; r < W.rows(); ++r) {
    double s = b ? (*b)(r) : 0.0;
    for (Eigen::Index c = 0; c < W.cols(); ++c) s += W(r, c) * x[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = s;
  }
  return out;
}

Vec cat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void lstm(const LstmParams& p, const Vec& x, Vec& h, Vec& c) {
  const std::size_t n = h.size();
  Vec zx = affine(p.W, x, &p.b), zh = affine(p.U, h, nullptr);
  Vec nh(n), nc(n);
  for (std::size_t k = 0; k < n; ++k) {
    double i = sig(zx[k] + zh[k]), f = sig(zx[n + k] + zh[n + k]);
    double g = std::tanh(zx[2 * n + k] + zh[2 * n + k]), o = sig(zx[3 * n + k] + zh[3 * n + k]);
    nc[k] = f * c[k] + i * g;
    nh[k] = o * std::tanh(nc[k]);
  }
  h = nh;
  c = nc;
}

Vec row(const Matrix& E, std::size_t i) {
  Vec out(static_cast<std::size_t>(E.cols()));
  for (Eigen::Index k = 0; k < E.cols(); ++k) out[static_cast<std::size_t>(k)] = E(static_cast<Eigen::Index>(i), k);
  return out;
}

Vec onehot(std::size_t n, std::size_t i) {
  Vec v(n, 0.0);
  v[i] = 1.0;
  return v;
}

double oracle_loss(const Seq2SeqModel& m, const Batch& batch) {
  const bool chr = m.kind == ModelKind::Char;
  double total = 0.0;
  for (const auto& ex : batch) {
    Vec h(m.hidden, 0.0), c(m.hidden, 0.0);
    std::vector<Vec> H;
    for (auto x : ex.src) {
      lstm(m.params.encoder, chr ? onehot(m.src_vocab.size(), x) : row(m.params.Ex, x), h, c);
      H.push_back(h);
    }
    Ids targets = ex.tgt;
    targets.push_back(Vocab::kEos);
    std::size_t prev = Vocab::kBos;
    for (auto y : targets) {
      Vec ey = chr ? onehot(m.tgt_vocab.size(), prev) : row(m.params.Ey, prev);
      Vec out_in;
      if (m.has_attention()) {
        const auto& a = *m.params.attention;
        Vec scores;
        for (const auto& hk : H) {
          Vec z = affine(a.W, cat({ey, h, hk}), &a.b);
          double s = 0.0;
          for (std::size_t k = 0; k < z.size(); ++k) s += a.v(static_cast<Eigen::Index>(k)) * std::tanh(z[k]);
          scores.push_back(s);
        }
        double mx = *std::max_element(scores.begin(), scores.end()), z = 0.0;
        for (double s : scores) z += std::exp(s - mx);
        Vec ctx(m.hidden, 0.0);
        for (std::size_t k = 0; k < H.size(); ++k)
          for (std::size_t d = 0; d < m.hidden; ++d) ctx[d] += std::exp(scores[k] - mx) / z * H[k][d];
        lstm(m.params.decoder, cat({ey, ctx}), h, c);
        out_in = cat({h, ctx, ey});
      } else {
        lstm(m.params.decoder, ey, h, c);
        out_in = chr ? h : cat({h, ey});
      }
      Vec logits = affine(m.params.W_out, out_in, &m.params.b_out);
      double mx = *std::max_element(logits.begin(), logits.end()), z = 0.0;
      for (double l : logits) z += std::exp(l - mx);
      total -= logits[y] - mx - std::log(z);
      prev = y;
    }
  }
  return total / static_cast<double>(batch.size());
}

}  // namespace

// ---- LSTM ----

TEST(LstmStep, ZeroWeightsAndStateGiveZero) {
  LstmParams p{Matrix::Zero(8, 3), Matrix::Zero(8, 2), Vector::Zero(8)};
  auto s = lstm_step(p, Vector::Ones(3), {Vector::Zero(2), Vector::Zero(2)});
  EXPECT_EQ(s.h, Vector::Zero(2));
  EXPECT_EQ(s.c, Vector::Zero(2));
}

TEST(LstmStep, HiddenOutputsBounded) {
  std::mt19937 rng(1);
  std::normal_distribution<double> N(0.0, 5.0);
  for (int t = 0; t < 50; ++t) {
    LstmParams p{Matrix::NullaryExpr(16, 3, [&] { return N(rng); }), Matrix::NullaryExpr(16, 4, [&] { return N(rng); }),
                 Vector::NullaryExpr(16, [&] { return N(rng); })};
    auto s = lstm_step(p, Vector::NullaryExpr(3, [&] { return N(rng); }),
                       {Vector::NullaryExpr(4, [&] { return std::tanh(N(rng)); }), Vector::NullaryExpr(4, [&] { return N(rng); })});
    EXPECT_LT(s.h.cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(LstmStep, DimensionMismatchIsAnError) {
  LstmParams p{Matrix::Zero(8, 3), Matrix::Zero(8, 2), Vector::Zero(8)};
  EXPECT_THROW(lstm_step(p, Vector::Ones(4), {Vector::Zero(2), Vector::Zero(2)}), Error);
}

TEST(LstmStep, BackwardMatchesFiniteDifferences) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto rnd = [&] { return U(rng); };
  LstmParams p{Matrix::NullaryExpr(12, 4, rnd), Matrix::NullaryExpr(12, 3, rnd), Vector::NullaryExpr(12, rnd)};
  Vector x = Vector::NullaryExpr(4, rnd), h0 = Vector::NullaryExpr(3, rnd), c0 = Vector::NullaryExpr(3, rnd);
  Vector wh = Vector::NullaryExpr(3, rnd), wc = Vector::NullaryExpr(3, rnd);
  auto loss = [&] {
    auto s = lstm_step(p, x, {h0, c0});
    return wh.dot(s.h) + wc.dot(s.c);
  };
  LstmCache cache;
  lstm_step(p, x, {h0, c0}, &cache);
  LstmParams g{Matrix::Zero(12, 4), Matrix::Zero(12, 3), Vector::Zero(12)};
  auto in = lstm_step_backward(p, cache, wh, wc, g);

  const double eps = 1e-5;
  double worst = 0.0;
  auto check = [&](double* data, Eigen::Index n, const double* grad) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double keep = data[i];
      data[i] = keep + eps;
      double up = loss();
      data[i] = keep - eps;
      double down = loss();
      data[i] = keep;
      double num = (up - down) / (2 * eps);
      worst = std::max(worst, std::abs(num - grad[i]) / std::max({std::abs(num), std::abs(grad[i]), 1e-6}));
    }
  };
  check(p.W.data(), p.W.size(), g.W.data());
  check(p.U.data(), p.U.size(), g.U.data());
  check(p.b.data(), p.b.size(), g.b.data());
  check(x.data(), x.size(), in.dx.data());
  check(h0.data(), h0.size(), in.dh_prev.data());
  check(c0.data(), c0.size(), in.dc_prev.data());
  EXPECT_LT(worst, 1e-6);
}

// ---- attention ----

TEST(Attention, WeightsSumToOne) {
  std::mt19937 rng(11);
  std::normal_distribution<double> N(0.0, 2.0);
  auto rnd = [&] { return N(rng); };
  for (int t = 0; t < 1000; ++t) {
    Eigen::Index tx = 1 + static_cast<Eigen::Index>(rng() % 9);
    AttentionParams a{Matrix::NullaryExpr(5, 3 + 4 + 4, rnd), Vector::NullaryExpr(5, rnd), Vector::NullaryExpr(5, rnd)};
    auto out = attend(a, Vector::NullaryExpr(3, rnd), Vector::NullaryExpr(4, rnd), Matrix::NullaryExpr(4, tx, rnd));
    EXPECT_NEAR(out.alpha.sum(), 1.0, 1e-9);
    EXPECT_GE(out.alpha.minCoeff(), 0.0);
  }
}

TEST(Attention, SingleSourceStateGetsAllWeight) {
  AttentionParams a{Matrix::Random(5, 11), Vector::Random(5), Vector::Random(5)};
  Matrix H = Matrix::Random(4, 1);
  auto out = attend(a, Vector::Random(3), Vector::Random(4), H);
  ASSERT_EQ(out.alpha.size(), 1);
  EXPECT_EQ(out.alpha(0), 1.0);
  EXPECT_TRUE(out.context.isApprox(H.col(0), 1e-15));
}

TEST(Attention, IdenticalScoresAreUniform) {
  AttentionParams a{Matrix::Random(5, 11), Vector::Random(5), Vector::Random(5)};
  Vector col = Vector::Random(4);
  Matrix H(4, 5);
  for (int k = 0; k < 5; ++k) H.col(k) = col;
  auto out = attend(a, Vector::Random(3), Vector::Random(4), H);
  for (int k = 0; k < 5; ++k) EXPECT_NEAR(out.alpha(k), 0.2, 1e-12);
}

TEST(Attention, BackwardMatchesFiniteDifferences) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto rnd = [&] { return U(rng); };
  AttentionParams a{Matrix::NullaryExpr(5, 3 + 4 + 4, rnd), Vector::NullaryExpr(5, rnd), Vector::NullaryExpr(5, rnd)};
  Vector ey = Vector::NullaryExpr(3, rnd), s = Vector::NullaryExpr(4, rnd), w = Vector::NullaryExpr(4, rnd);
  Matrix H = Matrix::NullaryExpr(4, 3, rnd);
  auto loss = [&] { return w.dot(attend(a, ey, s, H).context); };
  auto fwd = attend(a, ey, s, H);
  AttentionParams g{Matrix::Zero(5, 11), Vector::Zero(5), Vector::Zero(5)};
  auto in = attend_backward(a, ey, s, H, fwd, w, g);

  const double eps = 1e-5;
  double worst = 0.0;
  auto check = [&](double* data, Eigen::Index n, const double* grad) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double keep = data[i];
      data[i] = keep + eps;
      double up = loss();
      data[i] = keep - eps;
      double down = loss();
      data[i] = keep;
      double num = (up - down) / (2 * eps);
      worst = std::max(worst, std::abs(num - grad[i]) / std::max({std::abs(num), std::abs(grad[i]), 1e-6}));
    }
  };
  check(a.W.data(), a.W.size(), g.W.data());
  check(a.b.data(), a.b.size(), g.b.data());
  check(a.v.data(), a.v.size(), g.v.data());
  check(ey.data(), ey.size(), in.dey.data());
  check(s.data(), s.size(), in.ds_prev.data());
  check(H.data(), H.size(), in.dH.data());
  EXPECT_LT(worst, 1e-6);
}

// ---- encoder / decoder step ----

TEST(Encode, ShapesAndOrderSensitivity) {
  auto m = small_word_model(true);
  EXPECT_EQ(encode(m, {5}).H.cols(), 1);
  auto a = encode(m, {5, 6}), b = encode(m, {6, 5});
  EXPECT_FALSE(a.H.isApprox(b.H));
  EXPECT_THROW(encode(m, {}), Error);
}

TEST(Encode, ZeroModelGivesZeroStates) {
  auto m = small_word_model(true);
  for (auto& r : m.params.refs()) std::fill(r.data, r.data + r.size, 0.0);
  EXPECT_EQ(encode(m, {4, 5, 6}).H, Matrix::Zero(6, 3));
}

TEST(DecodeStep, DistributionProperties) {
  auto m = small_word_model(true);
  auto enc = encode(m, {4, 7});
  auto st = decode_step(m, Vocab::kBos, enc.final, enc.H.col(0));
  EXPECT_NEAR(st.probs.sum(), 1.0, 1e-9);

  m.params.W_out.setZero();
  m.params.b_out.setZero();
  auto uni = decode_step(m, Vocab::kBos, enc.final, enc.H.col(0));
  for (Eigen::Index k = 0; k < uni.probs.size(); ++k) EXPECT_NEAR(uni.probs(k), 1.0 / 10.0, 1e-15);
}

TEST(Softmax, ShiftInvariance) {
  std::mt19937 rng(4);
  std::normal_distribution<double> N(0.0, 3.0);
  for (int t = 0; t < 100; ++t) {
    Vector l = Vector::NullaryExpr(7, [&] { return N(rng); });
    Vector shifted = l.array() + 123.0;
    Eigen::Index a, b;
    softmax(l).maxCoeff(&a);
    softmax(shifted).maxCoeff(&b);
    EXPECT_EQ(a, b);
    EXPECT_NEAR(softmax(l).sum(), 1.0, 1e-9);
  }
}

// ---- loss ----

TEST(NllLoss, UniformOutputGivesLogVocab) {
  auto m = small_word_model(true);
  m.params.W_out.setZero();
  m.params.b_out.setZero();
  // per sentence the loss is (|y| + 1) ln|V|
  Batch b = {{{4, 5}, {}}, {{6}, {}}};
  EXPECT_NEAR(nll_loss(m, b), std::log(10.0), 1e-9);
  Batch longer = {{{4, 5}, {7, 8}}};
  EXPECT_NEAR(nll_loss(m, longer), 3.0 * std::log(10.0), 1e-9);
}

TEST(NllLoss, PerfectPredictionGivesZero) {
  auto m = small_word_model(false);
  m.params.W_out.setZero();
  m.params.b_out.setZero();
  m.params.b_out(Vocab::kEos) = 800.0;
  EXPECT_EQ(nll_loss(m, {{{4}, {}}, {{5, 6}, {}}}), 0.0);
}

TEST(NllLoss, MatchesStraightLineOracle) {
  for (bool att : {true, false}) {
    auto m = small_word_model(att, 5);
    auto b = toy_batch(m, 2);
    EXPECT_NEAR(nll_loss(m, b), oracle_loss(m, b), 1e-12) << "attention " << att;
  }
  auto c = small_char_model(5);
  auto b = toy_batch(c, 3);
  EXPECT_NEAR(nll_loss(c, b), oracle_loss(c, b), 1e-12);
}

TEST(NllLoss, EqualsCrossEntropyOfStepDistributions) {
  auto m = small_word_model(true, 8);
  auto b = toy_batch(m, 6);
  double ce = 0.0;
  for (const auto& ex : b) {
    auto enc = encode(m, ex.src);
    LstmState s = enc.final;
    std::size_t prev = Vocab::kBos;
    Ids targets = ex.tgt;
    targets.push_back(Vocab::kEos);
    for (auto y : targets) {
      auto att = attend(*m.params.attention, m.params.Ey.row(static_cast<Eigen::Index>(prev)).transpose(), s.h, enc.H);
      auto st = decode_step(m, prev, s, att.context);
      Vector target = Vector::Zero(st.probs.size());
      target(static_cast<Eigen::Index>(y)) = 1.0;
      ce -= target.dot(st.probs.array().log().matrix());
      s = st.state;
      prev = y;
    }
  }
  EXPECT_NEAR(nll_loss(m, b), ce / static_cast<double>(b.size()), 1e-12);
}

TEST(NllLoss, PaddingContributesNothing) {
  auto m = small_word_model(true, 4);
  auto b = toy_batch(m, 12, 4);
  auto padded = pad_batch(b);
  EXPECT_EQ(nll_loss(m, b), nll_loss(m, padded));
  auto g1 = m.params.zeros_like(), g2 = m.params.zeros_like();
  nll_loss_with_gradients(m, b, g1);
  nll_loss_with_gradients(m, padded, g2);
  auto r1 = g1.refs(), r2 = g2.refs();
  for (std::size_t t = 0; t < r1.size(); ++t) {
    for (std::size_t k = 0; k < r1[t].size; ++k) EXPECT_EQ(r1[t].data[k], r2[t].data[k]) << r1[t].name;
  }
}

// ---- gradient check ----

TEST(GradCheck, WordModelWithAttention) {
  auto m = small_word_model(true, 2, 16, 0.3);
  auto r = grad_check(m, toy_batch(m, 3));
  EXPECT_GE(r.checked, 200u);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_tensor;
  for (const char* t : {"Ex", "Ey", "enc.W", "enc.U", "dec.W", "att.W", "att.v", "W_out", "b_out"}) {
    EXPECT_NE(std::find(r.tensors.begin(), r.tensors.end(), t), r.tensors.end()) << t;
  }
}

TEST(GradCheck, WordModelWithoutAttentionAndCharModel) {
  auto m = small_word_model(false, 2, 16, 0.3);
  EXPECT_LT(grad_check(m, toy_batch(m, 4)).max_rel_error, 1e-4);
  auto c = small_char_model(2);
  EXPECT_LT(grad_check(c, toy_batch(c, 4)).max_rel_error, 1e-4);
}

TEST(GradCheck, DetectsCorruptedOutputGradient) {
  auto m = small_word_model(true, 2, 16, 0.3);
  GradCheckOptions opts;
  opts.corrupt = [](Parameters& g) { g.W_out *= 1.5; };
  auto r = grad_check(m, toy_batch(m, 3), opts);
  EXPECT_GT(r.max_rel_error, 1e-2);
  EXPECT_EQ(r.worst_tensor, "W_out");
}

TEST(Gradients, UntouchedEmbeddingRowsAreZero) {
  auto m = small_word_model(true, 2);
  Batch b = {{{4, 5}, {6}}};
  auto g = m.params.zeros_like();
  nll_loss_with_gradients(m, b, g);
  for (Eigen::Index r = 0; r < g.Ex.rows(); ++r) {
    bool used = r == 4 || r == 5;
    EXPECT_EQ(g.Ex.row(r).isZero(0.0), !used) << r;
  }
  for (Eigen::Index r = 0; r < g.Ey.rows(); ++r) {
    bool used = r == Vocab::kBos || r == 6;  // decoder inputs: BOS, then the gold token
    EXPECT_EQ(g.Ey.row(r).isZero(0.0), !used) << r;
  }
}

// ---- optimizer ----

TEST(RmsProp, ZeroGradientLeavesParameters) {
  auto m = small_word_model(true);
  auto before = m.params;
  auto g = m.params.zeros_like();
  auto st = make_rmsprop_state(m.params);
  rmsprop_update(m.params, g, st, 0.1);
  EXPECT_EQ(m.params.W_out, before.W_out);
  EXPECT_EQ(m.params.encoder.W, before.encoder.W);
}

TEST(RmsProp, FirstStepMatchesHandComputation) {
  auto m = small_word_model(false);
  auto before = m.params;
  auto g = m.params.zeros_like();
  for (auto& r : g.refs()) std::fill(r.data, r.data + r.size, -0.3);
  auto st = make_rmsprop_state(m.params);
  rmsprop_update(m.params, g, st, 0.01);
  double expected = -0.01 * -0.3 / std::sqrt(0.1 * 0.09 + 1e-8);
  EXPECT_NEAR(m.params.b_out(0) - before.b_out(0), expected, 1e-15);
  EXPECT_NEAR(expected, 0.01 / std::sqrt(0.1), 1e-6);
  for (auto& r : st.acc.refs())
    for (std::size_t k = 0; k < r.size; ++k) EXPECT_GE(r.data[k], 0.0);
}

TEST(RmsProp, NonFiniteGradientAborts) {
  auto m = small_word_model(false);
  auto g = m.params.zeros_like();
  g.W_out(0, 0) = std::numeric_limits<double>::quiet_NaN();
  auto st = make_rmsprop_state(m.params);
  try {
    rmsprop_update(m.params, g, st, 0.01);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Numeric);
  }
}

TEST(ClipGradients, RescalesToMaxNorm) {
  auto m = small_word_model(false);
  auto g = m.params.zeros_like();
  for (auto& r : g.refs()) std::fill(r.data, r.data + r.size, 1.0);
  double before = clip_gradients(g, 5.0);
  EXPECT_NEAR(before, std::sqrt(static_cast<double>(g.count())), 1e-9);
  EXPECT_NEAR(std::sqrt(g.squared_norm()), 5.0, 1e-9);
  EXPECT_NEAR(clip_gradients(g, 10.0), 5.0, 1e-9);
  EXPECT_NEAR(std::sqrt(g.squared_norm()), 5.0, 1e-9);
}

// ---- configuration and training ----

TEST(TrainConfig, Defaults) {
  auto w = TrainConfig::word_defaults();
  EXPECT_EQ(w.batch_size, 256u);
  EXPECT_EQ(w.epochs, 100u);
  EXPECT_DOUBLE_EQ(w.lr, 0.001);
  EXPECT_EQ(w.optimizer, Optimizer::RmsProp);
  EXPECT_TRUE(w.teacher_forcing);
  auto c = TrainConfig::char_defaults();
  EXPECT_EQ(c.batch_size, 64u);
  EXPECT_EQ(c.epochs, 100u);
  EXPECT_DOUBLE_EQ(c.lr, 0.001);
  EXPECT_FALSE(c.attention);
}

TEST(TrainConfig, ValidationRejectsNonsense) {
  auto c = TrainConfig::word_defaults();
  c.lr = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig::word_defaults();
  c.epochs = 0;
  EXPECT_THROW(c.validate(), Error);
  c = TrainConfig::word_defaults();
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Train, LossDecreasesOverFirstEpochs) {
  auto corpus = testsupport::word_toy_corpus();
  auto cfg = TrainConfig::word_defaults();
  cfg.hidden = 64;
  cfg.embed_dim = 32;
  cfg.batch_size = 10;
  cfg.epochs = 5;
  std::vector<double> losses;
  train_word_nmt(corpus, cfg, [&](std::size_t, double l, const Seq2SeqModel&) {
    losses.push_back(l);
    return true;
  });
  ASSERT_EQ(losses.size(), 5u);
  for (std::size_t i = 1; i < losses.size(); ++i) EXPECT_LT(losses[i], losses[i - 1]);
}

TEST(Train, SameSeedGivesBitIdenticalParameters) {
  auto corpus = testsupport::word_toy_corpus(20);
  auto cfg = TrainConfig::word_defaults();
  cfg.hidden = 8;
  cfg.embed_dim = 4;
  cfg.batch_size = 6;
  cfg.epochs = 3;
  auto a = train_word_nmt(corpus, cfg), b = train_word_nmt(corpus, cfg);
  EXPECT_EQ(a.serialize(), b.serialize());
  cfg.seed = 2;
  EXPECT_NE(train_word_nmt(corpus, cfg).serialize(), a.serialize());
}

TEST(Train, EmptyCorpusIsAnError) {
  corpus::ParallelCorpus empty;
  EXPECT_THROW(train_word_nmt(empty, TrainConfig::word_defaults()), Error);
  EXPECT_THROW(train_char_nmt(empty, TrainConfig::char_defaults()), Error);
}

TEST(CharVocab, ObservedCharactersPlusReserved) {
  auto v = build_char_vocab({"abca", "ক"});
  EXPECT_EQ(v.size(), Vocab::kReserved + 4);
  EXPECT_TRUE(v.contains("ক"));
  EXPECT_EQ(v.symbol(Vocab::kUnk), "<unk>");
}

TEST(TranslateGreedy, OverfitSinglePairIsReproduced) {
  auto corpus = testsupport::make_corpus({{"a b c", "x y z w"}});
  auto cfg = TrainConfig::word_defaults();
  cfg.hidden = 16;
  cfg.embed_dim = 8;
  cfg.batch_size = 1;
  cfg.epochs = 200;
  cfg.lr = 0.01;
  auto m = train_word_nmt(corpus, cfg);
  EXPECT_EQ(translate_greedy(m, "a b c"), "x y z w");
  EXPECT_EQ(translate_greedy(m, "a b c"), translate_greedy(m, "a b c"));
}

TEST(TranslateGreedy, OutputBoundedByMaxLen) {
  auto m = small_word_model(true, 9);
  m.params.W_out.setZero();
  m.params.b_out.setZero();
  m.params.b_out(5) = 50.0;  // never emits EOS
  for (std::size_t max_len : {1u, 3u, 10u}) EXPECT_EQ(greedy_ids(m, {4, 5}, max_len).size(), max_len);
}

// ---- checkpoints ----

TEST(Checkpoint, RoundTripIsBitExact) {
  for (auto m : {small_word_model(true), small_word_model(false), small_char_model()}) {
    auto bytes = m.serialize();
    EXPECT_EQ(bytes.rfind("MINIMT1", 0), 0u);
    auto back = Seq2SeqModel::parse(bytes);
    EXPECT_EQ(back.serialize(), bytes);
    EXPECT_EQ(back.src_vocab, m.src_vocab);
    EXPECT_EQ(back.has_attention(), m.has_attention());
  }
  testsupport::TempDir dir;
  auto m = small_word_model(true);
  m.save(dir / "m.bin");
  EXPECT_EQ(Seq2SeqModel::load(dir / "m.bin").serialize(), m.serialize());
}

TEST(Checkpoint, CorruptInputIsRejected) {
  auto bytes = small_word_model(true).serialize();
  EXPECT_THROW(Seq2SeqModel::parse("NOTMINIMT"), Error);
  EXPECT_THROW(Seq2SeqModel::parse(bytes.substr(0, bytes.size() - 3)), Error);
}

TEST(MakeExamples, TruncatesLongSequences) {
  auto corpus = testsupport::make_corpus({{"a b c d e", "x y z"}});
  ModelShape shape{ModelKind::Word, 4, 4, true};
  auto m = init_model(corpus::build_vocab(corpus.sources()), corpus::build_vocab(corpus.targets()), shape, 1);
  auto ex = make_examples(m, corpus, 2);
  ASSERT_EQ(ex.size(), 1u);
  EXPECT_EQ(ex[0].src.size(), 2u);
  EXPECT_EQ(ex[0].tgt.size(), 2u);
}

TEST(InitModel, CharModelsCannotUseAttention) {
  ModelShape shape{ModelKind::Char, 0, 4, true};
  EXPECT_THROW(init_model(vocab_of_size(6, "c"), vocab_of_size(6, "c"), shape, 1), Error);
}
