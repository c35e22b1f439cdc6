#include "minimt/nmt.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <json.hpp>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt::nmt {

using corpus::Vocab;

std::string to_string(ModelKind kind) { return kind == ModelKind::Word ? "word" : "char"; }

ModelKind parse_kind(const std::string& name) {
  if (name == "word") return ModelKind::Word;
  if (name == "char") return ModelKind::Char;
  usage_error("unknown model kind '" + name + "' (expected word or char)");
}

namespace {

Vector sigmoid(const Vector& z) { return (1.0 + (-z.array()).exp()).inverse().matrix(); }

Vector one_hot(std::size_t size, std::size_t index) {
  Vector v = Vector::Zero(static_cast<Eigen::Index>(size));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return v;
}

std::size_t argmax(const Vector& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<std::size_t>(best);
}

double log_softmax_at(const Vector& logits, std::size_t k) {
  double m = logits.maxCoeff();
  return logits(static_cast<Eigen::Index>(k)) - m - std::log((logits.array() - m).exp().sum());
}

}  // namespace

Vector softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

LstmState lstm_step(const LstmParams& p, const Vector& x, const LstmState& state, LstmCache* cache) {
  const auto h = static_cast<Eigen::Index>(p.hidden());
  if (x.size() != p.W.cols() || state.h.size() != h || state.c.size() != h || p.W.rows() != 4 * h ||
      p.b.size() != 4 * h) {
    usage_error("lstm_step: dimension mismatch");
  }
  Vector z = p.W * x + p.U * state.h + p.b;
  Vector i = sigmoid(z.segment(0, h));
  Vector f = sigmoid(z.segment(h, h));
  Vector g = z.segment(2 * h, h).array().tanh().matrix();
  Vector o = sigmoid(z.segment(3 * h, h));
  Vector c = f.cwiseProduct(state.c) + i.cwiseProduct(g);
  Vector tc = c.array().tanh().matrix();
  LstmState out{o.cwiseProduct(tc), c};
  if (cache) {
    cache->x = x;
    cache->h_prev = state.h;
    cache->c_prev = state.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c = std::move(c);
    cache->tanh_c = std::move(tc);
  }
  return out;
}

LstmInputGrads lstm_step_backward(const LstmParams& p, const LstmCache& k, const Vector& dh, const Vector& dc_in,
                                  LstmParams& grads) {
  const auto h = static_cast<Eigen::Index>(p.hidden());
  Vector dc = dc_in + dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());
  Vector dz(4 * h);
  dz.segment(0, h) = dc.cwiseProduct(k.g).array() * k.i.array() * (1.0 - k.i.array());
  dz.segment(h, h) = dc.cwiseProduct(k.c_prev).array() * k.f.array() * (1.0 - k.f.array());
  dz.segment(2 * h, h) = dc.cwiseProduct(k.i).array() * (1.0 - k.g.array().square());
  dz.segment(3 * h, h) = dh.cwiseProduct(k.tanh_c).array() * k.o.array() * (1.0 - k.o.array());
  grads.W.noalias() += dz * k.x.transpose();
  grads.U.noalias() += dz * k.h_prev.transpose();
  grads.b += dz;
  return {p.W.transpose() * dz, p.U.transpose() * dz, dc.cwiseProduct(k.f)};
}

Attention attend(const AttentionParams& att, const Vector& ey, const Vector& s_prev, const Matrix& H) {
  if (H.cols() == 0) usage_error("attend: no encoder states");
  const Eigen::Index e = ey.size(), h = s_prev.size();
  if (att.W.cols() != e + h + H.rows()) usage_error("attend: dimension mismatch");
  Vector shared = att.W.leftCols(e) * ey + att.W.middleCols(e, h) * s_prev + att.b;
  Matrix pre = att.W.rightCols(H.rows()) * H;
  pre.colwise() += shared;
  Attention out;
  out.hidden = pre.array().tanh().matrix();
  out.scores = out.hidden.transpose() * att.v;
  out.alpha = softmax(out.scores);
  out.context = H * out.alpha;
  return out;
}

AttentionInputGrads attend_backward(const AttentionParams& att, const Vector& ey, const Vector& s_prev,
                                    const Matrix& H, const Attention& fwd, const Vector& dcontext,
                                    AttentionParams& grads) {
  const Eigen::Index e = ey.size(), h = s_prev.size();
  Vector dalpha = H.transpose() * dcontext;
  Vector dscores = fwd.alpha.cwiseProduct((dalpha.array() - fwd.alpha.dot(dalpha)).matrix());
  grads.v.noalias() += fwd.hidden * dscores;
  Matrix dpre = (att.v * dscores.transpose()).cwiseProduct((1.0 - fwd.hidden.array().square()).matrix());
  Vector row_sum = dpre.rowwise().sum();
  grads.W.leftCols(e).noalias() += row_sum * ey.transpose();
  grads.W.middleCols(e, h).noalias() += row_sum * s_prev.transpose();
  grads.W.rightCols(H.rows()).noalias() += dpre * H.transpose();
  grads.b += row_sum;
  AttentionInputGrads out;
  out.dey = att.W.leftCols(e).transpose() * row_sum;
  out.ds_prev = att.W.middleCols(e, h).transpose() * row_sum;
  out.dH = att.W.rightCols(H.rows()).transpose() * dpre + dcontext * fwd.alpha.transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

std::vector<Parameters::Ref> Parameters::refs() {
  std::vector<Ref> out;
  auto add = [&](const std::string& name, auto& t) {
    out.push_back({name, t.data(), static_cast<std::size_t>(t.size()), static_cast<std::size_t>(t.rows()),
                   static_cast<std::size_t>(t.cols())});
  };
  add("Ex", Ex);
  add("Ey", Ey);
  add("enc.W", encoder.W);
  add("enc.U", encoder.U);
  add("enc.b", encoder.b);
  add("dec.W", decoder.W);
  add("dec.U", decoder.U);
  add("dec.b", decoder.b);
  if (attention) {
    add("att.W", attention->W);
    add("att.b", attention->b);
    add("att.v", attention->v);
  }
  add("W_out", W_out);
  add("b_out", b_out);
  return out;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  for (const auto& r : const_cast<Parameters*>(this)->refs()) n += r.size;
  return n;
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  z.set_zero();
  return z;
}

void Parameters::set_zero() {
  for (auto& r : refs()) std::fill(r.data, r.data + r.size, 0.0);
}

double Parameters::squared_norm() const {
  double s = 0.0;
  for (const auto& r : const_cast<Parameters*>(this)->refs()) {
    for (std::size_t k = 0; k < r.size; ++k) s += r.data[k] * r.data[k];
  }
  return s;
}

void Parameters::scale(double factor) {
  for (auto& r : refs()) {
    for (std::size_t k = 0; k < r.size; ++k) r.data[k] *= factor;
  }
}

// ---------------------------------------------------------------------------
// Model

std::size_t Seq2SeqModel::decoder_input_dim() const {
  if (kind == ModelKind::Char) return tgt_vocab.size();
  return embed_dim + (has_attention() ? hidden : 0);
}

std::size_t Seq2SeqModel::output_input_dim() const {
  if (kind == ModelKind::Char) return hidden;
  return hidden + (has_attention() ? hidden : 0) + embed_dim;
}

Seq2SeqModel init_model(const Vocab& src, const Vocab& tgt, const ModelShape& shape, std::uint64_t seed,
                        double range) {
  if (shape.hidden < 1) usage_error("hidden size must be >= 1");
  if (shape.kind == ModelKind::Word && shape.embed_dim < 1) usage_error("embedding size must be >= 1");
  if (shape.kind == ModelKind::Char && shape.attention) usage_error("character models have no attention");
  Seq2SeqModel m;
  m.kind = shape.kind;
  m.src_vocab = src;
  m.tgt_vocab = tgt;
  m.hidden = shape.hidden;
  m.embed_dim = shape.kind == ModelKind::Word ? shape.embed_dim : 0;
  const auto h = static_cast<Eigen::Index>(shape.hidden);
  const auto e = static_cast<Eigen::Index>(m.embed_dim);
  const auto vs = static_cast<Eigen::Index>(src.size()), vt = static_cast<Eigen::Index>(tgt.size());
  auto& p = m.params;
  if (shape.kind == ModelKind::Word) {
    p.Ex = Matrix::Zero(vs, e);
    p.Ey = Matrix::Zero(vt, e);
    if (shape.attention) p.attention = AttentionParams{Matrix::Zero(h, e + 2 * h), Vector::Zero(h), Vector::Zero(h)};
  }
  auto lstm = [&](Eigen::Index in) { return LstmParams{Matrix::Zero(4 * h, in), Matrix::Zero(4 * h, h), Vector::Zero(4 * h)}; };
  p.encoder = lstm(shape.kind == ModelKind::Word ? e : vs);
  p.decoder = lstm(static_cast<Eigen::Index>(m.decoder_input_dim()));
  p.W_out = Matrix::Zero(vt, static_cast<Eigen::Index>(m.output_input_dim()));
  p.b_out = Vector::Zero(vt);

  Rng rng(seed);
  for (auto& r : p.refs()) {
    for (std::size_t k = 0; k < r.size; ++k) r.data[k] = rng.uniform(-range, range);
  }
  p.encoder.b.segment(h, h).setOnes();
  p.decoder.b.segment(h, h).setOnes();
  return m;
}

Vocab build_char_vocab(const std::vector<std::string>& texts) {
  std::vector<std::vector<std::string>> chars;
  chars.reserve(texts.size());
  for (const auto& t : texts) chars.push_back(corpus::split_chars(t));
  return corpus::build_vocab(chars, 1);
}

namespace {

std::vector<std::string> source_symbols(ModelKind kind, const std::string& text) {
  return kind == ModelKind::Char ? corpus::split_chars(text) : split_ws(text);
}

Ids strip_pad(const Ids& ids) {
  Ids out;
  out.reserve(ids.size());
  for (auto i : ids) {
    if (i != Vocab::kPad) out.push_back(i);
  }
  return out;
}

}  // namespace

std::vector<Example> make_examples(const Seq2SeqModel& model, const corpus::ParallelCorpus& corpus,
                                   std::size_t max_len) {
  std::vector<Example> out;
  std::size_t truncated = 0;
  for (const auto& p : corpus.pairs()) {
    auto src = source_symbols(model.kind, p.source.text());
    auto tgt = source_symbols(model.kind, p.target.text());
    if (src.size() > max_len || tgt.size() > max_len) ++truncated;
    if (src.size() > max_len) src.resize(max_len);
    if (tgt.size() > max_len) tgt.resize(max_len);
    out.push_back({model.src_vocab.encode(src), model.tgt_vocab.encode(tgt)});
  }
  if (truncated) log_warning(std::to_string(truncated) + " pairs truncated to " + std::to_string(max_len) + " symbols");
  return out;
}

Ids encode_source(const Seq2SeqModel& model, const std::string& text) {
  return model.src_vocab.encode(source_symbols(model.kind, text));
}

Batch pad_batch(const Batch& batch) {
  std::size_t ls = 0, lt = 0;
  for (const auto& ex : batch) {
    ls = std::max(ls, ex.src.size());
    lt = std::max(lt, ex.tgt.size());
  }
  Batch out = batch;
  for (auto& ex : out) {
    ex.src.resize(ls, Vocab::kPad);
    ex.tgt.resize(lt, Vocab::kPad);
  }
  return out;
}

namespace {

Vector src_input(const Seq2SeqModel& m, std::size_t id) {
  if (id >= m.src_vocab.size()) usage_error("source index out of vocabulary range");
  if (m.kind == ModelKind::Char) return one_hot(m.src_vocab.size(), id);
  return m.params.Ex.row(static_cast<Eigen::Index>(id)).transpose();
}

Vector tgt_embed(const Seq2SeqModel& m, std::size_t id) {
  if (id >= m.tgt_vocab.size()) usage_error("target index out of vocabulary range");
  if (m.kind == ModelKind::Char) return one_hot(m.tgt_vocab.size(), id);
  return m.params.Ey.row(static_cast<Eigen::Index>(id)).transpose();
}

Vector concat(std::initializer_list<const Vector*> parts) {
  Eigen::Index n = 0;
  for (const auto* p : parts) n += p->size();
  Vector out(n);
  Eigen::Index at = 0;
  for (const auto* p : parts) {
    out.segment(at, p->size()) = *p;
    at += p->size();
  }
  return out;
}

struct EncoderTrace {
  std::vector<LstmCache> steps;
};

Encoded run_encoder(const Seq2SeqModel& m, const Ids& src, EncoderTrace* trace) {
  if (src.empty()) data_error("cannot encode an empty source sequence");
  const auto h = static_cast<Eigen::Index>(m.hidden);
  Encoded out;
  out.H.resize(h, static_cast<Eigen::Index>(src.size()));
  LstmState st{Vector::Zero(h), Vector::Zero(h)};
  if (trace) trace->steps.resize(src.size());
  for (std::size_t t = 0; t < src.size(); ++t) {
    st = lstm_step(m.params.encoder, src_input(m, src[t]), st, trace ? &trace->steps[t] : nullptr);
    out.H.col(static_cast<Eigen::Index>(t)) = st.h;
  }
  out.final = st;
  return out;
}

struct StepTrace {
  std::size_t input = 0;
  Vector ey;
  Attention att;
  LstmCache lstm;
  Vector out_in;
  Vector probs;
};

// Attention (from s_prev), decoder LSTM, output distribution.
LstmState step_forward(const Seq2SeqModel& m, std::size_t y_prev, const LstmState& s_prev, const Matrix& H,
                       StepTrace& st, bool keep_cache) {
  st.input = y_prev;
  st.ey = tgt_embed(m, y_prev);
  LstmState next;
  if (m.kind == ModelKind::Char) {
    next = lstm_step(m.params.decoder, st.ey, s_prev, keep_cache ? &st.lstm : nullptr);
    st.out_in = next.h;
  } else if (m.has_attention()) {
    st.att = attend(*m.params.attention, st.ey, s_prev.h, H);
    next = lstm_step(m.params.decoder, concat({&st.ey, &st.att.context}), s_prev, keep_cache ? &st.lstm : nullptr);
    st.out_in = concat({&next.h, &st.att.context, &st.ey});
  } else {
    next = lstm_step(m.params.decoder, st.ey, s_prev, keep_cache ? &st.lstm : nullptr);
    st.out_in = concat({&next.h, &st.ey});
  }
  Vector logits = m.params.W_out * st.out_in + m.params.b_out;
  st.probs = softmax(logits);
  return next;
}

struct SentenceTrace {
  Ids src;
  Ids targets;
  Encoded enc;
  EncoderTrace enc_trace;
  std::vector<StepTrace> steps;
};

// Returns -sum_t ln p(target_t); fills `trace` for backprop when given.
double sentence_forward(const Seq2SeqModel& m, const Example& ex, bool teacher_forcing, SentenceTrace& tr,
                        bool keep_cache, std::size_t* correct = nullptr) {
  tr.src = strip_pad(ex.src);
  tr.targets = strip_pad(ex.tgt);
  tr.targets.push_back(Vocab::kEos);
  tr.enc = run_encoder(m, tr.src, keep_cache ? &tr.enc_trace : nullptr);
  tr.steps.assign(tr.targets.size(), StepTrace{});
  LstmState s = tr.enc.final;
  double loss = 0.0;
  std::size_t y_prev = Vocab::kBos;
  for (std::size_t t = 0; t < tr.targets.size(); ++t) {
    s = step_forward(m, y_prev, s, tr.enc.H, tr.steps[t], keep_cache);
    const auto& p = tr.steps[t].probs;
    double pt = p(static_cast<Eigen::Index>(tr.targets[t]));
    loss -= pt > 0.0 ? std::log(pt) : log_softmax_at(m.params.W_out * tr.steps[t].out_in + m.params.b_out, tr.targets[t]);
    std::size_t predicted = argmax(p);
    if (correct && predicted == tr.targets[t]) ++*correct;
    y_prev = teacher_forcing ? tr.targets[t] : predicted;
  }
  return loss;
}

void sentence_backward(const Seq2SeqModel& m, const SentenceTrace& tr, double scale, Parameters& g) {
  const auto h = static_cast<Eigen::Index>(m.hidden);
  const auto e = static_cast<Eigen::Index>(m.embed_dim);
  const Matrix& H = tr.enc.H;
  Matrix dH = Matrix::Zero(H.rows(), H.cols());
  Vector ds = Vector::Zero(h), dc = Vector::Zero(h);
  for (std::size_t t = tr.steps.size(); t-- > 0;) {
    const auto& st = tr.steps[t];
    Vector dlogits = st.probs;
    dlogits(static_cast<Eigen::Index>(tr.targets[t])) -= 1.0;
    dlogits *= scale;
    g.W_out.noalias() += dlogits * st.out_in.transpose();
    g.b_out += dlogits;
    Vector dout = m.params.W_out.transpose() * dlogits;

    Vector dh = ds + dout.head(h);
    auto li = lstm_step_backward(m.params.decoder, st.lstm, dh, dc, g.decoder);
    ds = li.dh_prev;
    dc = li.dc_prev;
    if (m.kind == ModelKind::Char) continue;

    Vector dey = dout.tail(e) + li.dx.head(e);
    if (m.has_attention()) {
      Vector dctx = dout.segment(h, h) + li.dx.tail(h);
      auto ag = attend_backward(*m.params.attention, st.ey, st.lstm.h_prev, H, st.att, dctx, *g.attention);
      dey += ag.dey;
      ds += ag.ds_prev;
      dH += ag.dH;
    }
    g.Ey.row(static_cast<Eigen::Index>(st.input)) += dey.transpose();
  }
  for (std::size_t k = tr.src.size(); k-- > 0;) {
    Vector dh = ds + dH.col(static_cast<Eigen::Index>(k));
    auto li = lstm_step_backward(m.params.encoder, tr.enc_trace.steps[k], dh, dc, g.encoder);
    ds = li.dh_prev;
    dc = li.dc_prev;
    if (m.kind == ModelKind::Word) g.Ex.row(static_cast<Eigen::Index>(tr.src[k])) += li.dx.transpose();
  }
}

}  // namespace

Encoded encode(const Seq2SeqModel& model, const Ids& src) { return run_encoder(model, src, nullptr); }

DecodeStep decode_step(const Seq2SeqModel& m, std::size_t y_prev, const LstmState& s_prev, const Vector& context) {
  Vector ey = tgt_embed(m, y_prev);
  DecodeStep out;
  if (m.kind == ModelKind::Char) {
    out.state = lstm_step(m.params.decoder, ey, s_prev);
    out.logits = m.params.W_out * out.state.h + m.params.b_out;
  } else if (m.has_attention()) {
    if (context.size() != static_cast<Eigen::Index>(m.hidden)) usage_error("decode_step: context size mismatch");
    out.state = lstm_step(m.params.decoder, concat({&ey, &context}), s_prev);
    out.logits = m.params.W_out * concat({&out.state.h, &context, &ey}) + m.params.b_out;
  } else {
    out.state = lstm_step(m.params.decoder, ey, s_prev);
    out.logits = m.params.W_out * concat({&out.state.h, &ey}) + m.params.b_out;
  }
  out.probs = softmax(out.logits);
  return out;
}

double nll_loss(const Seq2SeqModel& model, const Batch& batch, const LossOptions& opts) {
  if (batch.empty()) data_error("empty batch");
  double total = 0.0;
  SentenceTrace tr;
  for (const auto& ex : batch) total += sentence_forward(model, ex, opts.teacher_forcing, tr, false);
  return total / static_cast<double>(batch.size());
}

double nll_loss_with_gradients(const Seq2SeqModel& model, const Batch& batch, Parameters& grads,
                               const LossOptions& opts) {
  if (batch.empty()) data_error("empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  SentenceTrace tr;
  for (const auto& ex : batch) {
    total += sentence_forward(model, ex, opts.teacher_forcing, tr, true);
    sentence_backward(model, tr, scale, grads);
  }
  return total * scale;
}

double next_token_accuracy(const Seq2SeqModel& model, const std::vector<Example>& examples) {
  std::size_t correct = 0, total = 0;
  SentenceTrace tr;
  for (const auto& ex : examples) {
    sentence_forward(model, ex, true, tr, false, &correct);
    total += tr.targets.size();
  }
  return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// ---------------------------------------------------------------------------
// Training

TrainConfig TrainConfig::word_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::char_defaults() {
  TrainConfig c;
  c.batch_size = 64;
  c.attention = false;
  return c;
}

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !std::isfinite(lr)) usage_error("learning rate must be > 0");
  if (epochs < 1) usage_error("epochs must be >= 1");
  if (batch_size < 1) usage_error("batch size must be >= 1");
  if (max_len < 1) usage_error("max_len must be >= 1");
  if (hidden < 1) usage_error("hidden size must be >= 1");
  if (!(clip_norm > 0.0)) usage_error("clip norm must be > 0");
}

RmsPropState make_rmsprop_state(const Parameters& like) { return RmsPropState{like.zeros_like()}; }

namespace {

void check_finite(Parameters& grads) {
  for (auto& r : grads.refs()) {
    for (std::size_t k = 0; k < r.size; ++k) {
      if (!std::isfinite(r.data[k])) {
        throw Error(ErrorKind::Numeric, "non-finite gradient in " + r.name + " at index " + std::to_string(k));
      }
    }
  }
}

}  // namespace

void rmsprop_update(Parameters& params, Parameters& grads, RmsPropState& state, double lr) {
  check_finite(grads);
  auto p = params.refs(), g = grads.refs(), a = state.acc.refs();
  if (p.size() != g.size() || p.size() != a.size()) usage_error("rmsprop_update: parameter layout mismatch");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size != g[t].size || p[t].size != a[t].size) usage_error("rmsprop_update: shape mismatch in " + p[t].name);
    for (std::size_t k = 0; k < p[t].size; ++k) {
      double gk = g[t].data[k];
      double& acc = a[t].data[k];
      acc = RmsPropState::kRho * acc + (1.0 - RmsPropState::kRho) * gk * gk;
      p[t].data[k] -= lr * gk / std::sqrt(acc + RmsPropState::kEps);
    }
  }
}

void sgd_update(Parameters& params, Parameters& grads, double lr) {
  check_finite(grads);
  auto p = params.refs(), g = grads.refs();
  if (p.size() != g.size()) usage_error("sgd_update: parameter layout mismatch");
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size != g[t].size) usage_error("sgd_update: shape mismatch in " + p[t].name);
    for (std::size_t k = 0; k < p[t].size; ++k) p[t].data[k] -= lr * g[t].data[k];
  }
}

double clip_gradients(Parameters& grads, double max_norm) {
  double norm = std::sqrt(grads.squared_norm());
  if (norm > max_norm) grads.scale(max_norm / norm);
  return norm;
}

Seq2SeqModel train(Seq2SeqModel model, const std::vector<Example>& examples, const TrainConfig& cfg,
                   const EpochCallback& on_epoch) {
  cfg.validate();
  if (examples.empty()) data_error("cannot train on an empty corpus");
  Rng rng(cfg.seed ^ 0x6e6d74ULL);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Parameters grads = model.params.zeros_like();
  RmsPropState state = make_rmsprop_state(model.params);
  LossOptions opts{cfg.teacher_forcing};
  Batch batch;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(examples[order[k]]);
      grads.set_zero();
      total += nll_loss_with_gradients(model, batch, grads, opts) * static_cast<double>(batch.size());
      clip_gradients(grads, cfg.clip_norm);
      if (cfg.optimizer == Optimizer::RmsProp) {
        rmsprop_update(model.params, grads, state, cfg.lr);
      } else {
        sgd_update(model.params, grads, cfg.lr);
      }
    }
    double mean = total / static_cast<double>(examples.size());
    if (!std::isfinite(mean)) throw Error(ErrorKind::Numeric, "training loss became non-finite at epoch " + std::to_string(epoch));
    if (on_epoch && !on_epoch(epoch, mean, model)) break;
  }
  return model;
}

namespace {

std::vector<std::string> texts(const std::vector<corpus::Sentence>& sentences) {
  std::vector<std::string> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(s.text());
  return out;
}

}  // namespace

Seq2SeqModel train_word_nmt(const corpus::ParallelCorpus& corpus, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.size() == 0) data_error("cannot train on an empty corpus");
  auto model = init_model(corpus::build_vocab(corpus.sources()), corpus::build_vocab(corpus.targets()),
                          ModelShape{ModelKind::Word, cfg.embed_dim, cfg.hidden, cfg.attention}, cfg.seed,
                          cfg.init_range);
  auto examples = make_examples(model, corpus, cfg.max_len);
  return train(std::move(model), examples, cfg, on_epoch);
}

Seq2SeqModel train_char_nmt(const corpus::ParallelCorpus& corpus, const TrainConfig& cfg,
                            const EpochCallback& on_epoch) {
  cfg.validate();
  if (corpus.size() == 0) data_error("cannot train on an empty corpus");
  auto model = init_model(build_char_vocab(texts(corpus.sources())), build_char_vocab(texts(corpus.targets())),
                          ModelShape{ModelKind::Char, 0, cfg.hidden, false}, cfg.seed, cfg.init_range);
  auto examples = make_examples(model, corpus, cfg.max_len);
  return train(std::move(model), examples, cfg, on_epoch);
}

Ids greedy_ids(const Seq2SeqModel& model, const Ids& src, std::size_t max_len) {
  Ids out;
  auto enc = run_encoder(model, strip_pad(src), nullptr);
  LstmState s = enc.final;
  std::size_t y = Vocab::kBos;
  StepTrace st;
  while (out.size() < max_len) {
    s = step_forward(model, y, s, enc.H, st, false);
    y = argmax(st.probs);
    if (y == Vocab::kEos) break;
    out.push_back(y);
  }
  return out;
}

std::string translate_greedy(const Seq2SeqModel& model, const std::string& source, std::size_t max_len) {
  auto src = encode_source(model, source);
  if (src.empty()) return {};
  auto symbols = model.tgt_vocab.decode(greedy_ids(model, src, max_len));
  return model.kind == ModelKind::Char ? join(symbols, "") : join(symbols);
}

// ---------------------------------------------------------------------------
// Gradient check

GradCheckResult grad_check(const Seq2SeqModel& model, const Batch& batch, const GradCheckOptions& opts) {
  Seq2SeqModel work = model;
  Parameters grads = work.params.zeros_like();
  nll_loss_with_gradients(work, batch, grads);
  if (opts.corrupt) opts.corrupt(grads);

  auto p = work.params.refs();
  auto g = grads.refs();
  std::vector<std::size_t> tensors;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t].size > 0) tensors.push_back(t);
  }
  Rng rng(opts.seed);
  GradCheckResult result;
  std::vector<bool> used(p.size(), false);
  for (std::size_t s = 0; s < opts.samples; ++s) {
    std::size_t t = tensors[s % tensors.size()];
    // Half the draws target coordinates with a non-zero gradient so sparse
    // tensors (embeddings) are exercised where it matters.
    std::size_t k = rng.below(p[t].size);
    if (rng.below(2) == 0) {
      std::vector<std::size_t> nz;
      for (std::size_t j = 0; j < g[t].size; ++j) {
        if (g[t].data[j] != 0.0) nz.push_back(j);
      }
      if (!nz.empty()) k = nz[rng.below(nz.size())];
    }
    double saved = p[t].data[k];
    p[t].data[k] = saved + opts.eps;
    double up = nll_loss(work, batch);
    p[t].data[k] = saved - opts.eps;
    double down = nll_loss(work, batch);
    p[t].data[k] = saved;
    double numeric = (up - down) / (2.0 * opts.eps);
    double analytic = g[t].data[k];
    double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), opts.abs_floor});
    if (rel > result.max_rel_error || result.worst_tensor.empty()) {
      result.max_rel_error = rel;
      result.worst_tensor = p[t].name;
    }
    used[t] = true;
    ++result.checked;
  }
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (used[t]) result.tensors.push_back(p[t].name);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

constexpr char kMagic[] = "MINIMT1";
constexpr std::size_t kMagicLen = 7;

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  return v;
}

void put_f64(std::string& out, double d) {
  auto bits = std::bit_cast<std::uint64_t>(d);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((bits >> (8 * k)) & 0xFF));
}

double get_f64(const std::string& in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + k])) << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace

std::string Seq2SeqModel::serialize() const {
  auto& self = const_cast<Seq2SeqModel&>(*this);
  nlohmann::json header;
  header["format"] = "minimt-nmt";
  header["kind"] = to_string(kind);
  header["embed_dim"] = embed_dim;
  header["hidden"] = hidden;
  header["attention"] = has_attention();
  header["src_vocab"] = src_vocab.serialize();
  header["tgt_vocab"] = tgt_vocab.serialize();
  header["byte_order"] = "little";
  header["layout"] = "row-major f64";
  auto refs = self.params.refs();
  for (const auto& r : refs) header["tensors"].push_back({{"name", r.name}, {"rows", r.rows}, {"cols", r.cols}});
  std::string head = header.dump();
  std::string out(kMagic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(head.size()));
  out += head;
  for (const auto& r : refs) {
    // Eigen stores column-major; the file is row-major.
    for (std::size_t i = 0; i < r.rows; ++i) {
      for (std::size_t j = 0; j < r.cols; ++j) put_f64(out, r.data[j * r.rows + i]);
    }
  }
  return out;
}

Seq2SeqModel Seq2SeqModel::parse(const std::string& bytes) {
  if (bytes.size() < kMagicLen + 4 || bytes.compare(0, kMagicLen, kMagic) != 0) {
    model_error("not a minimt NMT checkpoint (bad magic)");
  }
  std::size_t head_len = get_u32(bytes, kMagicLen);
  std::size_t at = kMagicLen + 4;
  if (bytes.size() < at + head_len) model_error("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(at, head_len));
  } catch (const nlohmann::json::exception& e) {
    model_error(std::string("corrupt checkpoint header: ") + e.what());
  }
  at += head_len;
  try {
    ModelShape shape;
    shape.kind = parse_kind(header.at("kind").get<std::string>());
    shape.embed_dim = header.at("embed_dim").get<std::size_t>();
    shape.hidden = header.at("hidden").get<std::size_t>();
    shape.attention = header.at("attention").get<bool>();
    auto src = Vocab::parse(header.at("src_vocab").get<std::string>());
    auto tgt = Vocab::parse(header.at("tgt_vocab").get<std::string>());
    Seq2SeqModel m = init_model(src, tgt, shape, 0, 0.0);
    auto refs = m.params.refs();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != refs.size()) model_error("checkpoint tensor count does not match its header");
    for (std::size_t t = 0; t < refs.size(); ++t) {
      const auto& r = refs[t];
      if (tensors[t].at("name") != r.name || tensors[t].at("rows") != r.rows || tensors[t].at("cols") != r.cols) {
        model_error("checkpoint tensor '" + r.name + "' has an unexpected shape");
      }
      if (bytes.size() < at + 8 * r.size) model_error("truncated checkpoint tensor data");
      for (std::size_t i = 0; i < r.rows; ++i) {
        for (std::size_t j = 0; j < r.cols; ++j) {
          r.data[j * r.rows + i] = get_f64(bytes, at);
          at += 8;
        }
      }
    }
    if (at != bytes.size()) model_error("trailing bytes after checkpoint tensors");
    return m;
  } catch (const nlohmann::json::exception& e) {
    model_error(std::string("corrupt checkpoint header: ") + e.what());
  }
}

void Seq2SeqModel::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Seq2SeqModel Seq2SeqModel::load(const std::filesystem::path& path) { return parse(read_file(path)); }

}  // namespace minimt::nmt
