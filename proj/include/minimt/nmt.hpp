#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "minimt/corpus.hpp"

namespace minimt::nmt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Ids = std::vector<std::size_t>;

enum class ModelKind { Word, Char };
std::string to_string(ModelKind kind);
ModelKind parse_kind(const std::string& name);

// Gate blocks are stacked input, forget, cell, output.
struct LstmParams {
  Matrix W;  // 4h x d
  Matrix U;  // 4h x h
  Vector b;  // 4h

  std::size_t hidden() const { return static_cast<std::size_t>(U.cols()); }
  std::size_t input() const { return static_cast<std::size_t>(W.cols()); }
};

struct LstmState {
  Vector h;
  Vector c;
};

struct LstmCache {
  Vector x, h_prev, c_prev;
  Vector i, f, g, o;
  Vector c, tanh_c;
};

LstmState lstm_step(const LstmParams& p, const Vector& x, const LstmState& state, LstmCache* cache = nullptr);

struct LstmInputGrads {
  Vector dx;
  Vector dh_prev;
  Vector dc_prev;
};

// Accumulates parameter gradients into `grads`.
LstmInputGrads lstm_step_backward(const LstmParams& p, const LstmCache& cache, const Vector& dh, const Vector& dc,
                                  LstmParams& grads);

// Score net: v^T tanh(W [E_y(y_{t-1}); s_{t-1}; h_k] + b).
struct AttentionParams {
  Matrix W;  // a x (e + h + h)
  Vector b;  // a
  Vector v;  // a
};

struct Attention {
  Vector context;
  Vector alpha;
  Vector scores;
  Matrix hidden;  // a x Tx, tanh activations
};

Attention attend(const AttentionParams& att, const Vector& ey, const Vector& s_prev, const Matrix& H);

struct AttentionInputGrads {
  Vector dey;
  Vector ds_prev;
  Matrix dH;
};

AttentionInputGrads attend_backward(const AttentionParams& att, const Vector& ey, const Vector& s_prev,
                                    const Matrix& H, const Attention& fwd, const Vector& dcontext,
                                    AttentionParams& grads);

Vector softmax(const Vector& logits);

// Every trainable tensor, in a fixed order shared by the optimizer,
// gradient checker and checkpoint format.
struct Parameters {
  Matrix Ex;  // |V_src| x e, empty for char models
  Matrix Ey;  // |V_tgt| x e, empty for char models
  LstmParams encoder;
  LstmParams decoder;
  std::optional<AttentionParams> attention;
  Matrix W_out;
  Vector b_out;

  struct Ref {
    std::string name;
    double* data;
    std::size_t size;
    std::size_t rows, cols;
  };
  std::vector<Ref> refs();
  std::size_t count() const;
  Parameters zeros_like() const;
  void set_zero();
  double squared_norm() const;
  void scale(double factor);
};

struct Seq2SeqModel {
  ModelKind kind = ModelKind::Word;
  corpus::Vocab src_vocab;
  corpus::Vocab tgt_vocab;
  std::size_t embed_dim = 0;  // one-hot width for char models
  std::size_t hidden = 0;
  Parameters params;

  bool has_attention() const { return params.attention.has_value(); }
  std::size_t decoder_input_dim() const;
  std::size_t output_input_dim() const;

  void save(const std::filesystem::path& path) const;
  static Seq2SeqModel load(const std::filesystem::path& path);
  std::string serialize() const;
  static Seq2SeqModel parse(const std::string& bytes);
};

struct ModelShape {
  ModelKind kind = ModelKind::Word;
  std::size_t embed_dim = 128;
  std::size_t hidden = 256;
  bool attention = true;
};

// Uniform init in [-range, range]; forget-gate biases start at 1.
Seq2SeqModel init_model(const corpus::Vocab& src, const corpus::Vocab& tgt, const ModelShape& shape,
                        std::uint64_t seed, double range = 0.1);

corpus::Vocab build_char_vocab(const std::vector<std::string>& texts);

// A source/target pair of vocabulary indices. Target excludes BOS/EOS;
// PAD entries anywhere are ignored.
struct Example {
  Ids src;
  Ids tgt;
};
using Batch = std::vector<Example>;

std::vector<Example> make_examples(const Seq2SeqModel& model, const corpus::ParallelCorpus& corpus,
                                   std::size_t max_len);
Ids encode_source(const Seq2SeqModel& model, const std::string& text);
// Pads every sequence in the batch to the longest one with PAD.
Batch pad_batch(const Batch& batch);

struct Encoded {
  Matrix H;  // hidden x Tx
  LstmState final;
};

Encoded encode(const Seq2SeqModel& model, const Ids& src);

struct DecodeStep {
  LstmState state;
  Vector probs;
  Vector logits;
};

// One decoder step given the previous symbol, state and context (context is
// ignored without attention).
DecodeStep decode_step(const Seq2SeqModel& model, std::size_t y_prev, const LstmState& s_prev, const Vector& context);

struct LossOptions {
  bool teacher_forcing = true;
};

// L = -(1/N) sum_n sum_t ln p(y_t | y_<t, X), with EOS as the final target.
double nll_loss(const Seq2SeqModel& model, const Batch& batch, const LossOptions& opts = {});
// Same loss, with gradients accumulated into `grads`.
double nll_loss_with_gradients(const Seq2SeqModel& model, const Batch& batch, Parameters& grads,
                               const LossOptions& opts = {});

// Teacher-forced fraction of target positions (EOS included) predicted by argmax.
double next_token_accuracy(const Seq2SeqModel& model, const std::vector<Example>& examples);

enum class Optimizer { RmsProp, Sgd };

struct TrainConfig {
  double lr = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 256;
  Optimizer optimizer = Optimizer::RmsProp;
  std::uint64_t seed = 1;
  std::size_t max_len = 80;
  bool teacher_forcing = true;
  std::size_t embed_dim = 128;
  std::size_t hidden = 256;
  bool attention = true;
  double clip_norm = 5.0;
  double init_range = 0.1;

  static TrainConfig word_defaults();
  static TrainConfig char_defaults();
  void validate() const;
};

struct RmsPropState {
  static constexpr double kRho = 0.9;
  static constexpr double kEps = 1e-8;
  Parameters acc;
};

RmsPropState make_rmsprop_state(const Parameters& like);
void rmsprop_update(Parameters& params, Parameters& grads, RmsPropState& state, double lr);
void sgd_update(Parameters& params, Parameters& grads, double lr);
// Rescales to `max_norm` when the global norm exceeds it; returns the original norm.
double clip_gradients(Parameters& grads, double max_norm);

// Called after each epoch with the mean per-sentence loss; return false to stop.
using EpochCallback = std::function<bool(std::size_t epoch, double loss, const Seq2SeqModel& model)>;

Seq2SeqModel train(Seq2SeqModel model, const std::vector<Example>& examples, const TrainConfig& cfg,
                   const EpochCallback& on_epoch = {});
Seq2SeqModel train_word_nmt(const corpus::ParallelCorpus& corpus, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});
Seq2SeqModel train_char_nmt(const corpus::ParallelCorpus& corpus, const TrainConfig& cfg,
                            const EpochCallback& on_epoch = {});

Ids greedy_ids(const Seq2SeqModel& model, const Ids& src, std::size_t max_len = 80);
// Word models take and return space-separated tokens; char models work on raw text.
std::string translate_greedy(const Seq2SeqModel& model, const std::string& source, std::size_t max_len = 80);

struct GradCheckOptions {
  std::size_t samples = 240;
  double eps = 1e-5;
  // Denominator floor for the relative error. Central differences on a loss
  // near 10 carry roughly 1e-10 of roundoff, so smaller gradients are noise.
  double abs_floor = 1e-5;
  std::uint64_t seed = 7;
  // Lets tests tamper with the analytic gradients before comparison.
  std::function<void(Parameters&)> corrupt;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  std::size_t checked = 0;
  std::vector<std::string> tensors;  // tensors that received at least one sample
};

GradCheckResult grad_check(const Seq2SeqModel& model, const Batch& batch, const GradCheckOptions& opts = {});

}  // namespace minimt::nmt
