#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "minimt/corpus.hpp"
#include "minimt/metrics.hpp"

namespace minimt::simplex {

using metrics::Label;

enum class ChunkTag : int { NP = 0, VP, PP, ADJP, ADVP, PRP, OTHER };
inline constexpr std::size_t kTagCount = 7;

std::string to_string(ChunkTag tag);
ChunkTag parse_tag(std::string_view text);

struct ChunkSequence {
  std::int64_t sentence_id = 0;
  std::vector<ChunkTag> tags;
};

// One element of a rule; a starred item matches one or more repeats of its tag.
struct PatternItem {
  ChunkTag tag;
  bool starred = false;
  friend bool operator==(const PatternItem&, const PatternItem&) = default;
};
using Pattern = std::vector<PatternItem>;

std::string format_pattern(const Pattern& pattern);
Pattern parse_pattern(std::string_view text);

// Whole-sequence match of `tags` against `pattern`.
bool matches(const Pattern& pattern, const std::vector<ChunkTag>& tags);

struct Rule {
  Pattern pattern;
  double confidence = 0.0;  // percent of the mined sentences with this structure
};

struct RuleSet {
  std::vector<Rule> rules;
  std::size_t source_count = 0;

  // `PATTERN<TAB>confidence` per line, preceded by a `# sentences<TAB>N` comment.
  std::string serialize() const;
  static RuleSet parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static RuleSet load(const std::filesystem::path& path);
};

// Heuristic shallow chunker over a bundled closed-class word list; a stand-in
// for real parser output, which should be supplied as a chunk file.
ChunkSequence fallback_chunk(const corpus::Sentence& sentence);
ChunkSequence fallback_chunk(const std::vector<std::string>& words, std::int64_t sentence_id = 0);

Pattern surface_form(const ChunkSequence& chunks);
RuleSet mine_rules(const std::vector<ChunkSequence>& simple_chunked);
Label classify_rule(const RuleSet& rules, const ChunkSequence& chunks);

// Positional one-hot over the 7 tags plus a pad slot: length max_len * 8.
Eigen::VectorXd encode_features(const ChunkSequence& chunks, std::size_t max_len = 40);

struct FfnnConfig {
  double learning_rate = 0.001;
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::size_t max_len = 40;
  double init_range = 0.1;
  std::uint64_t seed = 1;
};

struct LabeledItem {
  ChunkSequence chunks;
  Label label;
};
using LabeledDataset = std::vector<LabeledItem>;

// `Simple|Other<TAB>TAG TAG ...` per line.
LabeledDataset read_labeled(const std::filesystem::path& path);

// tanh(W1 x + b1) -> tanh(W2 . + b2) -> tanh(W3 . + b3); output unit 0 is Simple.
struct FfnnModel {
  static constexpr std::size_t kHidden1 = 50;
  static constexpr std::size_t kHidden2 = 50;

  std::size_t max_len = 40;
  Eigen::MatrixXd w1, w2, w3;  // stored out x in
  Eigen::VectorXd b1, b2, b3;

  std::size_t in_dim() const { return static_cast<std::size_t>(w1.cols()); }

  static FfnnModel init(std::size_t max_len, double range, std::uint64_t seed);
  // Columns of `inputs` are examples; returns 2 x batch outputs.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  std::string serialize() const;
  static FfnnModel parse(const std::string& text);
};

struct FfnnGradients {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
};

// Targets are +1 for the true class unit and -1 for the other.
Eigen::MatrixXd ffnn_targets(const std::vector<Label>& labels);
// Mean over batch and output units of the squared error.
double ffnn_mse(const FfnnModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);
double ffnn_mse_with_gradients(const FfnnModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               FfnnGradients& grads);

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

FfnnModel train_ffnn(const LabeledDataset& data, const FfnnConfig& cfg, const EpochCallback& on_epoch = {});

// Argmax of the two outputs (ties go to Other) and the winning output value.
std::pair<Label, double> classify_ffnn(const FfnnModel& model, const ChunkSequence& chunks);
std::pair<Label, double> label_from_outputs(double simple_out, double other_out);

metrics::ConfusionMatrix cross_validate(const LabeledDataset& data, std::size_t k, const FfnnConfig& cfg,
                                        std::uint64_t seed);

using Classifier = std::function<Label(const ChunkSequence&)>;

struct ExtractResult {
  corpus::ParallelCorpus simple;
  std::size_t other_count = 0;
};

// `chunks[i]` annotates the source side of `corpus.pairs()[i]`.
ExtractResult extract_simple(const corpus::ParallelCorpus& corpus, const std::vector<ChunkSequence>& chunks,
                             const Classifier& classifier);

// `id<TAB>TAG TAG ...` per line.
std::vector<ChunkSequence> read_chunk_file(const std::filesystem::path& path);
std::string format_chunk_file(const std::vector<ChunkSequence>& chunks);

}  // namespace minimt::simplex
