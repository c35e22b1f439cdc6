#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "minimt/corpus.hpp"
#include "minimt/metrics.hpp"
#include "minimt/nmt.hpp"
#include "minimt/simplex.hpp"
#include "minimt/smt.hpp"

namespace minimt::pipeline {

namespace fs = std::filesystem;

// A corpus directory holds corpus.src, corpus.tgt, corpus.ids and corpus.json.
corpus::ParallelCorpus load_corpus_dir(const fs::path& dir);
std::vector<fs::path> save_corpus_dir(const corpus::ParallelCorpus& corpus, const fs::path& dir);
std::vector<fs::path> corpus_files(const fs::path& dir);

// Refuses to clobber existing files unless `force` is set.
void guard_outputs(const std::vector<fs::path>& paths, bool force);

struct PreprocessOptions {
  fs::path src_file;
  fs::path tgt_file;
  fs::path out_dir;
  std::string src_lang = "src";
  std::string tgt_lang = "tgt";
  std::size_t max_len = 80;
  bool force = false;
};

struct PreprocessSummary {
  std::size_t input_pairs = 0;
  std::size_t kept_pairs = 0;
  bool truecased_src = false;
  bool truecased_tgt = false;
};

PreprocessSummary preprocess(const PreprocessOptions& opts);

struct ExtractOptions {
  fs::path corpus_dir;
  fs::path out_dir;
  std::string method = "rules";  // rules | ffnn
  fs::path chunks_file;          // id<TAB>TAGS for the corpus sources
  bool allow_fallback = false;   // use the heuristic chunker when no chunk file is given
  fs::path rules_file;           // rules: a saved RuleSet
  fs::path labeled_file;         // rules: mine from its Simple items; ffnn: train on it
  fs::path ffnn_model;           // ffnn: a saved model instead of training
  simplex::FfnnConfig ffnn;
  bool force = false;
};

struct ExtractSummary {
  std::string method;
  std::size_t total = 0;
  std::size_t simple = 0;
  std::size_t other = 0;
};

ExtractSummary extract_simple(const ExtractOptions& opts);

enum class System { Smt, NmtWord, NmtChar };
std::string to_string(System s);
System parse_system(const std::string& name);

struct SmtOptions {
  std::size_t ibm_iterations = 10;
  std::size_t max_phrase_len = 7;
  std::size_t lm_order = 3;
  smt::DecoderConfig decoder;
};

struct TrainOptions {
  System system = System::Smt;
  fs::path corpus_dir;
  fs::path out_dir;
  SmtOptions smt;
  nmt::TrainConfig nmt = nmt::TrainConfig::word_defaults();
  bool force = false;
};

nlohmann::json to_json(const TrainOptions& opts);

// Trains one system and writes its artifacts plus manifest.json into out_dir.
void train(const TrainOptions& opts, std::ostream* log = nullptr);

// A trained system loaded from a model directory.
class Translator {
 public:
  static Translator load(const fs::path& model_dir);

  System system() const noexcept { return system_; }
  const std::string& src_lang() const noexcept { return src_lang_; }
  // One tokenized line in, one line out; empty input gives empty output.
  std::string translate(const std::string& line, nlohmann::json* trace = nullptr) const;

  smt::DecoderConfig decoder;
  std::size_t max_len = 80;

 private:
  System system_ = System::Smt;
  std::string src_lang_, tgt_lang_;
  std::shared_ptr<const smt::SmtSystem> smt_;
  std::shared_ptr<const nmt::Seq2SeqModel> nmt_;
};

struct TranslateOptions {
  fs::path model_dir;
  fs::path input;  // a text file, or a corpus directory whose sources are translated
  fs::path output;
  fs::path trace;  // SMT only: JSON lines with per-sentence decoder traces
  std::optional<std::size_t> beam;
  std::optional<std::size_t> distortion_limit;
  std::size_t max_len = 80;
  bool force = false;
};

std::size_t translate(const TranslateOptions& opts);

inline const std::vector<std::string> kMetrics = {"bleu", "ter"};

nlohmann::json evaluate(const std::vector<std::string>& refs, const std::vector<std::string>& hyps,
                        const std::vector<std::string>& metrics = kMetrics);

struct EvaluateOptions {
  fs::path ref;
  fs::path hyp;
  std::vector<std::string> metrics = kMetrics;
  std::string system = "system";
  fs::path out_json;
  fs::path out_csv;
  bool force = false;
};

nlohmann::json evaluate_files(const EvaluateOptions& opts);
std::string evaluation_csv(const nlohmann::json& report);

void rate_sheet(const fs::path& src, const fs::path& hyp, const fs::path& out, std::uint64_t seed, bool force);
metrics::RatingSummary rate_aggregate(const std::vector<fs::path>& sheets, const std::vector<std::string>& raters);

inline const std::vector<std::string> kCompareSystems = {"SMT", "CNMT", "WNMT-NA", "WNMT-A"};
inline const std::vector<std::string> kCompareCorpora = {"simple", "whole"};

struct CompareOptions {
  fs::path simple_dir;
  fs::path whole_dir;
  fs::path out_dir;
  std::vector<std::string> systems = kCompareSystems;
  std::uint64_t seed = 1;
  SmtOptions smt;
  nmt::TrainConfig word = compare_word_budget();
  nmt::TrainConfig chr = compare_char_budget();
  std::size_t jobs = 0;  // 0: one per hardware thread, capped by the cell count
  bool render_only = false;

  static nmt::TrainConfig compare_word_budget();
  static nmt::TrainConfig compare_char_budget();
};

struct CompareResult {
  nlohmann::json report;
  bool partial = false;
};

CompareResult compare(const CompareOptions& opts, std::ostream* log = nullptr);
// Text table of a saved report; needs no trained systems.
std::string render_compare(const nlohmann::json& report);

}  // namespace minimt::pipeline
