#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "minimt/corpus.hpp"
#include "minimt/lm.hpp"

namespace minimt::smt {

using Words = std::vector<std::string>;
using WordPairs = std::vector<std::pair<Words, Words>>;  // (source, target)

inline const std::string kNull = "NULL";

// Lexical translation probabilities t(f | e); `e` may be kNull.
class TranslationTable {
 public:
  double prob(const std::string& f, const std::string& e) const;
  void set(const std::string& e, const std::string& f, double p) { rows_[e][f] = p; }
  const std::unordered_map<std::string, std::unordered_map<std::string, double>>& rows() const noexcept {
    return rows_;
  }

 private:
  std::unordered_map<std::string, std::unordered_map<std::string, double>> rows_;
};

// EM for IBM Model 1 with a NULL source word and uniform initialisation 1/|V_f|.
class Ibm1Trainer {
 public:
  explicit Ibm1Trainer(const WordPairs& pairs);

  void step();
  // Sum over pairs and target words of ln((1/(l+1)) * sum_i t(f_j | e_i)).
  double log_likelihood() const;
  TranslationTable table() const;

 private:
  struct Pair {
    std::vector<std::uint32_t> src;  // 0 is NULL
    std::vector<std::uint32_t> tgt;
    std::vector<std::size_t> param;  // param[j * src.size() + i]
  };

  std::vector<std::string> src_words_;
  std::vector<std::string> tgt_words_;
  std::vector<Pair> pairs_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> params_;  // (e, f) per parameter slot
  std::vector<double> t_;
};

TranslationTable train_ibm1(const WordPairs& pairs, std::size_t iterations = 10);
TranslationTable train_ibm1(const corpus::ParallelCorpus& corpus, std::size_t iterations = 10);
double ibm1_log_likelihood(const TranslationTable& table, const WordPairs& pairs);

WordPairs to_word_pairs(const corpus::ParallelCorpus& corpus);
WordPairs reversed(const WordPairs& pairs);

// Links are (source index, target index).
using Link = std::pair<std::size_t, std::size_t>;
using Alignment = std::set<Link>;

// Each target word links to its best source word; none when NULL explains it
// strictly better. Ties go to the leftmost source word.
Alignment viterbi_align(const TranslationTable& t, const Words& source, const Words& target);
Alignment invert(const Alignment& a);

// grow-diag-final over two alignments expressed in (source, target) coordinates.
Alignment symmetrize(const Alignment& src_to_tgt, const Alignment& tgt_to_src);

struct PhrasePair {
  std::size_t src_begin = 0, src_end = 0;  // half-open
  std::size_t tgt_begin = 0, tgt_end = 0;
  Words src, tgt;
  Alignment links;  // relative to the phrase boxes

  auto box() const { return std::array<std::size_t, 4>{src_begin, src_end, tgt_begin, tgt_end}; }
};

// All phrase pairs consistent with the alignment (at least one link inside,
// none crossing the box), both sides at most `max_phrase_len` long.
std::vector<PhrasePair> extract_phrases(const Words& source, const Words& target, const Alignment& alignment,
                                        std::size_t max_phrase_len = 7);

struct PhraseTableEntry {
  Words src, tgt;
  // phi(t|s), phi(s|t), lex(t|s), lex(s|t)
  std::array<double, 4> scores{};
};

class PhraseTable {
 public:
  void add(PhraseTableEntry entry);
  const std::vector<PhraseTableEntry>* lookup(const Words& src) const;
  std::size_t size() const noexcept { return size_; }
  bool empty() const noexcept { return size_ == 0; }
  const std::map<std::string, std::vector<PhraseTableEntry>>& entries() const noexcept { return by_source_; }

  // `src ||| tgt ||| phi_t|s phi_s|t lex_t|s lex_s|t` per line.
  std::string serialize() const;
  static PhraseTable parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static PhraseTable load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::vector<PhraseTableEntry>> by_source_;
  std::size_t size_ = 0;
};

// Relative-frequency phrase probabilities plus lexical weights from the IBM
// tables; t_fwd is t(target | source), t_rev is t(source | target).
PhraseTable score_phrase_table(const std::vector<PhrasePair>& phrases, const TranslationTable& t_fwd,
                               const TranslationTable& t_rev);

struct DecoderWeights {
  std::array<double, 4> tm{1.0, 1.0, 1.0, 1.0};
  double lm = 1.0;
  double distortion = 0.6;
  double word_penalty = -1.0;
};

struct DecoderConfig {
  static constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

  std::size_t beam_size = 100;
  std::size_t distortion_limit = 6;
  std::size_t max_phrase_len = 7;
  std::size_t table_limit = 20;  // translation options kept per source phrase
  double oov_penalty = -100.0;   // added per source word copied through untranslated
  DecoderWeights weights;
};

struct TraceStep {
  std::size_t src_begin = 0, src_end = 0;
  Words src, tgt;
  double tm = 0.0;  // weighted, natural log
  double lm = 0.0;
  double distortion = 0.0;
  double word_penalty = 0.0;
  bool oov = false;
};

struct Translation {
  Words words;
  double score = 0.0;
  std::vector<TraceStep> trace;
  bool relaxed = false;  // found only after lifting the distortion limit

  nlohmann::json trace_json(const Words& source) const;
};

// Stack decoding over coverage count with recombination and beam pruning.
// Scores are natural-log; the LM contributes ln(10) * log10 P. When no
// hypothesis completes under the distortion limit the sentence is decoded
// again without it (Translation::relaxed).
Translation decode(const Words& source, const PhraseTable& table, const lm::NGramLM& lm, const DecoderConfig& cfg);

struct SmtTrainOptions {
  std::size_t ibm_iterations = 10;
  std::size_t max_phrase_len = 7;
  lm::LmOptions lm;
};

struct SmtSystem {
  PhraseTable phrases;
  lm::NGramLM lm;
};

SmtSystem train_smt(const corpus::ParallelCorpus& corpus, const SmtTrainOptions& options = {});

}  // namespace minimt::smt
