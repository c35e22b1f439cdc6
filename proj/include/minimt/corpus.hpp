#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace minimt::corpus {

// A single whitespace-free unit of text with its lowercase form cached.
class Token {
 public:
  explicit Token(std::string surface);

  const std::string& surface() const noexcept { return surface_; }
  const std::string& lowered() const noexcept { return lowered_; }

  friend bool operator==(const Token& a, const Token& b) { return a.surface_ == b.surface_; }

 private:
  std::string surface_;
  std::string lowered_;
};

class Sentence {
 public:
  // Throws a data error when `tokens` is empty.
  Sentence(std::int64_t id, std::vector<Token> tokens);
  Sentence(std::int64_t id, const std::vector<std::string>& words);

  std::int64_t id() const noexcept { return id_; }
  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::vector<std::string> words() const;
  std::string text() const;

 private:
  std::int64_t id_;
  std::vector<Token> tokens_;
};

struct SentencePair {
  Sentence source;
  Sentence target;
};

class ParallelCorpus {
 public:
  ParallelCorpus() = default;
  ParallelCorpus(std::string src_lang, std::string tgt_lang)
      : src_lang_(std::move(src_lang)), tgt_lang_(std::move(tgt_lang)) {}

  // Source and target must share an id not already present.
  void add(SentencePair pair);

  const std::vector<SentencePair>& pairs() const noexcept { return pairs_; }
  std::size_t size() const noexcept { return pairs_.size(); }
  bool empty() const noexcept { return pairs_.empty(); }
  const std::string& src_lang() const noexcept { return src_lang_; }
  const std::string& tgt_lang() const noexcept { return tgt_lang_; }

  std::vector<Sentence> sources() const;
  std::vector<Sentence> targets() const;

 private:
  std::vector<SentencePair> pairs_;
  std::unordered_map<std::int64_t, std::size_t> ids_;
  std::string src_lang_ = "src";
  std::string tgt_lang_ = "tgt";
};

std::string lowercase(std::string_view text);

// Moses-style rule tokenizer. Throws on an empty or whitespace-only line.
std::vector<Token> tokenize(std::string_view text);
std::vector<std::string> tokenize_words(std::string_view text);
// One UTF-8 string per code point, spaces included.
std::vector<std::string> split_chars(std::string_view text);

class TruecaseModel {
 public:
  void observe(const Token& token);
  // Most frequent casing of `lowered`; ties go to the lexicographically
  // smallest casing and unseen forms come back unchanged.
  std::string best_casing(const std::string& lowered) const;
  const std::map<std::string, std::map<std::string, std::size_t>>& case_counts() const noexcept {
    return case_counts_;
  }

 private:
  std::map<std::string, std::map<std::string, std::size_t>> case_counts_;
};

TruecaseModel train_truecaser(const std::vector<Sentence>& sentences);
Sentence truecase(const TruecaseModel& model, const Sentence& sentence);

// True when most letters in the sample are ASCII, i.e. the side is cased.
bool is_latin_script(const std::vector<Sentence>& sentences);

ParallelCorpus clean_pairs(const ParallelCorpus& corpus, std::size_t max_len = 80);

class Vocab {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kBos = 1;
  static constexpr std::size_t kEos = 2;
  static constexpr std::size_t kUnk = 3;
  static constexpr std::size_t kReserved = 4;
  static const std::array<std::string, kReserved> kReservedSymbols;

  Vocab();
  // `symbols` excludes the reserved entries, which are always prepended.
  static Vocab from_symbols(const std::vector<std::string>& symbols,
                            const std::vector<std::size_t>& counts = {});

  std::size_t size() const noexcept { return symbols_.size(); }
  bool contains(const std::string& symbol) const { return index_.count(symbol) != 0; }
  // Unknown symbols map to kUnk.
  std::size_t index(const std::string& symbol) const;
  const std::string& symbol(std::size_t i) const { return symbols_.at(i); }
  std::size_t count(std::size_t i) const { return counts_.at(i); }
  const std::vector<std::string>& symbols() const noexcept { return symbols_; }

  std::vector<std::size_t> encode(const std::vector<std::string>& words) const;
  std::vector<std::string> decode(const std::vector<std::size_t>& ids) const;

  // `index<TAB>symbol<TAB>count` per line, reserved symbols first.
  std::string serialize() const;
  static Vocab parse(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.symbols_ == b.symbols_ && a.counts_ == b.counts_;
  }

 private:
  void push(const std::string& symbol, std::size_t count);

  std::vector<std::string> symbols_;
  std::vector<std::size_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count = 1);
Vocab build_vocab(const std::vector<Sentence>& sentences, std::size_t min_count = 1);

struct Split {
  ParallelCorpus train;
  ParallelCorpus dev;
  ParallelCorpus test;
};

// Deterministic shuffle under `seed`; dev and test get floor(n * ratio),
// the remainder goes to train.
Split split(const ParallelCorpus& corpus, std::array<double, 3> ratios, std::uint64_t seed);

// Two line-aligned files of whitespace-tokenized text. Sentence ids come from
// `ids_path` (one integer per line) when given, otherwise the 1-based line number.
ParallelCorpus read_parallel(const std::filesystem::path& src_path, const std::filesystem::path& tgt_path,
                             std::string src_lang = "src", std::string tgt_lang = "tgt",
                             const std::filesystem::path& ids_path = {});
void write_parallel(const ParallelCorpus& corpus, const std::filesystem::path& src_path,
                    const std::filesystem::path& tgt_path, const std::filesystem::path& ids_path = {});

}  // namespace minimt::corpus
