#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace minimt::lm {

using WordId = std::uint32_t;

struct LmOptions {
  std::size_t order = 3;
  // Overrides the count-of-counts discount at every order (0 disables smoothing).
  std::optional<double> fixed_discount;
};

// Backoff n-gram model in the ARPA representation: log10 probabilities for
// seen n-grams plus log10 backoff weights for contexts.
class NGramLM {
 public:
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";
  static constexpr const char* kUnk = "<unk>";
  static constexpr double kBosLogProb = -99.0;

  std::size_t order() const noexcept { return order_; }

  WordId id(const std::string& word) const;  // kUnk's id when unknown
  const std::string& word(WordId id) const { return words_.at(id); }
  WordId bos_id() const noexcept { return bos_; }
  WordId eos_id() const noexcept { return eos_; }
  WordId unk_id() const noexcept { return unk_; }
  // Every predictable symbol: observed words, </s> and <unk>.
  std::vector<std::string> predictable_words() const;

  double logprob(const std::vector<std::string>& context, const std::string& word) const;
  double logprob(std::span<const WordId> context, WordId word) const;
  // BOS-padded, EOS-terminated total log10 probability.
  double sentence_logprob(const std::vector<std::string>& words) const;

  std::size_t ngram_count(std::size_t n) const { return tables_.at(n - 1).size(); }
  std::optional<double> stored_logprob(const std::vector<std::string>& ngram) const;
  std::optional<double> stored_backoff(const std::vector<std::string>& ngram) const;
  const std::vector<double>& discounts() const noexcept { return discounts_; }

  std::string to_arpa() const;
  static NGramLM from_arpa(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static NGramLM load(const std::filesystem::path& path);

  // Order-1 model uniform over `words` plus </s> and <unk>.
  static NGramLM uniform(const std::vector<std::string>& words);

 private:
  friend NGramLM train_lm(const std::vector<std::vector<std::string>>&, const LmOptions&);

  struct KeyHash {
    std::size_t operator()(const std::vector<WordId>& k) const noexcept;
  };
  struct Entry {
    double logprob = 0.0;
    std::optional<double> backoff;
  };
  using Table = std::unordered_map<std::vector<WordId>, Entry, KeyHash>;

  explicit NGramLM(std::size_t order);
  WordId intern(const std::string& word);
  const Entry* find(const std::vector<WordId>& key) const;

  std::size_t order_;
  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
  WordId bos_ = 0, eos_ = 0, unk_ = 0;
  std::vector<Table> tables_;  // tables_[n - 1] holds n-grams
  std::vector<double> discounts_;
};

// Interpolated Kneser-Ney; discount per order D = n1 / (n1 + 2 n2) clamped to [0.1, 0.9].
NGramLM train_lm(const std::vector<std::vector<std::string>>& sentences, const LmOptions& options = {});

double perplexity(const NGramLM& lm, const std::vector<std::vector<std::string>>& sentences);

// Raw n-gram counts over BOS/EOS-padded sentences, all orders up to `order`.
std::map<std::vector<std::string>, std::size_t> count_ngrams(const std::vector<std::vector<std::string>>& sentences,
                                                            std::size_t order);

}  // namespace minimt::lm
