#include "minimt/lm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt::lm {

std::size_t NGramLM::KeyHash::operator()(const std::vector<WordId>& k) const noexcept {
  std::size_t h = 0xcbf29ce484222325ULL;
  for (auto id : k) {
    h ^= id;
    h *= 0x100000001b3ULL;
  }
  return h;
}

NGramLM::NGramLM(std::size_t order) : order_(order), tables_(order) {
  bos_ = intern(kBos);
  eos_ = intern(kEos);
  unk_ = intern(kUnk);
}

WordId NGramLM::intern(const std::string& word) {
  auto [it, inserted] = ids_.emplace(word, static_cast<WordId>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

WordId NGramLM::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? unk_ : it->second;
}

std::vector<std::string> NGramLM::predictable_words() const {
  std::vector<std::string> out;
  for (const auto& [key, entry] : tables_[0]) {
    if (key[0] != bos_) out.push_back(words_[key[0]]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

const NGramLM::Entry* NGramLM::find(const std::vector<WordId>& key) const {
  const auto& table = tables_[key.size() - 1];
  auto it = table.find(key);
  return it == table.end() ? nullptr : &it->second;
}

double NGramLM::logprob(std::span<const WordId> context, WordId word) const {
  if (word == bos_) return kBosLogProb;
  const std::size_t max_ctx = std::min(context.size(), order_ - 1);
  std::vector<WordId> key;
  key.reserve(max_ctx + 1);
  double backoff = 0.0;
  for (std::size_t len = max_ctx + 1; len-- > 0;) {
    key.assign(context.end() - static_cast<long>(len), context.end());
    key.push_back(word);
    if (const Entry* e = find(key)) return backoff + e->logprob;
    if (len > 0) {
      key.pop_back();
      if (const Entry* h = find(key); h && h->backoff) backoff += *h->backoff;
    }
  }
  // <unk> always has a unigram entry, so only reachable for unknown ids.
  return backoff + find({unk_})->logprob;
}

double NGramLM::logprob(const std::vector<std::string>& context, const std::string& word) const {
  std::vector<WordId> ctx;
  ctx.reserve(context.size());
  for (const auto& w : context) ctx.push_back(id(w));
  return logprob(ctx, id(word));
}

double NGramLM::sentence_logprob(const std::vector<std::string>& words) const {
  std::vector<WordId> seq{bos_};
  for (const auto& w : words) seq.push_back(id(w));
  seq.push_back(eos_);
  double total = 0.0;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    total += logprob(std::span<const WordId>(seq.data(), i), seq[i]);
  }
  return total;
}

std::optional<double> NGramLM::stored_logprob(const std::vector<std::string>& ngram) const {
  if (ngram.empty() || ngram.size() > order_) return std::nullopt;
  std::vector<WordId> key;
  for (const auto& w : ngram) {
    auto it = ids_.find(w);
    if (it == ids_.end()) return std::nullopt;
    key.push_back(it->second);
  }
  const Entry* e = find(key);
  return e ? std::optional<double>(e->logprob) : std::nullopt;
}

std::optional<double> NGramLM::stored_backoff(const std::vector<std::string>& ngram) const {
  if (ngram.empty() || ngram.size() > order_) return std::nullopt;
  std::vector<WordId> key;
  for (const auto& w : ngram) {
    auto it = ids_.find(w);
    if (it == ids_.end()) return std::nullopt;
    key.push_back(it->second);
  }
  const Entry* e = find(key);
  return e ? e->backoff : std::nullopt;
}

namespace {

std::string format_logprob(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  return format_double(v);
}

}  // namespace

std::string NGramLM::to_arpa() const {
  std::ostringstream out;
  out << "\\data\\\n";
  for (std::size_t n = 1; n <= order_; ++n) out << "ngram " << n << "=" << tables_[n - 1].size() << "\n";
  for (std::size_t n = 1; n <= order_; ++n) {
    std::vector<std::pair<std::vector<std::string>, const Entry*>> rows;
    for (const auto& [key, entry] : tables_[n - 1]) {
      std::vector<std::string> words;
      for (auto id : key) words.push_back(words_[id]);
      rows.emplace_back(std::move(words), &entry);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    out << "\n\\" << n << "-grams:\n";
    for (const auto& [words, entry] : rows) {
      out << format_logprob(entry->logprob) << '\t' << join(words);
      if (entry->backoff) out << '\t' << format_logprob(*entry->backoff);
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
  return out.str();
}

NGramLM NGramLM::from_arpa(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::size_t> declared;
  bool in_data = false;
  std::size_t section = 0;
  std::optional<NGramLM> lm;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "\\data\\") {
      in_data = true;
      continue;
    }
    if (line == "\\end\\") break;
    if (in_data && line.rfind("ngram ", 0) == 0) {
      auto eq = line.find('=');
      if (eq == std::string::npos) data_error("ARPA line " + std::to_string(lineno) + ": malformed ngram count");
      std::size_t n = std::stoull(line.substr(6, eq - 6));
      if (n != declared.size() + 1) data_error("ARPA header orders are not consecutive");
      declared.push_back(std::stoull(line.substr(eq + 1)));
      continue;
    }
    if (line.front() == '\\' && line.find("-grams:") != std::string::npos) {
      in_data = false;
      section = std::stoull(line.substr(1));
      if (!lm) {
        if (declared.empty()) data_error("ARPA file has no \\data\\ header");
        lm.emplace(NGramLM(declared.size()));
      }
      if (section < 1 || section > lm->order_) data_error("ARPA section out of range");
      continue;
    }
    if (!lm || section == 0) data_error("ARPA line " + std::to_string(lineno) + " outside any section");
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2 || fields.size() > 3) data_error("ARPA line " + std::to_string(lineno) + ": bad field count");
    auto words = split_ws(fields[1]);
    if (words.size() != section) data_error("ARPA line " + std::to_string(lineno) + ": n-gram length mismatch");
    std::vector<WordId> key;
    for (const auto& w : words) key.push_back(lm->intern(w));
    Entry e;
    e.logprob = parse_double(fields[0]);
    if (fields.size() == 3) e.backoff = parse_double(fields[2]);
    lm->tables_[section - 1][key] = e;
  }
  if (!lm) data_error("ARPA file has no n-gram sections");
  for (std::size_t n = 1; n <= lm->order_; ++n) {
    if (lm->tables_[n - 1].size() != declared[n - 1]) {
      data_error("ARPA " + std::to_string(n) + "-gram count does not match header");
    }
  }
  if (!lm->find({lm->unk_})) data_error("ARPA model lacks a <unk> unigram");
  return std::move(*lm);
}

void NGramLM::save(const std::filesystem::path& path) const { write_file_atomic(path, to_arpa()); }

NGramLM NGramLM::load(const std::filesystem::path& path) { return from_arpa(read_file(path)); }

NGramLM NGramLM::uniform(const std::vector<std::string>& words) {
  NGramLM lm(1);
  std::vector<WordId> ids{lm.eos_, lm.unk_};
  for (const auto& w : words) {
    WordId id = lm.intern(w);
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
  }
  const double lp = -std::log10(static_cast<double>(ids.size()));
  for (auto id : ids) lm.tables_[0][{id}] = Entry{lp, std::nullopt};
  lm.discounts_ = {0.0};
  return lm;
}

std::map<std::vector<std::string>, std::size_t> count_ngrams(const std::vector<std::vector<std::string>>& sentences,
                                                            std::size_t order) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (const auto& s : sentences) {
    std::vector<std::string> seq{NGramLM::kBos};
    seq.insert(seq.end(), s.begin(), s.end());
    seq.push_back(NGramLM::kEos);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      for (std::size_t n = 1; n <= order && n <= i + 1; ++n) {
        ++counts[std::vector<std::string>(seq.begin() + static_cast<long>(i + 1 - n),
                                          seq.begin() + static_cast<long>(i + 1))];
      }
    }
  }
  return counts;
}

NGramLM train_lm(const std::vector<std::vector<std::string>>& sentences, const LmOptions& options) {
  if (options.order < 1) usage_error("LM order must be >= 1");
  if (sentences.empty()) data_error("cannot train a language model on no sentences");
  const std::size_t N = options.order;
  NGramLM lm(N);
  using Counts = std::unordered_map<std::vector<WordId>, std::size_t, NGramLM::KeyHash>;

  std::vector<Counts> raw(N);
  for (const auto& s : sentences) {
    std::vector<WordId> seq{lm.bos_};
    for (const auto& w : s) seq.push_back(lm.intern(w));
    seq.push_back(lm.eos_);
    for (std::size_t i = 1; i < seq.size(); ++i) {
      for (std::size_t n = 1; n <= N && n <= i + 1; ++n) {
        ++raw[n - 1][std::vector<WordId>(seq.begin() + static_cast<long>(i + 1 - n),
                                         seq.begin() + static_cast<long>(i + 1))];
      }
    }
  }

  // Adjusted counts: raw at the top order and for BOS-initial n-grams,
  // distinct left extensions otherwise.
  std::vector<Counts> adj(N);
  adj[N - 1] = raw[N - 1];
  for (std::size_t n = N - 1; n-- > 0;) {
    for (const auto& [gram, c] : raw[n + 1]) {
      adj[n][std::vector<WordId>(gram.begin() + 1, gram.end())] += 1;
    }
    for (const auto& [gram, c] : raw[n]) {
      if (gram[0] == lm.bos_) adj[n][gram] = c;
    }
  }

  lm.discounts_.assign(N, 0.5);
  for (std::size_t n = 0; n < N; ++n) {
    if (options.fixed_discount) {
      lm.discounts_[n] = *options.fixed_discount;
      continue;
    }
    std::size_t n1 = 0, n2 = 0;
    for (const auto& [gram, a] : adj[n]) {
      n1 += a == 1;
      n2 += a == 2;
    }
    if (n1 + n2 == 0) {
      log_warning("LM order " + std::to_string(n + 1) + ": no count-of-counts, using discount 0.5");
      continue;
    }
    double d = static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
    lm.discounts_[n] = std::clamp(d, 0.1, 0.9);
  }

  // Unigrams, interpolated with the uniform distribution over predictable symbols.
  {
    const double D = lm.discounts_[0];
    double total = 0.0;
    for (const auto& [gram, a] : adj[0]) total += static_cast<double>(a);
    std::vector<WordId> vocab{lm.eos_, lm.unk_};
    for (const auto& [gram, a] : adj[0]) {
      if (gram[0] != lm.eos_ && gram[0] != lm.unk_) vocab.push_back(gram[0]);
    }
    const double gamma = D * static_cast<double>(adj[0].size()) / total;
    const double floor = gamma / static_cast<double>(vocab.size());
    auto& table = lm.tables_[0];
    for (auto id : vocab) {
      auto it = adj[0].find({id});
      double a = it == adj[0].end() ? 0.0 : static_cast<double>(it->second);
      double p = (a > 0 ? (a - D) / total : 0.0) + floor;
      table[{id}] = NGramLM::Entry{std::log10(p), std::nullopt};
    }
    table[{lm.bos_}] = NGramLM::Entry{NGramLM::kBosLogProb, std::nullopt};
  }

  for (std::size_t n = 1; n < N; ++n) {
    const double D = lm.discounts_[n];
    struct ContextStats {
      double sum = 0.0;
      std::size_t types = 0;
    };
    std::unordered_map<std::vector<WordId>, ContextStats, NGramLM::KeyHash> ctx;
    for (const auto& [gram, a] : adj[n]) {
      auto& st = ctx[std::vector<WordId>(gram.begin(), gram.end() - 1)];
      st.sum += static_cast<double>(a);
      ++st.types;
    }
    for (const auto& [h, st] : ctx) {
      double gamma = D * static_cast<double>(st.types) / st.sum;
      auto& entry = lm.tables_[n - 1][h];  // <s> is the only context not already present
      entry.backoff = std::log10(gamma);
    }
    auto& table = lm.tables_[n];
    for (const auto& [gram, a] : adj[n]) {
      const auto& st = ctx[std::vector<WordId>(gram.begin(), gram.end() - 1)];
      double gamma = D * static_cast<double>(st.types) / st.sum;
      const auto* lower = lm.find(std::vector<WordId>(gram.begin() + 1, gram.end()));
      double p = (static_cast<double>(a) - D) / st.sum + gamma * std::pow(10.0, lower->logprob);
      table[gram] = NGramLM::Entry{std::log10(p), std::nullopt};
    }
  }
  return lm;
}

double perplexity(const NGramLM& lm, const std::vector<std::vector<std::string>>& sentences) {
  double total = 0.0;
  std::size_t events = 0;
  for (const auto& s : sentences) {
    total += lm.sentence_logprob(s);
    events += s.size() + 1;
  }
  if (events == 0) data_error("perplexity of an empty corpus");
  return std::pow(10.0, -total / static_cast<double>(events));
}

}  // namespace minimt::lm
