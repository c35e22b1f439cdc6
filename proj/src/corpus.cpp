#include "minimt/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt::corpus {

namespace {

struct CodePoint {
  char32_t value;
  std::size_t offset;
  std::size_t length;
};

std::vector<CodePoint> decode_utf8(std::string_view text) {
  std::vector<CodePoint> out;
  std::size_t i = 0;
  while (i < text.size()) {
    auto b = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    char32_t cp = b;
    if (b >= 0xF0) {
      len = 4;
      cp = b & 0x07;
    } else if (b >= 0xE0) {
      len = 3;
      cp = b & 0x0F;
    } else if (b >= 0xC0) {
      len = 2;
      cp = b & 0x1F;
    }
    if (i + len > text.size()) len = text.size() - i;
    for (std::size_t k = 1; k < len; ++k) {
      cp = (cp << 6) | (static_cast<unsigned char>(text[i + k]) & 0x3F);
    }
    out.push_back({cp, i, len});
    i += len;
  }
  return out;
}

bool is_space(char32_t c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == 0xA0; }

bool is_punct(char32_t c) {
  if (c < 0x80) return c > 0x20 && c < 0x7F && !std::isalnum(static_cast<int>(c));
  switch (c) {
    case 0x0964:  // danda
    case 0x0965:  // double danda
    case 0x2013:
    case 0x2014:
    case 0x2018:
    case 0x2019:
    case 0x201C:
    case 0x201D:
    case 0x2026:
    case 0x00AB:
    case 0x00BB:
    case 0x00BF:
    case 0x00A1:
      return true;
    default:
      return false;
  }
}

bool is_word_char(char32_t c) { return !is_space(c) && !is_punct(c); }
bool is_digit(char32_t c) { return c >= '0' && c <= '9'; }

// Punctuation that stays inside a token when flanked by the right characters.
bool keeps_internal(char32_t c, char32_t prev, char32_t next) {
  if ((c == '.' || c == ',' || c == ':') && is_digit(prev) && is_digit(next)) return true;
  if ((c == '.' || c == '\'' || c == '-' || c == '_' || c == '&' || c == '@' || c == '/' || c == 0x2019) &&
      is_word_char(prev) && is_word_char(next)) {
    return true;
  }
  return false;
}

// Letter-period abbreviations such as "U.S." or "e.g." stay whole.
bool is_abbreviation(std::string_view word) {
  if (word.size() < 4 || word.size() % 2 != 0) return false;
  for (std::size_t i = 0; i < word.size(); i += 2) {
    if (!std::isalpha(static_cast<unsigned char>(word[i])) || word[i + 1] != '.') return false;
  }
  return true;
}

}  // namespace

std::string lowercase(std::string_view text) {
  std::string out(text);
  for (auto& ch : out) {
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
  }
  return out;
}

Token::Token(std::string surface) : surface_(std::move(surface)), lowered_(lowercase(surface_)) {
  if (surface_.empty()) data_error("empty token");
  for (char ch : surface_) {
    if (ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r') data_error("token contains whitespace: '" + surface_ + "'");
  }
}

Sentence::Sentence(std::int64_t id, std::vector<Token> tokens) : id_(id), tokens_(std::move(tokens)) {
  if (tokens_.empty()) data_error("empty sentence (id " + std::to_string(id) + ")");
}

Sentence::Sentence(std::int64_t id, const std::vector<std::string>& words) : id_(id) {
  tokens_.reserve(words.size());
  for (const auto& w : words) tokens_.emplace_back(w);
  if (tokens_.empty()) data_error("empty sentence (id " + std::to_string(id) + ")");
}

std::vector<std::string> Sentence::words() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_) out.push_back(t.surface());
  return out;
}

std::string Sentence::text() const { return join(words()); }

void ParallelCorpus::add(SentencePair pair) {
  if (pair.source.id() != pair.target.id()) {
    data_error("pair ids differ: " + std::to_string(pair.source.id()) + " vs " + std::to_string(pair.target.id()));
  }
  auto [it, inserted] = ids_.emplace(pair.source.id(), pairs_.size());
  if (!inserted) data_error("duplicate sentence id " + std::to_string(pair.source.id()));
  pairs_.push_back(std::move(pair));
}

std::vector<Sentence> ParallelCorpus::sources() const {
  std::vector<Sentence> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.source);
  return out;
}

std::vector<Sentence> ParallelCorpus::targets() const {
  std::vector<Sentence> out;
  out.reserve(pairs_.size());
  for (const auto& p : pairs_) out.push_back(p.target);
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  for (const auto& word : split_ws(text)) {
    if (is_abbreviation(word)) {
      tokens.emplace_back(word);
      continue;
    }
    auto cps = decode_utf8(word);
    std::string current;
    for (std::size_t k = 0; k < cps.size(); ++k) {
      const auto& cp = cps[k];
      std::string_view piece(word.data() + cp.offset, cp.length);
      if (!is_punct(cp.value)) {
        current += piece;
        continue;
      }
      bool internal = k > 0 && k + 1 < cps.size() && keeps_internal(cp.value, cps[k - 1].value, cps[k + 1].value);
      if (internal) {
        current += piece;
        continue;
      }
      if (!current.empty()) tokens.emplace_back(std::move(current));
      current.clear();
      tokens.emplace_back(std::string(piece));
    }
    if (!current.empty()) tokens.emplace_back(std::move(current));
  }
  if (tokens.empty()) data_error("empty sentence");
  return tokens;
}

std::vector<std::string> split_chars(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& cp : decode_utf8(text)) out.emplace_back(text.substr(cp.offset, cp.length));
  return out;
}

std::vector<std::string> tokenize_words(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize(text)) out.push_back(t.surface());
  return out;
}

void TruecaseModel::observe(const Token& token) { ++case_counts_[token.lowered()][token.surface()]; }

std::string TruecaseModel::best_casing(const std::string& lowered) const {
  auto it = case_counts_.find(lowered);
  if (it == case_counts_.end()) return lowered;
  const std::string* best = nullptr;
  std::size_t best_count = 0;
  // std::map iterates casings in lexicographic order, so strict > keeps the smallest on ties.
  for (const auto& [casing, count] : it->second) {
    if (count > best_count) {
      best = &casing;
      best_count = count;
    }
  }
  return best ? *best : lowered;
}

TruecaseModel train_truecaser(const std::vector<Sentence>& sentences) {
  if (sentences.empty()) data_error("truecaser needs at least one sentence");
  TruecaseModel model;
  for (const auto& s : sentences) {
    for (std::size_t i = 1; i < s.size(); ++i) model.observe(s.tokens()[i]);
  }
  return model;
}

Sentence truecase(const TruecaseModel& model, const Sentence& sentence) {
  std::vector<Token> tokens = sentence.tokens();
  tokens[0] = Token(model.best_casing(tokens[0].lowered()));
  return Sentence(sentence.id(), std::move(tokens));
}

bool is_latin_script(const std::vector<Sentence>& sentences) {
  std::size_t ascii_letters = 0;
  std::size_t other_letters = 0;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens()) {
      for (const auto& cp : decode_utf8(t.surface())) {
        if (cp.value < 0x80) {
          if (std::isalpha(static_cast<int>(cp.value))) ++ascii_letters;
        } else if (!is_punct(cp.value)) {
          ++other_letters;
        }
      }
    }
  }
  return ascii_letters > other_letters;
}

ParallelCorpus clean_pairs(const ParallelCorpus& corpus, std::size_t max_len) {
  ParallelCorpus out(corpus.src_lang(), corpus.tgt_lang());
  for (const auto& p : corpus.pairs()) {
    if (p.source.size() <= max_len && p.target.size() <= max_len) out.add(p);
  }
  if (out.empty()) data_error("all pairs filtered (max_len " + std::to_string(max_len) + ")");
  return out;
}

const std::array<std::string, Vocab::kReserved> Vocab::kReservedSymbols = {"<pad>", "<s>", "</s>", "<unk>"};

Vocab::Vocab() {
  for (const auto& s : kReservedSymbols) push(s, 0);
}

void Vocab::push(const std::string& symbol, std::size_t count) {
  auto [it, inserted] = index_.emplace(symbol, symbols_.size());
  if (!inserted) data_error("duplicate vocabulary symbol '" + symbol + "'");
  symbols_.push_back(symbol);
  counts_.push_back(count);
}

Vocab Vocab::from_symbols(const std::vector<std::string>& symbols, const std::vector<std::size_t>& counts) {
  if (!counts.empty() && counts.size() != symbols.size()) usage_error("vocab counts/symbols size mismatch");
  Vocab v;
  for (std::size_t i = 0; i < symbols.size(); ++i) v.push(symbols[i], counts.empty() ? 0 : counts[i]);
  return v;
}

std::size_t Vocab::index(const std::string& symbol) const {
  auto it = index_.find(symbol);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::size_t> Vocab::encode(const std::vector<std::string>& words) const {
  std::vector<std::size_t> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(index(w));
  return out;
}

std::vector<std::string> Vocab::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (auto i : ids) out.push_back(symbol(i));
  return out;
}

std::string Vocab::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    out += std::to_string(i) + '\t' + symbols_[i] + '\t' + std::to_string(counts_[i]) + '\n';
  }
  return out;
}

Vocab Vocab::parse(const std::string& text) {
  Vocab v;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto t1 = line.find('\t');
    auto t2 = line.find('\t', t1 == std::string::npos ? t1 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      data_error("vocab line " + std::to_string(lineno) + ": expected index<TAB>symbol<TAB>count");
    }
    std::size_t index = std::stoull(line.substr(0, t1));
    std::string symbol = line.substr(t1 + 1, t2 - t1 - 1);
    std::size_t count = std::stoull(line.substr(t2 + 1));
    if (index < kReserved) {
      if (symbol != kReservedSymbols[index]) data_error("vocab reserved symbol mismatch at index " + std::to_string(index));
      v.counts_[index] = count;
      continue;
    }
    if (index != v.size()) data_error("vocab indices not dense at line " + std::to_string(lineno));
    v.push(symbol, count);
  }
  return v;
}

void Vocab::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

Vocab Vocab::load(const std::filesystem::path& path) { return parse(read_file(path)); }

Vocab build_vocab(const std::vector<std::vector<std::string>>& sentences, std::size_t min_count) {
  if (min_count < 1) usage_error("min_count must be >= 1");
  if (sentences.empty()) data_error("cannot build a vocabulary from no sentences");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : sentences) {
    for (const auto& w : s) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, c] : counts) {
    if (c >= min_count && !std::count(Vocab::kReservedSymbols.begin(), Vocab::kReservedSymbols.end(), w)) {
      kept.emplace_back(w, c);
    }
  }
  if (kept.empty()) data_error("no token reaches min_count " + std::to_string(min_count));
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> symbols;
  std::vector<std::size_t> cs;
  for (auto& [w, c] : kept) {
    symbols.push_back(w);
    cs.push_back(c);
  }
  return Vocab::from_symbols(symbols, cs);
}

Vocab build_vocab(const std::vector<Sentence>& sentences, std::size_t min_count) {
  std::vector<std::vector<std::string>> words;
  words.reserve(sentences.size());
  for (const auto& s : sentences) words.push_back(s.words());
  return build_vocab(words, min_count);
}

Split split(const ParallelCorpus& corpus, std::array<double, 3> ratios, std::uint64_t seed) {
  double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9) usage_error("split ratios must sum to 1");
  for (double r : ratios) {
    if (r < 0.0) usage_error("split ratios must be non-negative");
  }
  const std::size_t n = corpus.size();
  // The epsilon absorbs representation error, e.g. 10 * 0.1.
  auto n_dev = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[1] + 1e-9));
  auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[2] + 1e-9));
  if (n_dev + n_test > n) data_error("split sizes exceed corpus size");
  std::size_t n_train = n - n_dev - n_test;
  if (n_train == 0 || n_dev == 0 || n_test == 0) {
    data_error("split leaves an empty partition (" + std::to_string(n_train) + "/" + std::to_string(n_dev) + "/" +
               std::to_string(n_test) + ")");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  Split out{ParallelCorpus(corpus.src_lang(), corpus.tgt_lang()), ParallelCorpus(corpus.src_lang(), corpus.tgt_lang()),
            ParallelCorpus(corpus.src_lang(), corpus.tgt_lang())};
  for (std::size_t k = 0; k < n; ++k) {
    const auto& pair = corpus.pairs()[order[k]];
    if (k < n_train) {
      out.train.add(pair);
    } else if (k < n_train + n_dev) {
      out.dev.add(pair);
    } else {
      out.test.add(pair);
    }
  }
  return out;
}

ParallelCorpus read_parallel(const std::filesystem::path& src_path, const std::filesystem::path& tgt_path,
                             std::string src_lang, std::string tgt_lang, const std::filesystem::path& ids_path) {
  auto src = read_lines(src_path);
  auto tgt = read_lines(tgt_path);
  if (src.size() != tgt.size()) {
    data_error("line count mismatch: " + src_path.string() + " has " + std::to_string(src.size()) + ", " +
               tgt_path.string() + " has " + std::to_string(tgt.size()));
  }
  std::vector<std::string> ids;
  if (!ids_path.empty()) {
    ids = read_lines(ids_path);
    if (ids.size() != src.size()) data_error("id file length does not match corpus");
  }
  ParallelCorpus corpus(std::move(src_lang), std::move(tgt_lang));
  for (std::size_t i = 0; i < src.size(); ++i) {
    std::int64_t id = ids.empty() ? static_cast<std::int64_t>(i + 1) : std::stoll(ids[i]);
    auto sw = split_ws(src[i]);
    auto tw = split_ws(tgt[i]);
    if (sw.empty() || tw.empty()) data_error("empty line " + std::to_string(i + 1) + " in parallel corpus");
    corpus.add({Sentence(id, sw), Sentence(id, tw)});
  }
  return corpus;
}

void write_parallel(const ParallelCorpus& corpus, const std::filesystem::path& src_path,
                    const std::filesystem::path& tgt_path, const std::filesystem::path& ids_path) {
  std::vector<std::string> src, tgt, ids;
  for (const auto& p : corpus.pairs()) {
    src.push_back(p.source.text());
    tgt.push_back(p.target.text());
    ids.push_back(std::to_string(p.source.id()));
  }
  write_lines_atomic(src_path, src);
  write_lines_atomic(tgt_path, tgt);
  if (!ids_path.empty()) write_lines_atomic(ids_path, ids);
}

}  // namespace minimt::corpus
