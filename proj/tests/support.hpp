#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "minimt/corpus.hpp"
#include "minimt/util.hpp"

namespace testsupport {

namespace fs = std::filesystem;

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "minimt") {
    std::random_device rd;
    path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline minimt::corpus::ParallelCorpus make_corpus(const std::vector<std::pair<std::string, std::string>>& pairs) {
  using namespace minimt::corpus;
  ParallelCorpus c("en", "hi");
  std::int64_t id = 1;
  for (const auto& [s, t] : pairs) {
    c.add({Sentence(id, tokenize_words(s)), Sentence(id, tokenize_words(t))});
    ++id;
  }
  return c;
}

// Toy translation task: the target is the reversed source with each word
// mapped s<k> -> t<k>, followed by a fixed "end" word. Sources are 3-6 words
// over a 20-word vocabulary.
inline minimt::corpus::ParallelCorpus word_toy_corpus(std::size_t n = 50, std::uint64_t seed = 42) {
  using namespace minimt::corpus;
  minimt::Rng rng(seed);
  ParallelCorpus pc("en", "xx");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> s, t;
    std::size_t len = 3 + rng.below(4);
    for (std::size_t k = 0; k < len; ++k) s.push_back("s" + std::to_string(rng.below(20)));
    for (std::size_t k = len; k-- > 0;) t.push_back("t" + s[k].substr(1));
    t.push_back("end");
    auto id = static_cast<std::int64_t>(i + 1);
    pc.add({Sentence(id, s), Sentence(id, t)});
  }
  return pc;
}

// Copy task over 3-7 character strings drawn from 8 letters.
inline minimt::corpus::ParallelCorpus char_copy_corpus(std::size_t n = 50, std::uint64_t seed = 42) {
  using namespace minimt::corpus;
  minimt::Rng rng(seed);
  ParallelCorpus pc("xx", "xx");
  for (std::size_t i = 0; i < n; ++i) {
    std::string str;
    std::size_t len = 3 + rng.below(5);
    for (std::size_t k = 0; k < len; ++k) str.push_back(static_cast<char>('a' + rng.below(8)));
    auto id = static_cast<std::int64_t>(i + 1);
    pc.add({Sentence(id, std::vector<std::string>{str}), Sentence(id, std::vector<std::string>{str})});
  }
  return pc;
}

}  // namespace testsupport
