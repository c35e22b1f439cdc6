#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace minimt {

// Reads a UTF-8 text file into lines, stripping LF / CRLF terminators.
std::vector<std::string> read_lines(const std::filesystem::path& path);

// Writes via a sibling temp file and rename so readers never see partial output.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_lines_atomic(const std::filesystem::path& path, const std::vector<std::string>& lines);

std::string read_file(const std::filesystem::path& path);

// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view text);

std::vector<std::string> split_ws(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep = " ");

void log_warning(std::string_view message);

// Seeded generator whose output sequence is identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace minimt
