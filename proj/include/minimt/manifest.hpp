#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace minimt {

inline constexpr const char* kVersion = "0.1.0";

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
std::string utc_timestamp();

// Provenance record written next to every command's outputs. Timestamps live
// here and nowhere else, so all other artifacts stay byte-reproducible.
class RunManifest {
 public:
  RunManifest(std::string command, nlohmann::json config, std::uint64_t seed);

  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void note(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }
  // Writes with status "running"; call before any expensive work starts.
  void begin(const std::filesystem::path& path);
  // Records output digests and rewrites with status "complete".
  void finish();

  const nlohmann::json& json() const noexcept { return doc_; }

  static nlohmann::json load(const std::filesystem::path& path);
  // True when every recorded input and output still exists with its digest.
  static bool verify(const nlohmann::json& manifest);

 private:
  void write() const;

  nlohmann::json doc_;
  std::filesystem::path path_;
  std::vector<std::filesystem::path> outputs_;
};

}  // namespace minimt
