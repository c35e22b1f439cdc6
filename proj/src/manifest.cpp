#include "minimt/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "minimt/error.hpp"
#include "minimt/util.hpp"

namespace minimt {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Data, "SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string command, nlohmann::json config, std::uint64_t seed) {
  doc_["command"] = std::move(command);
  doc_["config"] = std::move(config);
  doc_["seed"] = seed;
  doc_["versions"] = {{"minimt", kVersion},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"checkpoint", "MINIMT1"}};
  doc_["inputs"] = nlohmann::json::array();
  doc_["outputs"] = nlohmann::json::array();
}

void RunManifest::add_input(const std::filesystem::path& path) {
  doc_["inputs"].push_back({{"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::begin(const std::filesystem::path& path) {
  path_ = path;
  doc_["status"] = "running";
  doc_["started_at"] = utc_timestamp();
  write();
}

void RunManifest::finish() {
  auto& outs = doc_["outputs"];
  outs = nlohmann::json::array();
  for (const auto& p : outputs_) outs.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
  doc_["status"] = "complete";
  doc_["finished_at"] = utc_timestamp();
  write();
}

void RunManifest::write() const {
  if (!path_.empty()) write_file_atomic(path_, doc_.dump(2) + "\n");
}

nlohmann::json RunManifest::load(const std::filesystem::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    data_error("corrupt manifest " + path.string() + ": " + e.what());
  }
}

bool RunManifest::verify(const nlohmann::json& manifest) {
  if (manifest.value("status", "") != "complete") return false;
  for (const char* section : {"inputs", "outputs"}) {
    if (!manifest.contains(section)) return false;
    for (const auto& entry : manifest[section]) {
      std::filesystem::path p = entry.at("path").get<std::string>();
      if (!std::filesystem::exists(p) || sha256_file(p) != entry.at("sha256").get<std::string>()) return false;
    }
  }
  return true;
}

}  // namespace minimt
