#include <fstream>
#include <iterator>
#include <stdexcept>

#include <openssl/evp.h>

#include "mtl/cli.hpp"

namespace mtl::cli {

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 digest failed for " + path.string());
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[md[i] >> 4];
    hex += kHex[md[i] & 0xf];
  }
  return hex;
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : input_digests)
    inputs.push_back({{"path", path}, {"sha256", digest}});
  return {{"command", command},
          {"toolkit_version", kToolkitVersion},
          {"config_digest", config_digest ? nlohmann::json(*config_digest) : nlohmann::json()},
          {"input_digests", inputs},
          {"seed", seed ? nlohmann::json(*seed) : nlohmann::json()},
          {"outputs", outputs},
          {"duration_ms", duration_ms}};
}

}  // namespace mtl::cli
