#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mtl::cli {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  kSuccess = 0,
  kUnexpected = 1,
  kUsageError = 2,
  kNumericalFailure = 3,
};

/// Entry point shared by the `mtl` executable and the tests. `args` excludes
/// the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Hex SHA-256 of a file's bytes.
std::string file_digest(const std::filesystem::path& path);

/// Provenance record written next to every command's outputs as
/// manifest.json. Only `duration_ms` varies between identical invocations.
struct RunManifest {
  std::string command;
  std::optional<std::string> config_digest;
  std::vector<std::pair<std::string, std::string>> input_digests;  // (path, sha256)
  std::optional<std::uint64_t> seed;
  std::vector<std::string> outputs;
  double duration_ms = 0.0;

  nlohmann::json to_json() const;
};

}  // namespace mtl::cli
