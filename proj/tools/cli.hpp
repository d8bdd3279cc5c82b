#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace spdebias::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr const char* kToolVersion = "0.1.0";

/// Full configuration with every default spelled out.
json default_config();

/// Recursively overlays `user` onto `base`; unknown keys throw std::runtime_error.
json merge_config(const json& base, const json& user, const std::string& path = "");

/// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string config_digest(const json& config);

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double x);

/// Entry point shared by the executable and the tests. args excludes argv[0].
int run(const std::vector<std::string>& args);

}  // namespace spdebias::cli
