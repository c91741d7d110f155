#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hot/executor.hpp"

namespace hot {

/// Environment variable -> config field table.
struct EnvOverride {
  const char* name;
  const char* help;
};

const std::vector<EnvOverride>& env_overrides();

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Applies HOT_* overrides found by `lookup` (the process environment by default).
/// Returns the names applied. Throws UsageError on unparsable or rejected values.
std::vector<std::string> apply_env_overrides(ExecutorConfig& cfg, const EnvLookup& lookup = {});

}  // namespace hot
