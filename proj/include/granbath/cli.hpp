#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "granbath/experiments.hpp"

namespace granbath {

/// Exit codes of the command-line tool.
namespace exit_code {
inline constexpr int success = 0;
inline constexpr int verdict_fail = 1;
inline constexpr int config_error = 2;
inline constexpr int numeric_fault = 3;
}  // namespace exit_code

/// Bad configuration; `key` names the offending setting.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(key + ": " + message), key_(std::move(key))
    {
    }
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Ordered "key = value" settings; later entries override earlier ones.
using Settings = std::map<std::string, std::string>;

/// Parses "key = value" lines; '#' starts a comment, blank lines are skipped.
Settings parse_settings(std::istream& in, const std::string& source = "config");
Settings read_settings(const std::filesystem::path& path);

enum class SnapshotFormat { none, csv, binary };

struct RunConfig
{
    ExperimentSpec spec;
    SnapshotFormat snapshot = SnapshotFormat::none;
};

/// Every accepted key with its documented default.
const std::vector<std::pair<std::string, std::string>>& known_settings();

/// Applies settings on top of the defaults for `kind` and validates the
/// result. Throws ConfigError on unknown keys, malformed values or violated
/// invariants.
RunConfig build_config(ExperimentKind kind, const Settings& settings);

/// Entry point of the `granbath` tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace granbath
