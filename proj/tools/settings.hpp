#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace pcftool {

/// Thrown for values that parse but are out of range, or do not parse.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Named tunables resolved with precedence flag > environment (PCF_<KEY>) >
/// config file (`key = value` lines, `#` comments) > built-in default.
/// Keys use underscores; the matching flag is --key-with-dashes.
class Settings {
 public:
  using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

  void add(const std::string& key, std::string default_value, std::string help);
  /// Registers one string option per key on `app`.
  void bind(CLI::App& app);

  /// Pass the flag values collected by bind(); a config path may be empty.
  void resolve(const std::filesystem::path& config, const EnvLookup& env);

  /// Where the winning value came from: "flag", "env", "config" or "default".
  const std::string& source(const std::string& key) const;
  const std::string& raw(const std::string& key) const;

  double real(const std::string& key) const;
  int integer(const std::string& key) const;
  std::uint64_t unsigned64(const std::string& key) const;

  std::vector<std::string> keys() const;

  static std::map<std::string, std::string> parse_config_text(const std::string& text);
  static std::optional<std::string> process_env(const std::string& name);

 private:
  struct Entry {
    std::string default_value;
    std::string help;
    std::string flag_value;
    bool flag_set = false;
    std::string value;
    std::string source;
  };
  const Entry& entry(const std::string& key) const;

  std::map<std::string, Entry> entries_;
  std::vector<std::string> order_;
};

}  // namespace pcftool
