#include "settings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "io_util.hpp"

namespace pcftool {

namespace {

std::string trim(std::string s) {
  auto blank = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), blank));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), blank).base(), s.end());
  return s;
}

std::string env_name(const std::string& key) {
  std::string out = "PCF_";
  for (const char c : key) out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string flag_name(const std::string& key) {
  std::string out = "--" + key;
  std::replace(out.begin(), out.end(), '_', '-');
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) throw UsageError(key + ": not a valid number: '" + text + "'");
  return value;
}

}  // namespace

void Settings::add(const std::string& key, std::string default_value, std::string help) {
  if (!entries_.count(key)) order_.push_back(key);
  entries_[key] = Entry{std::move(default_value), std::move(help), {}, false, {}, {}};
}

void Settings::bind(CLI::App& app) {
  for (const auto& key : order_) {
    auto& e = entries_.at(key);
    app.add_option(flag_name(key), e.flag_value, e.help + " (default " + e.default_value + ")")
        ->each([&e](const std::string&) { e.flag_set = true; });
  }
}

std::map<std::string, std::string> Settings::parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '-', '_');
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::optional<std::string> Settings::process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

void Settings::resolve(const std::filesystem::path& config, const EnvLookup& env) {
  std::map<std::string, std::string> file_values;
  if (!config.empty()) {
    std::ifstream in(config);
    if (!in) throw IoFailure("cannot open config file " + config.string());
    std::stringstream ss;
    ss << in.rdbuf();
    file_values = parse_config_text(ss.str());
  }
  for (const auto& key : order_) {
    auto& e = entries_.at(key);
    if (e.flag_set) {
      e.value = e.flag_value;
      e.source = "flag";
    } else if (auto v = env(env_name(key))) {
      e.value = *v;
      e.source = "env";
    } else if (auto it = file_values.find(key); it != file_values.end()) {
      e.value = it->second;
      e.source = "config";
    } else {
      e.value = e.default_value;
      e.source = "default";
    }
  }
}

const Settings::Entry& Settings::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw std::logic_error("unknown setting " + key);
  return it->second;
}

const std::string& Settings::source(const std::string& key) const { return entry(key).source; }
const std::string& Settings::raw(const std::string& key) const { return entry(key).value; }

double Settings::real(const std::string& key) const { return parse_number<double>(key, raw(key)); }
int Settings::integer(const std::string& key) const { return parse_number<int>(key, raw(key)); }
std::uint64_t Settings::unsigned64(const std::string& key) const {
  return parse_number<std::uint64_t>(key, raw(key));
}

std::vector<std::string> Settings::keys() const { return order_; }

}  // namespace pcftool
