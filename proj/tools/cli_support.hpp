#pragma once

#include "autopl/error.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace autopl::cli
{

using json = nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "0.1.0";

struct UsageError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Binds one variable to both a command-line flag and a flat config-file key.
// Precedence: flag > config file > preset > built-in default.
class Settings
{
public:
  explicit Settings(CLI::App* app) : app_(app) {}

  template <class T>
  CLI::Option* option(const std::string& key, T& var, const std::string& help)
  {
    auto* opt = app_->add_option("--" + dashed(key), var, help);
    if constexpr (std::is_same_v<T, std::vector<std::size_t>>)
      opt->delimiter(',');
    record(key, opt, var);
    return opt;
  }

  CLI::Option* flag(const std::string& key, bool& var, const std::string& help)
  {
    auto* opt = app_->add_flag("--" + dashed(key), var, help);
    record(key, opt, var);
    return opt;
  }

  CLI::Option* config_option() { return app_->add_option("--config", config_path_, "JSON file of flat key/value settings"); }

  bool given(const std::string& key) const { return find(key).opt->count() > 0; }
  bool in_config(const std::string& key) const { return config_.contains(key); }
  // Neither a flag nor the config file set this key.
  bool unset(const std::string& key) const { return !given(key) && !in_config(key); }

  // Reads --config (if any). Call after parsing, before using any value.
  void load_config()
  {
    if (config_path_.empty())
      return;
    std::ifstream in(config_path_);
    if (!in)
      throw UsageError("cannot open config file " + config_path_);
    try {
      config_ = json::parse(in);
    } catch (const json::exception& e) {
      throw UsageError("config file " + config_path_ + " is not valid JSON: " + e.what());
    }
    if (!config_.is_object())
      throw UsageError("config file " + config_path_ + " must hold a JSON object");
    for (const auto& [key, value] : config_.items()) {
      const auto& b = find(key);
      if (b.opt->count() > 0)
        continue;
      assign(b, value, "config key '" + key + "'");
    }
  }

  // Applies preset values to keys that neither a flag nor the config set.
  void apply_preset(const json& preset)
  {
    for (const auto& [key, value] : preset.items())
      if (unset(key))
        assign(find(key), value, "preset key '" + key + "'");
  }

  json snapshot() const
  {
    json j = json::object();
    for (const auto& b : bindings_)
      j[b.key] = b.get();
    return j;
  }

  const std::string& config_path() const { return config_path_; }

private:
  struct Binding
  {
    std::string key;
    CLI::Option* opt;
    std::function<void(const json&)> set;
    std::function<json()> get;
  };

  static std::string dashed(std::string s)
  {
    for (auto& c : s)
      if (c == '_')
        c = '-';
    return s;
  }

  template <class T>
  void record(const std::string& key, CLI::Option* opt, T& var)
  {
    bindings_.push_back({key, opt, [&var](const json& j) { var = j.get<T>(); }, [&var] { return json(var); }});
  }

  const Binding& find(const std::string& key) const
  {
    for (const auto& b : bindings_)
      if (b.key == key)
        return b;
    throw UsageError("unknown setting '" + key + "'");
  }

  static void assign(const Binding& b, const json& value, const std::string& what)
  {
    try {
      b.set(value);
    } catch (const json::exception&) {
      throw UsageError(what + " has the wrong type");
    }
  }

  CLI::App* app_;
  std::vector<Binding> bindings_;
  std::string config_path_;
  json config_ = json::object();
};

inline std::string sha256_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

inline std::string utc_now()
{
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects what a command read and wrote; written last as <out>/manifest.
class Manifest
{
public:
  Manifest(std::string command, fs::path out_dir) : command_(std::move(command)), dir_(std::move(out_dir))
  {
    started_ = utc_now();
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  void input(const std::string& path)
  {
    if (!path.empty())
      inputs_[path] = sha256_file(path);
  }

  // Opens <out>/name for writing and records it.
  std::ofstream output(const std::string& name)
  {
    outputs_.insert(name);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f)
      throw DataError("cannot write " + (dir_ / name).string());
    return f;
  }
  void record_output(const std::string& name) { outputs_.insert(name); }

  void write(const json& config, std::uint64_t seed, const std::vector<std::string>& argv)
  {
    json j;
    j["tool"] = "autopl";
    j["version"] = kVersion;
    j["command"] = command_;
    j["argv"] = argv;
    j["config"] = config;
    j["seed"] = seed;
    j["inputs"] = json::object();
    for (const auto& [p, h] : inputs_)
      j["inputs"][p] = {{"sha256", h}};
    j["outputs"] = std::vector<std::string>(outputs_.begin(), outputs_.end());
    j["started"] = started_;
    j["finished"] = utc_now();
    std::ofstream f(dir_ / "manifest", std::ios::binary);
    if (!f)
      throw DataError("cannot write " + (dir_ / "manifest").string());
    f << j.dump(2) << '\n';
  }

private:
  std::string command_;
  fs::path dir_;
  std::string started_;
  std::map<std::string, std::string> inputs_;
  std::set<std::string> outputs_;
};

// --threads, else config, else AUTOPL_THREADS, else 1.
inline unsigned resolve_threads(const Settings& s, unsigned value)
{
  if (!s.unset("threads"))
    return std::max(1u, value);
  if (const char* env = std::getenv("AUTOPL_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1)
      throw UsageError(std::string("AUTOPL_THREADS must be a positive integer, got '") + env + "'");
    return static_cast<unsigned>(v);
  }
  return 1;
}

} // namespace autopl::cli
