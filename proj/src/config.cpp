#include "spiritdiff/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace spiritdiff {

namespace {

std::string trim(const std::string &s)
{
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string &k)
{
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    if (!ok) return false;
  }
  return true;
}

}  // namespace

Config Config::parse_text(const std::string &text)
{
  Config cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key))
      throw ConfigError(key, "config line " + std::to_string(lineno) + ": bad key '" + key + "'");
    cfg.set(key, value);
  }
  return cfg;
}

Config Config::parse_file(const std::string &path)
{
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_text(ss.str());
}

const std::string *Config::find(const std::string &key) const
{
  for (const auto &[k, v] : kv_)
    if (k == key) return &v;
  return nullptr;
}

bool Config::has(const std::string &key) const { return find(key) != nullptr; }

void Config::set(const std::string &key, const std::string &value)
{
  if (!valid_key(key)) throw ConfigError(key, "bad config key '" + key + "'");
  for (auto &[k, v] : kv_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  kv_.emplace_back(key, value);
}

std::string Config::get_str(const std::string &key, const std::string &dflt) const
{
  const std::string *v = find(key);
  return v ? *v : dflt;
}

std::string Config::req_str(const std::string &key) const
{
  const std::string *v = find(key);
  if (!v) throw ConfigError(key, "missing required config field '" + key + "'");
  return *v;
}

long long Config::get_int(const std::string &key, long long dflt) const
{
  return find(key) ? req_int(key) : dflt;
}

long long Config::req_int(const std::string &key) const
{
  const std::string s = req_str(key);
  size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception &) {
    throw ConfigError(key, "config field '" + key + "' must be an integer, got '" + s + "'");
  }
  if (used != s.size())
    throw ConfigError(key, "config field '" + key + "' must be an integer, got '" + s + "'");
  return v;
}

double Config::get_real(const std::string &key, double dflt) const
{
  return find(key) ? req_real(key) : dflt;
}

double Config::req_real(const std::string &key) const
{
  const std::string s = req_str(key);
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw ConfigError(key, "config field '" + key + "' must be a number, got '" + s + "'");
  }
  if (used != s.size())
    throw ConfigError(key, "config field '" + key + "' must be a number, got '" + s + "'");
  return v;
}

bool Config::get_bool(const std::string &key, bool dflt) const
{
  const std::string *p = find(key);
  if (!p) return dflt;
  const std::string &s = *p;
  if (s == "true" || s == "1" || s == "on" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "off" || s == "no") return false;
  throw ConfigError(key, "config field '" + key + "' must be a boolean, got '" + s + "'");
}

std::vector<std::string> Config::echo_lines() const
{
  std::vector<std::string> out;
  out.reserve(kv_.size());
  for (const auto &[k, v] : kv_) out.push_back(k + " = " + v);
  return out;
}

}  // namespace spiritdiff
