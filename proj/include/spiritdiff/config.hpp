#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace spiritdiff {

// Bad or missing configuration; field names the offending key when known.
struct ConfigError : std::runtime_error {
  std::string field;
  ConfigError(std::string field_, const std::string &msg)
      : std::runtime_error(msg), field(std::move(field_))
  {
  }
};

// Ordered key = value table with '#' comments and dotted section keys
// (mask.r, sde.beta_max, ...). Later assignments to a key overwrite the
// earlier value in place, so the echo stays one line per key.
class Config {
public:
  static Config parse_text(const std::string &text);
  static Config parse_file(const std::string &path);

  bool has(const std::string &key) const;
  void set(const std::string &key, const std::string &value);

  std::string get_str(const std::string &key, const std::string &dflt) const;
  long long get_int(const std::string &key, long long dflt) const;
  double get_real(const std::string &key, double dflt) const;
  bool get_bool(const std::string &key, bool dflt) const;

  std::string req_str(const std::string &key) const;
  long long req_int(const std::string &key) const;
  double req_real(const std::string &key) const;

  // normalized "key = value" lines in first-assignment order, the form
  // echoed into manifests
  std::vector<std::string> echo_lines() const;

private:
  const std::string *find(const std::string &key) const;

  std::vector<std::pair<std::string, std::string>> kv_;
};

}  // namespace spiritdiff
