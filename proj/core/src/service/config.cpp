#include "fastpower/service/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fastpower::service {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote == 0 && (c == '"' || c == '\'')) quote = c;
    else if (c == quote && (c == '\'' || line[i - 1] != '\\')) quote = 0;
    if (c == '#' && quote == 0) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& v, int lineno) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v[i] == '\\' && i + 2 < v.size()) {
        const char c = v[++i];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else {
        out += v[i];
      }
    }
    return out;
  }
  if (v.size() >= 2 && v.front() == '\'' && v.back() == '\'') return v.substr(1, v.size() - 2);  // literal string
  if (!v.empty() && (v.front() == '"' || v.front() == '\''))
    throw std::runtime_error("config line " + std::to_string(lineno) + ": unterminated string");
  return v;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size() || x < 0) throw std::runtime_error("config: " + key + " must be a non-negative integer");
  return static_cast<std::size_t>(x);
}

void apply(ServiceConfig& cfg, const std::string& key, const std::string& v) {
  if (key == "data_dir") cfg.data_dir = v;
  else if (key == "host") cfg.host = v;
  else if (key == "port") {
    const std::size_t p = to_size(key, v);
    if (p > 65535) throw std::runtime_error("config: port out of range");
    cfg.port = static_cast<int>(p);
  } else if (key == "workers") cfg.workers = to_size(key, v);
  else if (key == "max_jobs") {
    cfg.max_jobs = to_size(key, v);
    if (cfg.max_jobs == 0) throw std::runtime_error("config: max_jobs must be at least 1");
  } else if (key == "default_m") {
    cfg.default_m = to_size(key, v);
    if (cfg.default_m == 0) throw std::runtime_error("config: default_m must be at least 1");
  } else if (key == "cors_origin") cfg.cors_origin = v;
  else throw std::runtime_error("config: unknown key '" + key + "'");
}

}  // namespace

std::map<std::string, std::string> parse_toml_subset(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw std::runtime_error("config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::runtime_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = unquote(trim(line.substr(eq + 1)), lineno);
    if (key.empty()) throw std::runtime_error("config line " + std::to_string(lineno) + ": empty key");
    if (trim(line.substr(eq + 1)).empty())
      throw std::runtime_error("config line " + std::to_string(lineno) + ": missing value for " + key);
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

ServiceConfig config_from_text(const std::string& text) {
  ServiceConfig cfg;
  for (const auto& [k, v] : parse_toml_subset(text)) {
    const auto dot = k.rfind('.');
    apply(cfg, dot == std::string::npos ? k : k.substr(dot + 1), v);
  }
  return cfg;
}

ServiceConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_text(ss.str());
}

void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& getenv) {
  static const std::pair<const char*, const char*> vars[] = {
      {"FASTPOWER_DATA_DIR", "data_dir"}, {"FASTPOWER_HOST", "host"},         {"FASTPOWER_PORT", "port"},
      {"FASTPOWER_WORKERS", "workers"},   {"FASTPOWER_MAX_JOBS", "max_jobs"}, {"FASTPOWER_DEFAULT_M", "default_m"},
      {"FASTPOWER_CORS_ORIGIN", "cors_origin"}};
  for (const auto& [env, key] : vars)
    if (const char* v = getenv(env)) apply(cfg, key, v);
}

void apply_env_overrides(ServiceConfig& cfg) {
  apply_env_overrides(cfg, [](const char* name) { return std::getenv(name); });
}

}  // namespace fastpower::service
