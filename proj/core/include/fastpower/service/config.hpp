#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <string>

namespace fastpower::service {

struct ServiceConfig {
  std::string data_dir = "fastpower-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  std::size_t workers = 0;   // threads per computation; 0 = hardware concurrency
  std::size_t max_jobs = 1;  // computations running at once
  std::size_t default_m = 1024;
  std::string cors_origin = "*";
};

/**
 * Flat TOML subset: `key = value` lines, optional [section] headers (keys are
 * looked up with and without the section prefix), # comments, quoted strings,
 * integers, floats and booleans. Throws std::runtime_error with a line number.
 */
std::map<std::string, std::string> parse_toml_subset(const std::string& text);

ServiceConfig load_config(const std::string& path);
ServiceConfig config_from_text(const std::string& text);

/**
 * FASTPOWER_DATA_DIR, FASTPOWER_HOST, FASTPOWER_PORT, FASTPOWER_WORKERS,
 * FASTPOWER_MAX_JOBS, FASTPOWER_DEFAULT_M, FASTPOWER_CORS_ORIGIN.
 */
using EnvLookup = std::function<const char*(const char*)>;
void apply_env_overrides(ServiceConfig& cfg, const EnvLookup& getenv);
void apply_env_overrides(ServiceConfig& cfg);

}  // namespace fastpower::service
