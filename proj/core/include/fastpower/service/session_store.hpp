#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fastpower::service {

using json = nlohmann::json;

enum class SessionStatus { queued, running, done, failed };
std::string to_string(SessionStatus s);
SessionStatus session_status_from_string(const std::string& s);

struct DesignSession {
  std::string id;
  std::string label;
  std::string request_key;
  json spec;
  SessionStatus status = SessionStatus::queued;
  std::optional<json> result;
  std::optional<json> oracle;
  std::string verify_status;  // empty when no verification was requested
  std::string error;
  std::string created_at;
  std::string finished_at;
};

json session_to_json(const DesignSession& s);
DesignSession session_from_json(const json& j);
/** Listing form: no spec, no curve points. */
json session_summary(const DesignSession& s);

/** 26-character Crockford base32 id: 48-bit millisecond time then 80 random bits; sortable. */
class IdGenerator {
 public:
  IdGenerator();
  std::string next();

 private:
  std::mutex mu_;
  unsigned long long last_ms_ = 0;
  unsigned char rand_[10] = {};
  unsigned long long state_;
};

std::string utc_timestamp();

/**
 * One JSON document per session under <dir>/sessions, written by
 * rename-over-temp, plus an append-only <dir>/index.log of creations and
 * deletions. On open, queued and running sessions come back as queued.
 */
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path dir);

  struct Created {
    std::string id;
    bool created = false;  // false when request_key matched an existing session
  };
  Created create(json spec, std::string label, std::string request_key);

  std::optional<DesignSession> get(const std::string& id) const;
  /** Sessions whose label contains the filter, in id order. */
  std::vector<DesignSession> list(const std::string& label_filter = "") const;
  /** Applies fn under the writer lock and persists; returns the updated session or nothing if absent. */
  std::optional<DesignSession> update(const std::string& id, const std::function<void(DesignSession&)>& fn);
  bool remove(const std::string& id);

  /** Ids found queued or running when the store was opened, in id order. */
  const std::vector<std::string>& recovered() const noexcept { return recovered_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  void persist(const DesignSession& s);
  void log_line(const std::string& line);

  std::filesystem::path dir_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::shared_ptr<const DesignSession>> sessions_;
  std::map<std::string, std::string> by_key_;
  std::vector<std::string> recovered_;
  IdGenerator ids_;
};

}  // namespace fastpower::service
