#include "fastpower/service/session_store.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fastpower::service {

namespace fs = std::filesystem;

std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::queued: return "queued";
    case SessionStatus::running: return "running";
    case SessionStatus::done: return "done";
    case SessionStatus::failed: return "failed";
  }
  return "unknown";
}

SessionStatus session_status_from_string(const std::string& s) {
  if (s == "queued") return SessionStatus::queued;
  if (s == "running") return SessionStatus::running;
  if (s == "done") return SessionStatus::done;
  if (s == "failed") return SessionStatus::failed;
  throw std::invalid_argument("unknown session status '" + s + "'");
}

json session_to_json(const DesignSession& s) {
  json j = {{"id", s.id},
            {"label", s.label},
            {"status", to_string(s.status)},
            {"created_at", s.created_at},
            {"finished_at", s.finished_at.empty() ? json(nullptr) : json(s.finished_at)},
            {"spec", s.spec}};
  if (!s.request_key.empty()) j["request_key"] = s.request_key;
  if (s.result) j["result"] = *s.result;
  if (s.oracle) j["oracle"] = *s.oracle;
  if (!s.verify_status.empty()) j["verify_status"] = s.verify_status;
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

DesignSession session_from_json(const json& j) {
  DesignSession s;
  s.id = j.at("id").get<std::string>();
  s.label = j.value("label", "");
  s.request_key = j.value("request_key", "");
  s.spec = j.at("spec");
  s.status = session_status_from_string(j.at("status").get<std::string>());
  if (j.contains("result")) s.result = j["result"];
  if (j.contains("oracle")) s.oracle = j["oracle"];
  s.verify_status = j.value("verify_status", "");
  s.error = j.value("error", "");
  s.created_at = j.value("created_at", "");
  if (j.contains("finished_at") && j["finished_at"].is_string()) s.finished_at = j["finished_at"].get<std::string>();
  return s;
}

json session_summary(const DesignSession& s) {
  json j = {{"id", s.id},
            {"label", s.label},
            {"status", to_string(s.status)},
            {"created_at", s.created_at},
            {"finished_at", s.finished_at.empty() ? json(nullptr) : json(s.finished_at)}};
  if (s.result && s.result->contains("recommendation")) j["recommendation"] = (*s.result)["recommendation"];
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

std::string utc_timestamp() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

IdGenerator::IdGenerator() : state_(std::random_device{}() ^ (static_cast<unsigned long long>(std::random_device{}()) << 32)) {}

std::string IdGenerator::next() {
  static const char* alphabet = "0123456789ABCDEFGHJKMNPQRSTVWXYZ";
  std::lock_guard lock(mu_);
  const unsigned long long ms = static_cast<unsigned long long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count());
  if (ms > last_ms_) {
    last_ms_ = ms;
    std::mt19937_64 gen(state_ ^ ms);
    state_ = gen();
    for (auto& b : rand_) b = static_cast<unsigned char>(gen());
    rand_[0] &= 0x7F;  // leave room for increments within the same millisecond
  } else {
    for (int i = 9; i >= 0 && ++rand_[i] == 0; --i) {
    }
  }
  // 128 bits: 48 time + 80 random, written as 26 base32 digits (top 2 bits zero).
  unsigned char bytes[16];
  for (int i = 0; i < 6; ++i) bytes[i] = static_cast<unsigned char>(last_ms_ >> (8 * (5 - i)));
  for (int i = 0; i < 10; ++i) bytes[6 + i] = rand_[i];
  std::string out(26, '0');
  for (int d = 25, bit = 0; d >= 0; --d, bit += 5) {
    int v = 0;
    for (int k = 0; k < 5; ++k) {
      const int b = bit + k;
      if (b >= 128) break;
      const int byte = 15 - b / 8;
      v |= ((bytes[byte] >> (b % 8)) & 1) << k;
    }
    out[d] = alphabet[v];
  }
  return out;
}

SessionStore::SessionStore(fs::path dir) : dir_(std::move(dir)) {
  fs::create_directories(dir_ / "sessions");
  for (const auto& entry : fs::directory_iterator(dir_ / "sessions")) {
    if (entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      DesignSession s = session_from_json(json::parse(in));
      if (s.status == SessionStatus::queued || s.status == SessionStatus::running) {
        s.status = SessionStatus::queued;
        recovered_.push_back(s.id);
        persist(s);
      }
      if (s.verify_status == "queued" || s.verify_status == "running") s.verify_status = "interrupted";
      if (!s.request_key.empty()) by_key_[s.request_key] = s.id;
      const std::string id = s.id;  // the right side of = is evaluated first
      sessions_[id] = std::make_shared<const DesignSession>(std::move(s));
    } catch (const std::exception& e) {
      std::cerr << "session store: skipping " << entry.path() << ": " << e.what() << "\n";
    }
  }
  std::sort(recovered_.begin(), recovered_.end());
}

void SessionStore::persist(const DesignSession& s) {
  const fs::path target = dir_ / "sessions" / (s.id + ".json");
  const fs::path tmp = dir_ / "sessions" / (s.id + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << session_to_json(s).dump();
    out.flush();
    if (!out) throw std::runtime_error("session store: cannot write " + tmp.string());
  }
  fs::rename(tmp, target);
}

void SessionStore::log_line(const std::string& line) {
  std::ofstream out(dir_ / "index.log", std::ios::app);
  out << utc_timestamp() << ' ' << line << '\n';
}

SessionStore::Created SessionStore::create(json spec, std::string label, std::string request_key) {
  std::unique_lock lock(mu_);
  if (!request_key.empty()) {
    if (auto it = by_key_.find(request_key); it != by_key_.end()) return {it->second, false};
  }
  DesignSession s;
  s.id = ids_.next();
  s.label = std::move(label);
  s.request_key = std::move(request_key);
  s.spec = std::move(spec);
  s.created_at = utc_timestamp();
  persist(s);
  log_line("create " + s.id + (s.request_key.empty() ? "" : " " + s.request_key));
  if (!s.request_key.empty()) by_key_[s.request_key] = s.id;
  const std::string id = s.id;
  sessions_[id] = std::make_shared<const DesignSession>(std::move(s));
  return {id, true};
}

std::optional<DesignSession> SessionStore::get(const std::string& id) const {
  std::shared_ptr<const DesignSession> p;
  {
    std::shared_lock lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    p = it->second;
  }
  return *p;
}

std::vector<DesignSession> SessionStore::list(const std::string& label_filter) const {
  std::vector<std::shared_ptr<const DesignSession>> snap;
  {
    std::shared_lock lock(mu_);
    for (const auto& [id, p] : sessions_) snap.push_back(p);
  }
  std::vector<DesignSession> out;
  for (const auto& p : snap)
    if (label_filter.empty() || p->label.find(label_filter) != std::string::npos) out.push_back(*p);
  return out;
}

std::optional<DesignSession> SessionStore::update(const std::string& id, const std::function<void(DesignSession&)>& fn) {
  std::unique_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  DesignSession s = *it->second;
  fn(s);
  persist(s);
  it->second = std::make_shared<const DesignSession>(s);
  return s;
}

bool SessionStore::remove(const std::string& id) {
  std::unique_lock lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return false;
  if (!it->second->request_key.empty()) by_key_.erase(it->second->request_key);
  sessions_.erase(it);
  std::error_code ec;
  fs::remove(dir_ / "sessions" / (id + ".json"), ec);
  log_line("delete " + id);
  return true;
}

}  // namespace fastpower::service
