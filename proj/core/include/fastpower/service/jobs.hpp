#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "fastpower/service/config.hpp"
#include "fastpower/service/session_store.hpp"

namespace fastpower::service {

/**
 * Bounded pool that runs curve and verification jobs against the store.
 * Cancellation is cooperative: the engine polls a per-session flag.
 */
class JobRunner {
 public:
  JobRunner(SessionStore& store, const ServiceConfig& cfg);
  ~JobRunner();
  JobRunner(const JobRunner&) = delete;
  JobRunner& operator=(const JobRunner&) = delete;

  void enqueue_curve(const std::string& id);
  void enqueue_verify(const std::string& id, std::vector<double> n_grid, std::size_t reps, std::uint64_t seed);

  /**
   * Marks the session failed("cancelled") and signals any running job for it.
   * Returns false if the session is not queued or running.
   */
  bool cancel(const std::string& id);
  /** Signals a running verification for id, if any. */
  void cancel_verify(const std::string& id);

  /** Stops accepting work. drain = finish queued jobs first; otherwise cancel everything. */
  void shutdown(bool drain);
  /** Blocks until the queue is empty and no job is running. */
  void wait_idle();

 private:
  struct Job {
    enum class Kind { curve, verify } kind;
    std::string id;
    std::vector<double> n_grid;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
  };
  void worker();
  void run(const Job& job, const std::shared_ptr<std::atomic<bool>>& flag);
  void run_curve(const Job& job, const std::atomic<bool>& flag);
  void run_verify(const Job& job, const std::atomic<bool>& flag);
  std::shared_ptr<std::atomic<bool>> flag_for(const std::string& key);

  SessionStore& store_;
  ServiceConfig cfg_;
  std::mutex mu_;
  std::condition_variable cv_, idle_cv_;
  std::deque<Job> queue_;
  std::map<std::string, std::shared_ptr<std::atomic<bool>>> flags_;  // keyed by kind + id
  std::size_t active_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

}  // namespace fastpower::service
