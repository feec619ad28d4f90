#include "fastpower/service/jobs.hpp"

#include <algorithm>

#include "fastpower/errors.hpp"
#include "fastpower/oracle.hpp"
#include "fastpower/service/design_json.hpp"

namespace fastpower::service {

namespace {
std::string curve_key(const std::string& id) { return "curve:" + id; }
std::string verify_key(const std::string& id) { return "verify:" + id; }
}  // namespace

JobRunner::JobRunner(SessionStore& store, const ServiceConfig& cfg) : store_(store), cfg_(cfg) {
  const std::size_t n = std::max<std::size_t>(cfg_.max_jobs, 1);
  for (std::size_t i = 0; i < n; ++i) threads_.emplace_back([this] { worker(); });
}

JobRunner::~JobRunner() { shutdown(false); }

std::shared_ptr<std::atomic<bool>> JobRunner::flag_for(const std::string& key) {
  auto& f = flags_[key];
  if (!f) f = std::make_shared<std::atomic<bool>>(false);
  return f;
}

void JobRunner::enqueue_curve(const std::string& id) {
  std::lock_guard lock(mu_);
  if (stopping_) return;
  flag_for(curve_key(id));
  queue_.push_back(Job{Job::Kind::curve, id, {}, 0, 0});
  cv_.notify_one();
}

void JobRunner::enqueue_verify(const std::string& id, std::vector<double> n_grid, std::size_t reps, std::uint64_t seed) {
  std::lock_guard lock(mu_);
  if (stopping_) return;
  flag_for(verify_key(id))->store(false);
  queue_.push_back(Job{Job::Kind::verify, id, std::move(n_grid), reps, seed});
  cv_.notify_one();
}

bool JobRunner::cancel(const std::string& id) {
  bool changed = false;
  store_.update(id, [&](DesignSession& s) {
    if (s.status == SessionStatus::queued || s.status == SessionStatus::running) {
      s.status = SessionStatus::failed;
      s.error = "cancelled";
      s.finished_at = utc_timestamp();
      changed = true;
    }
  });
  std::lock_guard lock(mu_);
  if (auto it = flags_.find(curve_key(id)); it != flags_.end()) it->second->store(true);
  return changed;
}

void JobRunner::cancel_verify(const std::string& id) {
  std::lock_guard lock(mu_);
  if (auto it = flags_.find(verify_key(id)); it != flags_.end()) it->second->store(true);
}

void JobRunner::shutdown(bool drain) {
  {
    std::unique_lock lock(mu_);
    if (!drain) {
      for (auto& [k, f] : flags_) f->store(true);
      queue_.clear();
    }
    stopping_ = true;
    cv_.notify_all();
  }
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  threads_.clear();
}

void JobRunner::wait_idle() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && active_ == 0; });
}

void JobRunner::worker() {
  for (;;) {
    Job job;
    std::shared_ptr<std::atomic<bool>> flag;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      job = std::move(queue_.front());
      queue_.pop_front();
      flag = flag_for(job.kind == Job::Kind::curve ? curve_key(job.id) : verify_key(job.id));
      ++active_;
    }
    run(job, flag);
    {
      std::lock_guard lock(mu_);
      --active_;
      if (job.kind == Job::Kind::curve) flags_.erase(curve_key(job.id));
      if (queue_.empty() && active_ == 0) idle_cv_.notify_all();
    }
  }
}

void JobRunner::run(const Job& job, const std::shared_ptr<std::atomic<bool>>& flag) {
  if (job.kind == Job::Kind::curve) run_curve(job, *flag);
  else run_verify(job, *flag);
}

void JobRunner::run_curve(const Job& job, const std::atomic<bool>& flag) {
  bool start = false;
  auto session = store_.update(job.id, [&](DesignSession& s) {
    if (s.status == SessionStatus::queued && !flag.load()) {
      s.status = SessionStatus::running;
      start = true;
    }
  });
  if (!session || !start) return;

  std::optional<json> result;
  std::string error;
  try {
    const DesignSpec spec = design_from_json(session->spec, ParseDefaults{cfg_.default_m});
    CurveOptions opts;
    opts.workers = cfg_.workers;
    opts.cancel = &flag;
    result = curve_to_json(spec, power_curve(spec, opts));
  } catch (const Cancelled&) {
    error = "cancelled";
  } catch (const InvalidDesign& e) {
    error = e.field() + ": " + e.what();
  } catch (const std::exception& e) {
    error = e.what();
  }
  store_.update(job.id, [&](DesignSession& s) {
    if (s.status != SessionStatus::running) return;  // cancelled meanwhile
    if (flag.load()) {
      s.status = SessionStatus::failed;
      s.error = "cancelled";
    } else if (result) {
      s.status = SessionStatus::done;
      s.result = std::move(result);
    } else {
      s.status = SessionStatus::failed;
      s.error = error;
    }
    s.finished_at = utc_timestamp();
  });
}

void JobRunner::run_verify(const Job& job, const std::atomic<bool>& flag) {
  auto session = store_.update(job.id, [&](DesignSession& s) { s.verify_status = "running"; });
  if (!session) return;
  std::optional<json> oracle;
  std::string error;
  try {
    DesignSpec spec = design_from_json(session->spec, ParseDefaults{cfg_.default_m});
    OracleOptions opts;
    opts.workers = cfg_.workers;
    opts.cancel = &flag;
    oracle = oracle_to_json(conventional_curve(spec, job.n_grid, job.reps, job.seed, opts));
  } catch (const Cancelled&) {
    error = "cancelled";
  } catch (const std::exception& e) {
    error = e.what();
  }
  store_.update(job.id, [&](DesignSession& s) {
    if (oracle && !flag.load()) {
      s.oracle = std::move(oracle);
      s.verify_status = "done";
    } else {
      s.verify_status = "failed: " + (flag.load() ? std::string("cancelled") : error);
    }
  });
}

}  // namespace fastpower::service
