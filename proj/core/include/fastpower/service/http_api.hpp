#pragma once

#include <memory>
#include <string>

#include "fastpower/service/config.hpp"

namespace fastpower::service {

/** JSON schema for DesignSpec documents, as served at GET /schema. */
const std::string& design_schema();

/**
 * HTTP front end:
 *   POST   /designs               202 {id} | 400 field diagnostics | 422 unattainable
 *   GET    /designs?label=...     session summaries
 *   GET    /designs/{id}          full session, curve points once done | 404
 *   DELETE /designs/{id}          204, or 202 with failed("cancelled") for a live job
 *   POST   /designs/{id}/verify   202 | 400 | 404 | 409 unless done
 *   GET    /schema, GET /healthz
 */
class ApiServer {
 public:
  explicit ApiServer(ServiceConfig cfg);
  ~ApiServer();

  /** Binds host:port (port 0 picks a free one). Returns false if the address is unavailable. */
  bool bind();
  int port() const;
  /** Serves until stop(); call after bind(). */
  void listen();
  /** Stops the listener; drain = let queued jobs finish before returning. */
  void stop(bool drain = true);
  /** Blocks until no job is queued or running. */
  void wait_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fastpower::service
