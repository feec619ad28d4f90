#include "fastpower/service/http_api.hpp"

#include <cmath>
#include <sstream>

#include <httplib.h>

#include "fastpower/errors.hpp"
#include "fastpower/service/design_json.hpp"
#include "fastpower/service/jobs.hpp"
#include "fastpower/service/session_store.hpp"

namespace fastpower::service {

namespace {

const char* kSchema =
#include "design_spec_schema.inc"
    ;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message,
                const std::string& field = "") {
  json body = {{"error", code}, {"message", message}};
  if (!field.empty()) body["field"] = field;
  send_json(res, status, body);
}

std::vector<double> parse_grid(const json& j) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& x : j) {
      if (!x.is_number()) throw InvalidDesign("n_grid", "expected numbers");
      grid.push_back(x.get<double>());
    }
  } else if (j.is_string()) {
    // a:b:c inclusive
    std::istringstream in(j.get<std::string>());
    double a, b, c;
    char s1, s2;
    if (!(in >> a >> s1 >> b >> s2 >> c) || s1 != ':' || s2 != ':' || !(c > 0) || b < a)
      throw InvalidDesign("n_grid", "expected start:stop:step");
    for (double n = a; n <= b + 1e-9 * c; n += c) grid.push_back(n);
  } else {
    throw InvalidDesign("n_grid", "expected an array or \"start:stop:step\"");
  }
  if (grid.empty()) throw InvalidDesign("n_grid", "grid is empty");
  for (double n : grid)
    if (!(n >= 2.0) || !std::isfinite(n)) throw InvalidDesign("n_grid", "sample sizes must be at least 2");
  return grid;
}

}  // namespace

const std::string& design_schema() {
  static const std::string s(kSchema);
  return s;
}

struct ApiServer::Impl {
  ServiceConfig cfg;
  SessionStore store;
  JobRunner runner;
  httplib::Server server;
  int bound_port = -1;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)), store(cfg.data_dir), runner(store, cfg) {
    for (const auto& id : store.recovered()) runner.enqueue_curve(id);
    routes();
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", cfg.cors_origin},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });
    server.Get("/schema", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(design_schema(), "application/schema+json");
    });

    server.Post("/designs", [this](const httplib::Request& req, httplib::Response& res) { post_design(req, res); });
    server.Get("/designs", [this](const httplib::Request& req, httplib::Response& res) {
      json out = json::array();
      for (const auto& s : store.list(req.get_param_value("label"))) out.push_back(session_summary(s));
      send_json(res, 200, out);
    });
    server.Get(R"(/designs/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto s = store.get(req.matches[1]);
      if (!s) return send_error(res, 404, "not_found", "no such design");
      send_json(res, 200, session_to_json(*s));
    });
    server.Delete(R"(/designs/([0-9A-Za-z]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto s = store.get(id);
      if (!s) return send_error(res, 404, "not_found", "no such design");
      if (runner.cancel(id)) return send_json(res, 202, session_to_json(*store.get(id)));
      runner.cancel_verify(id);
      store.remove(id);
      res.status = 204;
    });
    server.Post(R"(/designs/([0-9A-Za-z]+)/verify)", [this](const httplib::Request& req, httplib::Response& res) {
      verify(req.matches[1], req, res);
    });
  }

  void post_design(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error& e) {
      return send_error(res, 400, "invalid_json", e.what());
    }
    if (!body.is_object()) return send_error(res, 400, "invalid_design", "expected an object", "$");
    std::string request_key;
    if (auto it = body.find("request_key"); it != body.end()) {
      if (!it->is_string()) return send_error(res, 400, "invalid_design", "expected a string", "request_key");
      request_key = it->get<std::string>();
      body.erase("request_key");
    }
    DesignSpec spec;
    try {
      spec = design_from_json(body, ParseDefaults{cfg.default_m});
      check_attainable(spec);
    } catch (const InvalidDesign& e) {
      return send_error(res, 400, "invalid_design", e.what(), e.field());
    } catch (const UnattainableDesign& e) {
      return send_error(res, 422, "unattainable_design", e.what());
    } catch (const std::exception& e) {
      return send_error(res, 400, "invalid_design", e.what());
    }
    const auto created = store.create(design_to_json(spec), spec.label, request_key);
    if (created.created) runner.enqueue_curve(created.id);
    send_json(res, 202, {{"id", created.id}, {"duplicate", !created.created}});
  }

  void verify(const std::string& id, const httplib::Request& req, httplib::Response& res) {
    auto s = store.get(id);
    if (!s) return send_error(res, 404, "not_found", "no such design");
    json body;
    try {
      body = req.body.empty() ? json::object() : json::parse(req.body);
    } catch (const json::parse_error& e) {
      return send_error(res, 400, "invalid_json", e.what());
    }
    std::vector<double> grid;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    try {
      if (!body.is_object()) throw InvalidDesign("$", "expected an object");
      if (!body.contains("n_grid")) throw InvalidDesign("n_grid", "required field is missing");
      grid = parse_grid(body["n_grid"]);
      if (!body.contains("reps") || !body["reps"].is_number_integer())
        throw InvalidDesign("reps", "expected an integer");
      if (body["reps"].get<long long>() < 100) throw InvalidDesign("reps", "at least 100 replicates are required");
      reps = body["reps"].get<std::size_t>();
      if (body.contains("seed")) {
        if (!body["seed"].is_number_unsigned()) throw InvalidDesign("seed", "expected a non-negative integer");
        seed = body["seed"].get<std::uint64_t>();
      } else {
        seed = s->spec.value("seed", std::uint64_t{0});
      }
    } catch (const InvalidDesign& e) {
      return send_error(res, 400, "invalid_request", e.what(), e.field());
    }
    if (s->status != SessionStatus::done)
      return send_error(res, 409, "conflict", "design is " + to_string(s->status) + "; verification needs a finished curve");
    store.update(id, [](DesignSession& d) { d.verify_status = "queued"; });
    runner.enqueue_verify(id, std::move(grid), reps, seed);
    send_json(res, 202, {{"id", id}, {"verify_status", "queued"}});
  }
};

ApiServer::ApiServer(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

ApiServer::~ApiServer() { stop(false); }

bool ApiServer::bind() {
  // SO_REUSEADDR only: httplib's default also sets SO_REUSEPORT, which would let
  // a second server silently share the port.
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof yes);
  });
  if (impl_->cfg.port == 0) {
    impl_->bound_port = impl_->server.bind_to_any_port(impl_->cfg.host);
    return impl_->bound_port > 0;
  }
  if (!impl_->server.bind_to_port(impl_->cfg.host, impl_->cfg.port)) return false;
  impl_->bound_port = impl_->cfg.port;
  return true;
}

int ApiServer::port() const { return impl_->bound_port; }

void ApiServer::listen() { impl_->server.listen_after_bind(); }

void ApiServer::stop(bool drain) {
  impl_->server.stop();
  impl_->runner.shutdown(drain);
}

void ApiServer::wait_idle() { impl_->runner.wait_idle(); }

}  // namespace fastpower::service
