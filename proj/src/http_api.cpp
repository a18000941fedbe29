#include "dispmon/http_api.hpp"

#include "dispmon/errors.hpp"

#include <httplib.h>

#include <charconv>

namespace dispmon {

using nlohmann::json;

namespace {

struct ErrorStatus {
  int status;
  const char* kind;
};

ErrorStatus classify(const std::exception& e) {
  if (dynamic_cast<const NotFoundError*>(&e)) return {404, "not_found"};
  if (dynamic_cast<const ConflictError*>(&e)) return {409, "conflict"};
  if (dynamic_cast<const PreconditionError*>(&e)) return {422, "precondition"};
  if (dynamic_cast<const DomainError*>(&e)) return {400, "domain"};
  if (dynamic_cast<const UsageError*>(&e)) return {400, "usage"};
  if (dynamic_cast<const ShapeError*>(&e)) return {400, "shape"};
  if (dynamic_cast<const DataError*>(&e)) return {400, "data"};
  if (dynamic_cast<const PersistenceError*>(&e)) return {500, "persistence"};
  return {500, "internal"};
}

void reply(httplib::Response& res, const json& body, int status = 200) {
  json out = body;
  out["version"] = kApiVersion;
  res.status = status;
  res.set_content(out.dump(), "application/json");
}

std::int64_t int_param(const httplib::Request& req, const char* name, std::int64_t fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string v = req.get_param_value(name);
  std::int64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size()) {
    throw UsageError(std::string("query parameter ") + name + " must be an integer");
  }
  return out;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const std::exception& e) {
      const auto st = classify(e);
      reply(res, {{"error", st.kind}, {"message", e.what()}}, st.status);
    }
  };
}

}  // namespace

json to_json(const DisplacementView& v) {
  json points = json::array();
  for (const auto& p : v.points) points.push_back({p.t, p.d_mm});
  return {{"points", std::move(points)},
          {"max_displacement_mm", v.max_displacement_mm},
          {"max_time_s", v.max_time_s},
          {"severity", std::string(to_string(v.severity))},
          {"as_of_seq", v.as_of_seq},
          {"restarted", v.restarted}};
}

DisplacementView view_from_json(const json& j) {
  DisplacementView v;
  for (const auto& p : j.at("points")) v.points.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  v.max_displacement_mm = j.at("max_displacement_mm").get<double>();
  v.max_time_s = j.at("max_time_s").get<double>();
  const auto sev = j.at("severity").get<std::string>();
  v.severity = sev == "red" ? Severity::red : sev == "orange" ? Severity::orange : Severity::green;
  v.as_of_seq = j.at("as_of_seq").get<std::int64_t>();
  v.restarted = j.at("restarted").get<bool>();
  return v;
}

json to_json(const AcquisitionState& s) {
  return {{"status", std::string(to_string(s.status))},
          {"source", s.source},
          {"started_at", s.started_at_ms ? format_iso8601_ms(s.started_at_ms) : std::string()},
          {"records_ingested", s.records_ingested},
          {"frames_received", s.frames_received},
          {"frames_rejected", s.frames_rejected},
          {"source_exhausted", s.source_exhausted}};
}

json to_json(const SensorRecord& r) {
  return {{"id", r.seq_id}, {"time", r.t},   {"ax", r.ax}, {"ay", r.ay},
          {"az", r.az},     {"gx", r.gx},    {"gy", r.gy}, {"gz", r.gz},
          {"sensor_id", r.sensor_id}, {"reg_time", format_iso8601_ms(r.reg_time_ms)}};
}

HttpApi::HttpApi(MonitorService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpApi::~HttpApi() { stop(); }

int HttpApi::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  if (!server_->bind_to_port(host, port)) throw UsageError("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpApi::serve() { server_->listen_after_bind(); }

void HttpApi::stop() {
  if (server_) server_->stop();
}

void HttpApi::install_routes() {
  auto& s = *server_;
  auto& svc = service_;

  s.Post("/acquisition/display", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> source;
    if (req.has_param("source")) source = req.get_param_value("source");
    reply(res, {{"acquisition", to_json(svc.control(ControlAction::display, source).state)}});
  }));
  s.Post("/acquisition/stop", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"acquisition", to_json(svc.control(ControlAction::stop).state)}});
  }));
  s.Get("/acquisition", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"acquisition", to_json(svc.acquisition_state())}});
  }));
  s.Delete("/live", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    const auto r = svc.control(ControlAction::del);
    reply(res, {{"removed", r.removed.value_or(0)}, {"acquisition", to_json(r.state)}});
  }));
  s.Get("/live/accelerations", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    json records = json::array();
    for (const auto& r : svc.live_accelerations(int_param(req, "since", 0))) records.push_back(to_json(r));
    reply(res, {{"records", std::move(records)}});
  }));
  s.Get("/view/live", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string session = req.has_param("session") ? req.get_param_value("session") : "default";
    reply(res, to_json(svc.live_view(int_param(req, "as_of_seq", 0), session)));
  }));
  s.Post("/experiments", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    const auto id = svc.save_experiment();
    reply(res, {{"id", id.str()}, {"exp_time", id.exp_time_iso8601()}}, 201);
  }));
  s.Get("/experiments", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& info : svc.list_experiments()) {
      list.push_back({{"id", info.id.str()}, {"exp_time", info.id.exp_time_iso8601()}, {"records", info.record_count}});
    }
    reply(res, {{"experiments", std::move(list)}});
  }));
  s.Get(R"(/experiments/([^/]+)/view)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, to_json(svc.experiment_view(ExperimentId::parse(req.matches[1].str()))));
  }));
  s.Delete("/experiments", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    reply(res, {{"removed", svc.clear_experiments()}});
  }));
  s.Get("/config", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    const auto& c = svc.config();
    reply(res, {{"poll_interval_s", c.poll_interval_s},
                {"display_rate_hz", c.display_rate_hz},
                {"max_points", c.max_points},
                {"sample_rate_hz", c.reconstruction.sample_rate_hz},
                {"window_len", c.reconstruction.window_len},
                {"weighting", std::string(to_string(c.reconstruction.weighting))},
                {"lambda", c.reconstruction.lambda()}});
  }));
}

}  // namespace dispmon
