#pragma once

// HTTP binding of MonitorService. Bodies are JSON objects carrying
// "version": 1.
//
//   POST   /acquisition/display[?source=<descriptor>]
//   POST   /acquisition/stop
//   GET    /acquisition
//   DELETE /live
//   GET    /live/accelerations?since=<seq>
//   GET    /view/live?as_of_seq=<seq>[&session=<key>]
//   POST   /experiments
//   GET    /experiments
//   GET    /experiments/<id>/view
//   DELETE /experiments
//   GET    /config
//
// Errors come back as {"version":1,"error":"<kind>","message":"..."} with
// 400 (domain/usage), 404 (not found), 409 (conflict), 422 (precondition)
// or 500.

#include "dispmon/monitor.hpp"

#include <json.hpp>

#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace dispmon {

inline constexpr int kApiVersion = 1;

nlohmann::json to_json(const DisplacementView& v);
DisplacementView view_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AcquisitionState& s);
nlohmann::json to_json(const SensorRecord& r);

class HttpApi {
public:
  explicit HttpApi(MonitorService& service);
  ~HttpApi();
  HttpApi(const HttpApi&) = delete;
  HttpApi& operator=(const HttpApi&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void serve();
  void stop();

private:
  void install_routes();

  MonitorService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace dispmon
