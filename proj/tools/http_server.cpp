#include "http_server.hpp"

#include "httplib.h"

namespace mathkg {

std::unique_ptr<httplib::Server> make_http_server(AppState& state) {
  auto server = std::make_unique<httplib::Server>();
  auto route = [&state](const httplib::Request& req, httplib::Response& res) {
    const auto r = handle_request(state, req.method, req.path, req.params, req.body);
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  server->Get(R"(/api/.*)", route);
  server->Post(R"(/api/.*)", route);
  // the console is served from another origin during development
  server->set_default_headers({{"Access-Control-Allow-Origin", "*"}});
  server->Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
  return server;
}

}  // namespace mathkg
