#pragma once

#include <memory>
#include <string>

#include "mathkg/service.hpp"

namespace httplib {
class Server;
}

namespace mathkg {

/// An httplib server routing /api/* through handle_request. The state must
/// outlive the server.
std::unique_ptr<httplib::Server> make_http_server(AppState& state);

}  // namespace mathkg
