#pragma once

#include "reeb/models.hpp"

#include <string>
#include <vector>

namespace reeb {

/// Result of one command. `code` is 0 on success; the pipeline may return
/// a body together with the exit code of its first failed stage.
struct ServiceReply {
  Json body;
  int code = 0;
};

/// Names accepted by dispatch, e.g. "orbits.lyapunov" or "horseshoe.words".
const std::vector<std::string>& service_commands();

/// Runs one command on a JSON request. Failures raise reeb::Error.
ServiceReply dispatch(const std::string& command, const Json& request, int workers = 1);

}  // namespace reeb
