#pragma once

#include <string>

#include "diglab/session.hpp"
#include "json_io.hpp"

namespace diglab::json_io {

Json report(const SessionReport& r);
SessionReport report(const Json& j, const std::string& path);

Json event(const Event& e);
Event event(const Json& j, const std::string& path);

SessionStatus status(const std::string& text, const std::string& path);

}  // namespace diglab::json_io
