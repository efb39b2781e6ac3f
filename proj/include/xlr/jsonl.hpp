#pragma once

#include <string>

#include <json.hpp>

namespace xlr {

/// Single-line JSON; invalid UTF-8 is replaced rather than thrown on.
inline std::string dump_line(const nlohmann::ordered_json& j) {
    return j.dump(-1, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
}

} // namespace xlr
