#pragma once
// HTTP binding for Service using cpp-httplib.

#include <cstdlib>
#include <filesystem>
#include <string>

#include "httplib.h"

#include "srta/service.hpp"

namespace srta {

inline void bind_routes(httplib::Server& server, Service& service) {
    auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
        ApiRequest api{req.method, req.path, req.body, req.get_header_value("Authorization")};
        const ApiResponse out = service.handle(api);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(R"(/v1/.*)", forward);
    server.Post(R"(/v1/.*)", forward);
}

// Serves static assets (the web client build) from dir when it exists.
inline void mount_static(httplib::Server& server, const std::filesystem::path& dir) {
    if (!dir.empty() && std::filesystem::is_directory(dir)) server.set_mount_point("/", dir.string());
}

struct ListenAddress {
    std::string host = "127.0.0.1";
    int port = 8080;
};

// "host:port" or ":port" or "port".
inline ListenAddress parse_listen_address(const std::string& addr) {
    ListenAddress out;
    const auto colon = addr.rfind(':');
    const std::string port = colon == std::string::npos ? addr : addr.substr(colon + 1);
    if (colon != std::string::npos && colon > 0) out.host = addr.substr(0, colon);
    try {
        out.port = std::stoi(port);
    } catch (const std::logic_error&) {
        fail(ErrorCode::Validation, "bad listen address '" + addr + "'");
    }
    if (out.port < 0 || out.port > 65535) fail(ErrorCode::Validation, "port out of range in '" + addr + "'");
    return out;
}

inline std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : std::move(fallback);
}

}  // namespace srta
