#pragma once

// Thin blocking HTTP helpers over cpp-httplib. Not part of the installed API.

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace nnm::detail {

struct HttpResult {
    bool transport_ok = false;
    int status = 0;
    std::string body;
    std::string error; ///< transport failure description when !transport_ok
};

using Headers = std::vector<std::pair<std::string, std::string>>;

/// Splits "https://host:port/base/path" into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url);

HttpResult http_get(const std::string& url, const Headers& headers, std::chrono::milliseconds timeout);

HttpResult http_post_json(const std::string& url, const std::string& body, const Headers& headers,
                          std::chrono::milliseconds timeout);

std::string percent_encode(const std::string& text);

std::string env_or(const char* name, const std::string& fallback);

} // namespace nnm::detail
