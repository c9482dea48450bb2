#include "http_client.hpp"

#include <cstdlib>

#include <httplib.h>

#include "nnm/errors.hpp"

namespace nnm::detail {

namespace {

httplib::Headers to_httplib(const Headers& headers) {
    httplib::Headers out;
    for (const auto& [k, v] : headers) out.emplace(k, v);
    return out;
}

HttpResult convert(const httplib::Result& res) {
    HttpResult out;
    if (!res) {
        out.error = httplib::to_string(res.error());
        return out;
    }
    out.transport_ok = true;
    out.status = res->status;
    out.body = res->body;
    return out;
}

void configure(httplib::Client& client, std::chrono::milliseconds timeout) {
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_follow_location(true);
}

} // namespace

std::pair<std::string, std::string> split_url(const std::string& url) {
    std::size_t scheme = url.find("://");
    if (scheme == std::string::npos) throw ConfigError("URL without scheme: " + url);
    std::size_t path = url.find('/', scheme + 3);
    if (path == std::string::npos) return {url, "/"};
    return {url.substr(0, path), url.substr(path)};
}

HttpResult http_get(const std::string& url, const Headers& headers, std::chrono::milliseconds timeout) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    configure(client, timeout);
    return convert(client.Get(path, to_httplib(headers)));
}

HttpResult http_post_json(const std::string& url, const std::string& body, const Headers& headers,
                          std::chrono::milliseconds timeout) {
    auto [origin, path] = split_url(url);
    httplib::Client client(origin);
    configure(client, timeout);
    return convert(client.Post(path, to_httplib(headers), body, "application/json"));
}

std::string percent_encode(const std::string& text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        bool unreserved = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                          c == '-' || c == '.' || c == '_' || c == '~';
        if (unreserved) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return (v && *v) ? std::string(v) : fallback;
}

} // namespace nnm::detail
