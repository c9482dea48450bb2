#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace nnm {

/// Decides whether a parsed response item may become a node.
class ResponseValidator {
public:
    virtual ~ResponseValidator() = default;

    /// Throws ValidatorError when no verdict can be reached.
    virtual bool is_valid(const std::string& item) = 0;
};

class AcceptAllValidator : public ResponseValidator {
public:
    bool is_valid(const std::string&) override { return true; }
};

/// Accepts items whose node-name key is in the list.
class AllowlistValidator : public ResponseValidator {
public:
    explicit AllowlistValidator(const std::vector<std::string>& names);
    /// One name per line; blank lines and `#` comments skipped.
    static AllowlistValidator from_file(const std::filesystem::path& path);

    bool is_valid(const std::string& item) override;

private:
    std::unordered_set<std::string> keys_;
};

/// Checks that an encyclopedia page exists for the item.
///
/// Issues `GET` on `url_pattern` with `{}` replaced by the percent-encoded
/// title: 2xx means the page exists, 404 means it does not, anything else (or
/// a transport failure) is a ValidatorError. Verdicts are cached by title and
/// the cache is consulted before the network.
class PageExistenceValidator : public ResponseValidator {
public:
    /// Returns the HTTP status for a URL; throws ValidatorError on transport failure.
    using Fetcher = std::function<int(const std::string& url)>;

    struct Options {
        std::string url_pattern = "https://en.wikipedia.org/api/rest_v1/page/summary/{}";
        std::chrono::milliseconds timeout{10000};
        std::string user_agent = "nnm/0.1 (narrative map builder)";
    };

    explicit PageExistenceValidator(Options options, Fetcher fetcher = {});
    PageExistenceValidator() : PageExistenceValidator(Options{}) {}

    bool is_valid(const std::string& item) override;

    /// Seeds the cache (e.g. from an earlier run).
    void prime(const std::string& title, bool exists);
    std::optional<bool> cached(const std::string& title) const;
    std::size_t cache_size() const;
    std::string url_for(const std::string& title) const;

private:
    Options options_;
    Fetcher fetcher_;
    mutable std::shared_mutex mu_;
    std::unordered_map<std::string, bool> cache_;
};

} // namespace nnm
