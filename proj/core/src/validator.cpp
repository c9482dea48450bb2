#include "nnm/validator.hpp"

#include <fstream>
#include <mutex>

#include "http_client.hpp"
#include "nnm/errors.hpp"
#include "nnm/graph.hpp"

namespace nnm {

AllowlistValidator::AllowlistValidator(const std::vector<std::string>& names) {
    for (const std::string& n : names) {
        std::string key = name_key(n);
        if (!key.empty()) keys_.insert(std::move(key));
    }
}

AllowlistValidator AllowlistValidator::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw NotFound("cannot read " + path.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        std::string shown = display_name(line);
        if (shown.empty() || shown.front() == '#') continue;
        names.push_back(std::move(shown));
    }
    return AllowlistValidator(names);
}

bool AllowlistValidator::is_valid(const std::string& item) {
    return keys_.contains(name_key(item));
}

PageExistenceValidator::PageExistenceValidator(Options options, Fetcher fetcher)
    : options_(std::move(options)), fetcher_(std::move(fetcher)) {
    if (options_.url_pattern.find("{}") == std::string::npos)
        throw ConfigError("page URL pattern has no {} placeholder");
    if (!fetcher_) {
        fetcher_ = [timeout = options_.timeout, agent = options_.user_agent](const std::string& url) {
            auto res = detail::http_get(url, {{"User-Agent", agent}, {"Accept", "application/json"}}, timeout);
            if (!res.transport_ok) throw ValidatorError("page lookup failed for " + url + ": " + res.error);
            return res.status;
        };
    }
}

std::string PageExistenceValidator::url_for(const std::string& title) const {
    std::string url = options_.url_pattern;
    url.replace(url.find("{}"), 2, detail::percent_encode(title));
    return url;
}

bool PageExistenceValidator::is_valid(const std::string& item) {
    std::string title = display_name(item);
    if (title.empty()) throw InvalidArgument("page title is empty");
    if (auto hit = cached(title)) return *hit;

    int status = fetcher_(url_for(title));
    bool exists;
    if (status >= 200 && status < 300) exists = true;
    else if (status == 404) exists = false;
    else throw ValidatorError("page lookup for '" + title + "' returned HTTP " + std::to_string(status));
    prime(title, exists);
    return exists;
}

void PageExistenceValidator::prime(const std::string& title, bool exists) {
    std::unique_lock lock(mu_);
    cache_[display_name(title)] = exists;
}

std::optional<bool> PageExistenceValidator::cached(const std::string& title) const {
    std::shared_lock lock(mu_);
    auto it = cache_.find(display_name(title));
    if (it == cache_.end()) return std::nullopt;
    return it->second;
}

std::size_t PageExistenceValidator::cache_size() const {
    std::shared_lock lock(mu_);
    return cache_.size();
}

} // namespace nnm
