#include "nnm/backend.hpp"

#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "http_client.hpp"
#include "nnm/errors.hpp"
#include "nnm/graph.hpp"

namespace nnm {

namespace {

std::string unescape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out.push_back(s[i]);
            continue;
        }
        char c = s[++i];
        switch (c) {
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        default:
            out.push_back('\\');
            out.push_back(c);
        }
    }
    return out;
}

std::string escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        case '\\': out += "\\\\"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

} // namespace

std::vector<std::pair<std::string, std::string>> read_tab_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFound("cannot read " + path.string());
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": missing tab separator");
        rows.emplace_back(unescape(std::string_view(line).substr(0, tab)),
                          unescape(std::string_view(line).substr(tab + 1)));
    }
    return rows;
}

void write_tab_file(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw NotFound("cannot write " + path.string());
    for (const auto& [key, value] : rows) out << escape(key) << '\t' << escape(value) << '\n';
}

// ---------------------------------------------------------------- fixture

FixtureBackend::FixtureBackend(std::vector<std::pair<std::string, std::string>> table,
                               std::optional<PromptTemplate> tmpl) {
    if (tmpl) {
        std::size_t slot = tmpl->text().find("{}");
        prefix_ = tmpl->text().substr(0, slot);
        suffix_ = tmpl->text().substr(slot + 2);
        keyed_by_seed_ = true;
    }
    for (auto& [key, response] : table) by_key_.try_emplace(name_key(key), std::move(response));
}

FixtureBackend FixtureBackend::from_file(const std::filesystem::path& path,
                                         std::optional<PromptTemplate> tmpl) {
    return FixtureBackend(read_tab_file(path), std::move(tmpl));
}

std::string FixtureBackend::generate(const std::string& prompt) {
    std::string_view key = prompt;
    if (keyed_by_seed_) {
        if (key.size() < prefix_.size() + suffix_.size() || !key.starts_with(prefix_) || !key.ends_with(suffix_))
            return {};
        key = key.substr(prefix_.size(), key.size() - prefix_.size() - suffix_.size());
    }
    auto it = by_key_.find(name_key(key));
    return it == by_key_.end() ? std::string() : it->second;
}

// ---------------------------------------------------------------- record / replay

RecordingBackend::RecordingBackend(std::shared_ptr<GenerationBackend> inner) : inner_(std::move(inner)) {
    if (!inner_) throw InvalidArgument("recording backend needs an inner backend");
}

std::string RecordingBackend::generate(const std::string& prompt) {
    std::string text = inner_->generate(prompt);
    std::lock_guard lock(mu_);
    log_.emplace_back(prompt, text);
    return text;
}

std::vector<std::pair<std::string, std::string>> RecordingBackend::recorded() const {
    std::lock_guard lock(mu_);
    return log_;
}

void RecordingBackend::save(const std::filesystem::path& path) const {
    write_tab_file(path, recorded());
}

ReplayBackend::ReplayBackend(std::vector<std::pair<std::string, std::string>> log) {
    for (auto& [prompt, text] : log) by_prompt_.try_emplace(std::move(prompt), std::move(text));
}

ReplayBackend ReplayBackend::from_file(const std::filesystem::path& path) {
    return ReplayBackend(read_tab_file(path));
}

std::string ReplayBackend::generate(const std::string& prompt) {
    auto it = by_prompt_.find(prompt);
    if (it == by_prompt_.end()) throw BackendError("no recorded completion for prompt: " + prompt);
    return it->second;
}

// ---------------------------------------------------------------- remote

RemoteConfig RemoteConfig::from_env() {
    RemoteConfig c;
    c.api_base = detail::env_or("NNM_API_BASE", c.api_base);
    c.model = detail::env_or("NNM_MODEL", c.model);
    c.embedding_model = detail::env_or("NNM_EMBED_MODEL", c.embedding_model);
    c.api_key = detail::env_or("NNM_API_KEY", "");
    while (!c.api_base.empty() && c.api_base.back() == '/') c.api_base.pop_back();
    return c;
}

CompletionClient::CompletionClient(RemoteConfig config, int max_tokens, double temperature)
    : config_(std::move(config)), max_tokens_(max_tokens), temperature_(temperature) {}

std::string CompletionClient::generate(const std::string& prompt) {
    nlohmann::json body = {
        {"model", config_.model},
        {"prompt", prompt},
        {"max_tokens", max_tokens_},
        {"temperature", temperature_},
    };
    detail::Headers headers;
    if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);

    auto res = detail::http_post_json(config_.api_base + "/completions", body.dump(), headers, config_.timeout);
    if (!res.transport_ok) throw BackendError("completion request failed: " + res.error);
    if (res.status < 200 || res.status >= 300)
        throw BackendError("completion request returned HTTP " + std::to_string(res.status));
    try {
        auto j = nlohmann::json::parse(res.body);
        return j.at("choices").at(0).at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed completion payload: ") + e.what());
    }
}

// ---------------------------------------------------------------- retry

GenerationOutcome generate_with_retry(GenerationBackend& backend, const std::string& prompt,
                                      const RetryPolicy& policy) {
    int attempts = std::max(policy.attempts, 1);
    auto backoff = policy.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
            return {backend.generate(prompt), attempt};
        } catch (const BackendError& e) {
            last_error = e.what();
        }
        if (attempt == attempts) break;
        if (policy.sleep) policy.sleep(backoff);
        else std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<std::int64_t>(std::llround(static_cast<double>(backoff.count()) * policy.multiplier)));
    }
    throw BackendError("generation failed after " + std::to_string(attempts) + " attempts: " + last_error);
}

} // namespace nnm
