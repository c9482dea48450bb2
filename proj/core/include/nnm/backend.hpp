#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nnm/prompt.hpp"

namespace nnm {

/// Text generation service: prompt in, completion out.
/// Implementations must be callable from several threads at once.
class GenerationBackend {
public:
    virtual ~GenerationBackend() = default;

    /// Throws BackendError when no completion could be obtained.
    virtual std::string generate(const std::string& prompt) = 0;
};

/// Canned completions keyed by seed.
///
/// With a template, the seed is cut out of the prompt between the template's
/// prefix and suffix and looked up by node-name key. Without one, the whole
/// prompt is the key. Prompts without an entry yield an empty completion.
class FixtureBackend : public GenerationBackend {
public:
    FixtureBackend(std::vector<std::pair<std::string, std::string>> table,
                   std::optional<PromptTemplate> tmpl = std::nullopt);

    /// Reads `seed<TAB>response` lines (UTF-8). In the response field `\n`,
    /// `\t` and `\\` are unescaped. Blank lines and lines starting with `#`
    /// are skipped. Throws NotFound for an unreadable file and FormatError for
    /// a line without a tab.
    static FixtureBackend from_file(const std::filesystem::path& path,
                                    std::optional<PromptTemplate> tmpl = std::nullopt);

    std::string generate(const std::string& prompt) override;

    std::size_t size() const { return by_key_.size(); }

private:
    std::unordered_map<std::string, std::string> by_key_;
    bool keyed_by_seed_ = false;
    std::string prefix_;
    std::string suffix_;
};

/// Forwards to another backend and keeps every (prompt, completion) pair.
class RecordingBackend : public GenerationBackend {
public:
    explicit RecordingBackend(std::shared_ptr<GenerationBackend> inner);

    std::string generate(const std::string& prompt) override;

    std::vector<std::pair<std::string, std::string>> recorded() const;
    /// Writes `prompt<TAB>response` lines readable by ReplayBackend.
    void save(const std::filesystem::path& path) const;

private:
    std::shared_ptr<GenerationBackend> inner_;
    mutable std::mutex mu_;
    std::vector<std::pair<std::string, std::string>> log_;
};

/// Serves completions captured by RecordingBackend. Unknown prompts are a
/// BackendError.
class ReplayBackend : public GenerationBackend {
public:
    explicit ReplayBackend(std::vector<std::pair<std::string, std::string>> log);
    static ReplayBackend from_file(const std::filesystem::path& path);

    std::string generate(const std::string& prompt) override;

private:
    std::unordered_map<std::string, std::string> by_prompt_;
};

struct RemoteConfig {
    std::string api_base = "https://api.openai.com/v1";
    std::string model = "gpt-3.5-turbo-instruct";
    std::string embedding_model = "text-embedding-3-small";
    std::string api_key;
    std::chrono::milliseconds timeout{30000};

    /// NNM_API_BASE, NNM_MODEL, NNM_API_KEY; NNM_EMBED_MODEL for embeddings.
    static RemoteConfig from_env();
};

/// OpenAI-compatible `POST {api_base}/completions` client.
class CompletionClient : public GenerationBackend {
public:
    explicit CompletionClient(RemoteConfig config, int max_tokens = 256, double temperature = 0.7);

    std::string generate(const std::string& prompt) override;

private:
    RemoteConfig config_;
    int max_tokens_;
    double temperature_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double multiplier = 2.0;
    /// Replaceable for tests; defaults to std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleep;
};

struct GenerationOutcome {
    std::string text;
    int attempts = 0;
};

/// Calls the backend until it succeeds or the policy is exhausted, sleeping
/// initial_backoff * multiplier^k between attempts. The final BackendError
/// names the attempt count and the last failure.
GenerationOutcome generate_with_retry(GenerationBackend& backend, const std::string& prompt,
                                      const RetryPolicy& policy);

std::vector<std::pair<std::string, std::string>> read_tab_file(const std::filesystem::path& path);
void write_tab_file(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& rows);

} // namespace nnm
