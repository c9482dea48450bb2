#include "nnm/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>

#include <json.hpp>

#include "http_client.hpp"
#include "nnm/errors.hpp"

namespace nnm {

namespace {

struct CodePoint {
    char32_t value;
    std::size_t length; // bytes
};

// Lenient UTF-8 decoding: malformed bytes decode as themselves.
CodePoint decode(std::string_view s, std::size_t pos) {
    auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    unsigned char lead = byte(pos);
    std::size_t len = lead < 0x80 ? 1 : (lead >> 5) == 0x6 ? 2 : (lead >> 4) == 0xE ? 3 : (lead >> 3) == 0x1E ? 4 : 0;
    if (len == 0 || pos + len > s.size()) return {lead, 1};
    char32_t cp = len == 1 ? lead : len == 2 ? (lead & 0x1F) : len == 3 ? (lead & 0x0F) : (lead & 0x07);
    for (std::size_t i = 1; i < len; ++i) {
        unsigned char c = byte(pos + i);
        if ((c >> 6) != 0x2) return {lead, 1};
        cp = (cp << 6) | (c & 0x3F);
    }
    return {cp, len};
}

bool is_unicode_space(char32_t c) {
    return c == ' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
           (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

bool is_punctuation(char32_t c) {
    if (c < 0x80) {
        return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
               (c >= 0x7B && c <= 0x7E);
    }
    return c == 0xA1 || c == 0xA7 || c == 0xAB || c == 0xB6 || c == 0xB7 || c == 0xBB || c == 0xBF ||
           (c >= 0x2010 && c <= 0x2027) || (c >= 0x2030 && c <= 0x205E) || (c >= 0x3001 && c <= 0x3003) ||
           (c >= 0x3008 && c <= 0x3011);
}

std::string fold_token(std::string_view word) {
    std::size_t begin = 0;
    std::size_t end = word.size();
    while (begin < end) {
        CodePoint cp = decode(word, begin);
        if (!is_punctuation(cp.value)) break;
        begin += cp.length;
    }
    // Walk forward to find the last non-punctuation code point.
    std::size_t last_keep = begin;
    for (std::size_t pos = begin; pos < end;) {
        CodePoint cp = decode(word, pos);
        pos += cp.length;
        if (!is_punctuation(cp.value)) last_keep = pos;
    }
    std::string out(word.substr(begin, last_keep - begin));
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

// Shared by similarity() and find_closest() so both agree bit-for-bit.
SimilarityScore score_pair(std::string_view a_text, const Embedding& a, std::string_view b_text,
                           const Embedding& b) {
    if (a_text == b_text) return SimilarityScore(1.0);
    return cosine_score(a, b);
}

void require_text(std::string_view text, const char* what) {
    if (text.empty()) throw InvalidArgument(std::string(what) + " text is empty");
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t pos = 0;
    std::size_t word_start = 0;
    bool in_word = false;
    auto flush = [&](std::size_t end) {
        if (!in_word) return;
        std::string token = fold_token(text.substr(word_start, end - word_start));
        if (!token.empty()) tokens.push_back(std::move(token));
        in_word = false;
    };
    while (pos < text.size()) {
        CodePoint cp = decode(text, pos);
        if (is_unicode_space(cp.value)) {
            flush(pos);
        } else if (!in_word) {
            in_word = true;
            word_start = pos;
        }
        pos += cp.length;
    }
    flush(text.size());
    return tokens;
}

// ---------------------------------------------------------------- hashed bag

HashedBagEmbedder::HashedBagEmbedder(std::size_t dims) : dims_(dims) {
    if (dims_ == 0) throw InvalidArgument("embedding dimension must be positive");
}

std::uint64_t HashedBagEmbedder::token_hash(std::string_view token) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : token) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::size_t HashedBagEmbedder::bucket(std::string_view token) const {
    return static_cast<std::size_t>(token_hash(token) % dims_);
}

Embedding HashedBagEmbedder::embed(std::string_view text) const {
    Embedding v(dims_, 0.0);
    for (const std::string& t : tokenize(text)) v[bucket(t)] += 1.0;
    return v;
}

// ---------------------------------------------------------------- cache

CachedEmbedder::CachedEmbedder(std::shared_ptr<const Embedder> inner) : inner_(std::move(inner)) {
    if (!inner_) throw InvalidArgument("cached embedder needs an inner embedder");
}

Embedding CachedEmbedder::embed(std::string_view text) const {
    {
        std::shared_lock lock(mu_);
        if (auto it = cache_.find(std::string(text)); it != cache_.end()) return it->second;
    }
    Embedding v = inner_->embed(text);
    std::unique_lock lock(mu_);
    // A concurrent caller may have filled the slot; keep the first value.
    auto [it, inserted] = cache_.try_emplace(std::string(text), std::move(v));
    return it->second;
}

std::size_t CachedEmbedder::cache_size() const {
    std::shared_lock lock(mu_);
    return cache_.size();
}

// ---------------------------------------------------------------- remote

RemoteEmbedder::RemoteEmbedder(RemoteConfig config) : config_(std::move(config)) {}

Embedding RemoteEmbedder::embed(std::string_view text) const {
    nlohmann::json body = {{"model", config_.embedding_model}, {"input", std::string(text)}};
    detail::Headers headers;
    if (!config_.api_key.empty()) headers.emplace_back("Authorization", "Bearer " + config_.api_key);
    auto res = detail::http_post_json(config_.api_base + "/embeddings", body.dump(), headers, config_.timeout);
    if (!res.transport_ok) throw BackendError("embedding request failed: " + res.error);
    if (res.status < 200 || res.status >= 300)
        throw BackendError("embedding request returned HTTP " + std::to_string(res.status));
    Embedding v;
    try {
        auto j = nlohmann::json::parse(res.body);
        v = j.at("data").at(0).at("embedding").get<Embedding>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("malformed embedding payload: ") + e.what());
    }
    if (v.empty()) throw BackendError("empty embedding");
    std::size_t expected = 0;
    if (!dims_.compare_exchange_strong(expected, v.size()) && expected != v.size())
        throw BackendError("embedding dimension changed from " + std::to_string(expected) + " to " +
                           std::to_string(v.size()));
    return v;
}

std::shared_ptr<const Embedder> make_remote_embedder(RemoteConfig config) {
    return std::make_shared<CachedEmbedder>(std::make_shared<RemoteEmbedder>(std::move(config)));
}

// ---------------------------------------------------------------- scoring

SimilarityScore::SimilarityScore(double raw) : value_(std::isnan(raw) ? 0.0 : std::clamp(raw, 0.0, 1.0)) {}

SimilarityScore cosine_score(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InvalidArgument("embedding dimensions differ");
    double na = std::sqrt(dot(a, a));
    double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return SimilarityScore(0.0);
    return SimilarityScore(dot(a, b) / (na * nb));
}

SimilarityScore similarity(std::string_view a, std::string_view b, const Embedder& embedder) {
    require_text(a, "first");
    require_text(b, "second");
    return score_pair(a, embedder.embed(a), b, embedder.embed(b));
}

std::vector<Ranked> find_closest(std::string_view query, std::span<const Candidate> candidates,
                                 const Embedder& embedder, std::size_t k) {
    if (k < 1) throw InvalidArgument("k must be at least 1");
    if (candidates.empty()) throw InvalidArgument("no candidates to rank");
    require_text(query, "query");
    Embedding q = embedder.embed(query);
    std::vector<Ranked> ranked;
    ranked.reserve(candidates.size());
    for (const Candidate& c : candidates) {
        require_text(c.text, "candidate");
        ranked.push_back({c.id, score_pair(query, q, c.text, embedder.embed(c.text))});
    }
    auto order = [](const Ranked& x, const Ranked& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.id < y.id;
    };
    std::size_t keep = std::min(k, ranked.size());
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(), order);
    ranked.resize(keep);
    return ranked;
}

} // namespace nnm
