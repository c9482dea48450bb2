#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "nnm/backend.hpp"

namespace nnm {

using Embedding = std::vector<double>;

/// Maps text to a fixed-length vector. Implementations are shareable across
/// threads; the same text always yields the same vector.
class Embedder {
public:
    virtual ~Embedder() = default;

    /// Throws BackendError if the embedding cannot be produced.
    virtual Embedding embed(std::string_view text) const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Lowercased word tokens: split on Unicode whitespace, punctuation stripped
/// from both ends of each token, ASCII case folding, no stemming.
std::vector<std::string> tokenize(std::string_view text);

/// Term-frequency bag of tokens hashed (FNV-1a 64) into `dims` buckets.
class HashedBagEmbedder : public Embedder {
public:
    static constexpr std::size_t kDefaultDimension = 512;

    explicit HashedBagEmbedder(std::size_t dims = kDefaultDimension);

    Embedding embed(std::string_view text) const override;
    std::size_t dimension() const override { return dims_; }

    std::size_t bucket(std::string_view token) const;
    static std::uint64_t token_hash(std::string_view token);

private:
    std::size_t dims_;
};

/// Memoizes another embedder by exact text.
class CachedEmbedder : public Embedder {
public:
    explicit CachedEmbedder(std::shared_ptr<const Embedder> inner);

    Embedding embed(std::string_view text) const override;
    std::size_t dimension() const override { return inner_->dimension(); }

    std::size_t cache_size() const;

private:
    std::shared_ptr<const Embedder> inner_;
    mutable std::shared_mutex mu_;
    mutable std::unordered_map<std::string, Embedding> cache_;
};

/// OpenAI-compatible `POST {api_base}/embeddings` client. The dimension is
/// learned from the first response (0 before that).
class RemoteEmbedder : public Embedder {
public:
    explicit RemoteEmbedder(RemoteConfig config);

    Embedding embed(std::string_view text) const override;
    std::size_t dimension() const override { return dims_.load(); }

private:
    RemoteConfig config_;
    mutable std::atomic<std::size_t> dims_{0};
};

/// RemoteEmbedder wrapped in a CachedEmbedder.
std::shared_ptr<const Embedder> make_remote_embedder(RemoteConfig config);

/// A similarity in [0, 1].
class SimilarityScore {
public:
    constexpr SimilarityScore() = default;
    /// Clamps into [0, 1]; NaN becomes 0.
    explicit SimilarityScore(double raw);

    constexpr double value() const { return value_; }
    constexpr auto operator<=>(const SimilarityScore&) const = default;

private:
    double value_ = 0.0;
};

/// Cosine of two embeddings clamped at 0. Zero vectors score 0.
SimilarityScore cosine_score(std::span<const double> a, std::span<const double> b);

/// Cosine similarity of the two texts' embeddings, clamped to [0, 1].
/// Byte-identical texts score exactly 1. Throws InvalidArgument on empty text.
SimilarityScore similarity(std::string_view a, std::string_view b, const Embedder& embedder);

struct Candidate {
    std::int64_t id = 0;
    std::string text;
};

struct Ranked {
    std::int64_t id = 0;
    SimilarityScore score;

    bool operator==(const Ranked&) const = default;
};

/// Top-k candidates by descending similarity to `query`, ties broken by
/// ascending id. Scores equal what similarity() returns for each pair.
/// Throws InvalidArgument for k < 1, empty query or no candidates.
std::vector<Ranked> find_closest(std::string_view query, std::span<const Candidate> candidates,
                                 const Embedder& embedder, std::size_t k);

} // namespace nnm
