#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "nnm/errors.hpp"
#include "nnm/similarity.hpp"

using namespace nnm;
using Tokens = std::vector<std::string>;

namespace {

const std::vector<std::string> kVocab = {"enemy", "fire", "hold", "duty", "orders", "careful", "target", "verify",
                                         "patrol", "base", "weapons", "free", "engage", "survivors", "lawful",
                                         "commander", "the", "a", "of", "to"};

std::string random_sentence(std::mt19937_64& rng, int min_words = 1) {
    std::uniform_int_distribution<std::size_t> pick(0, kVocab.size() - 1);
    std::uniform_int_distribution<int> len(min_words, 9);
    std::bernoulli_distribution upper(0.2), punct(0.2);
    std::string out;
    for (int i = len(rng); i > 0; --i) {
        std::string w = kVocab[pick(rng)];
        if (upper(rng)) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        if (punct(rng)) w += (i % 2 ? "," : ".");
        out += (out.empty() ? "" : " ") + w;
    }
    return out;
}

/// Term-frequency cosine over exact tokens; lowercase ASCII words only.
double tf_cosine(const std::string& a, const std::string& b) {
    auto counts = [](const std::string& s) {
        std::map<std::string, double> m;
        std::string word;
        auto flush = [&] {
            while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.pop_back();
            std::size_t start = 0;
            while (start < word.size() && std::ispunct(static_cast<unsigned char>(word[start]))) ++start;
            word = word.substr(start);
            for (char& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (!word.empty()) m[word] += 1.0;
            word.clear();
        };
        for (char c : s) {
            if (c == ' ')
                flush();
            else
                word += c;
        }
        flush();
        return m;
    };
    auto ca = counts(a), cb = counts(b);
    double dot = 0, na = 0, nb = 0;
    for (auto& [w, x] : ca) {
        na += x * x;
        if (auto it = cb.find(w); it != cb.end()) dot += x * it->second;
    }
    for (auto& [w, y] : cb) nb += y * y;
    return dot / std::sqrt(na * nb);
}

} // namespace

TEST_CASE("tokens split on Unicode spaces and lose edge punctuation") {
    CHECK(tokenize("Hold your fire.") == Tokens{"hold", "your", "fire"});
    CHECK(tokenize("We’ve spotted—armed Enemy!") == Tokens{"we’ve", "spotted—armed", "enemy"});
    CHECK(tokenize("a b c　d") == Tokens{"a", "b", "c", "d"});
    CHECK(tokenize("“quoted” (paren) -- ...") == Tokens{"quoted", "paren"});
    CHECK(tokenize("cease-fire isn't") == Tokens{"cease-fire", "isn't"});
    CHECK(tokenize("ÉCOLE") == Tokens{"École"});
    CHECK(tokenize("   ").empty());
}

TEST_CASE("the hashed bag agrees with exact term-frequency cosine when buckets are distinct") {
    HashedBagEmbedder embedder;
    std::set<std::size_t> buckets;
    for (const std::string& w : kVocab) buckets.insert(embedder.bucket(w));
    REQUIRE(buckets.size() == kVocab.size());

    std::mt19937_64 rng(3);
    for (int i = 0; i < 300; ++i) {
        std::string a = random_sentence(rng), b = random_sentence(rng);
        if (a == b) continue;
        CAPTURE(a);
        CAPTURE(b);
        CHECK(similarity(a, b, embedder).value() == doctest::Approx(tf_cosine(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("FNV-1a hashing is the published function") {
    CHECK(HashedBagEmbedder::token_hash("") == 0xcbf29ce484222325ULL);
    CHECK(HashedBagEmbedder::token_hash("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(HashedBagEmbedder::token_hash("foobar") == 0x85944171f73967e8ULL);
    HashedBagEmbedder e(512);
    CHECK(e.embed("foobar foobar")[0x85944171f73967e8ULL % 512] == 2.0);
}

TEST_CASE("similarity is bounded, symmetric and exact on identity") {
    HashedBagEmbedder embedder;
    std::mt19937_64 rng(11);
    for (int i = 0; i < 500; ++i) {
        std::string a = random_sentence(rng), b = random_sentence(rng);
        double ab = similarity(a, b, embedder).value();
        CHECK(ab == similarity(b, a, embedder).value());
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
        CHECK(similarity(a, a, embedder).value() >= 1.0 - 1e-9);
    }
    CHECK(similarity("...", "...", embedder).value() == 1.0);
    CHECK(similarity("...", "!!!", embedder).value() == 0.0);
}

TEST_CASE("scores clamp into the unit interval") {
    CHECK(SimilarityScore(-0.25).value() == 0.0);
    CHECK(SimilarityScore(1.0000001).value() == 1.0);
    CHECK(SimilarityScore(std::nan("")).value() == 0.0);
    std::vector<double> a{1, 0}, b{-1, 0};
    CHECK(cosine_score(a, b).value() == 0.0);
    std::vector<double> zero{0, 0};
    CHECK(cosine_score(a, zero).value() == 0.0);
    std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(cosine_score(a, three), InvalidArgument);
}

TEST_CASE("find_closest matches a brute-force ranking") {
    HashedBagEmbedder embedder;
    std::mt19937_64 rng(5);
    for (int round = 0; round < 100; ++round) {
        std::vector<Candidate> candidates;
        int n = std::uniform_int_distribution<int>(1, 30)(rng);
        for (int i = 0; i < n; ++i) {
            // Repeated texts force ties on score.
            std::string text = i > 0 && i % 4 == 0 ? candidates[static_cast<std::size_t>(i - 1)].text : random_sentence(rng);
            candidates.push_back({100 - 3 * i, text});
        }
        std::shuffle(candidates.begin(), candidates.end(), rng);
        std::string query = random_sentence(rng);
        std::size_t k = std::uniform_int_distribution<std::size_t>(1, 35)(rng);

        std::vector<Ranked> brute;
        for (const Candidate& c : candidates) brute.push_back({c.id, similarity(query, c.text, embedder)});
        std::sort(brute.begin(), brute.end(), [](const Ranked& x, const Ranked& y) {
            return x.score.value() > y.score.value() || (x.score.value() == y.score.value() && x.id < y.id);
        });
        brute.resize(std::min(k, brute.size()));
        CHECK(find_closest(query, candidates, embedder, k) == brute);
    }
}

TEST_CASE("find_closest rejects unusable requests") {
    HashedBagEmbedder embedder;
    std::vector<Candidate> some = {{1, "hold fire"}};
    std::vector<Candidate> none;
    CHECK_THROWS_AS(find_closest("x", some, embedder, 0), InvalidArgument);
    CHECK_THROWS_AS(find_closest("x", none, embedder, 3), InvalidArgument);
    CHECK_THROWS_AS(find_closest("", some, embedder, 3), InvalidArgument);
    std::vector<Candidate> blank = {{1, ""}};
    CHECK_THROWS_AS(find_closest("x", blank, embedder, 3), InvalidArgument);
    CHECK_THROWS_AS(similarity("", "x", embedder), InvalidArgument);
}

TEST_CASE("the cache returns the inner embedding once per text") {
    struct Counting : Embedder {
        mutable int calls = 0;
        Embedding embed(std::string_view text) const override {
            ++calls;
            return {static_cast<double>(text.size()), 1.0};
        }
        std::size_t dimension() const override { return 2; }
    };
    auto inner = std::make_shared<Counting>();
    CachedEmbedder cached(inner);
    CHECK(cached.embed("abc") == Embedding{3, 1});
    CHECK(cached.embed("abc") == Embedding{3, 1});
    CHECK(cached.embed("ab") == Embedding{2, 1});
    CHECK(inner->calls == 2);
    CHECK(cached.cache_size() == 2);
    CHECK(cached.dimension() == 2);
}
