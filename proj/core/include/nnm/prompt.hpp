#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nnm {

/// A prompt with exactly one `{}` placeholder that receives the seed.
class PromptTemplate {
public:
    /// Throws ConfigError unless `text` contains exactly one `{}`.
    explicit PromptTemplate(std::string text);

    std::string render(std::string_view seed) const;
    const std::string& text() const { return text_; }

    bool operator==(const PromptTemplate&) const = default;

private:
    std::string text_;
    std::size_t slot_ = 0;
};

inline constexpr std::size_t kMaxResponseItems = 32;

/// Splits a list-style completion into item names.
///
/// Items are separated by commas and line breaks. Each item loses surrounding
/// whitespace, quotes, bullet markers ("-", "*", "•"), numbered prefixes
/// ("1.", "2)") and trailing periods. Empty items are dropped, duplicates
/// (compared by node-name key) keep their first occurrence, and at most
/// kMaxResponseItems are returned.
std::vector<std::string> parse_response(std::string_view raw);

/// Splits a sentence-style completion into fragments for manual curation.
///
/// One fragment per line. Bullets, numbering, surrounding whitespace and a
/// matching pair of enclosing quotes are removed; inner punctuation, commas
/// and the final period are kept. Exact duplicates are dropped.
std::vector<std::string> parse_fragments(std::string_view raw);

} // namespace nnm
