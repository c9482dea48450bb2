#include "nnm/prompt.hpp"

#include <array>
#include <span>
#include <unordered_set>

#include "nnm/errors.hpp"
#include "nnm/graph.hpp"

namespace nnm {

namespace {

constexpr std::string_view kPlaceholder = "{}";

// UTF-8 encodings of characters treated as quotes or bullets.
constexpr std::array<std::string_view, 6> kQuotes = {"\"", "'", "“", "”", "‘", "’"};
constexpr std::array<std::string_view, 3> kBullets = {"-", "*", "•"};

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool trim(std::string_view& s) {
    std::size_t before = s.size();
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s.size() != before;
}

bool strip_any_prefix(std::string_view& s, std::span<const std::string_view> marks) {
    for (std::string_view m : marks) {
        if (s.starts_with(m)) {
            s.remove_prefix(m.size());
            return true;
        }
    }
    return false;
}

bool strip_any_suffix(std::string_view& s, std::span<const std::string_view> marks) {
    for (std::string_view m : marks) {
        if (s.ends_with(m)) {
            s.remove_suffix(m.size());
            return true;
        }
    }
    return false;
}

// "12." or "3)" followed by whitespace or end of item.
bool strip_numbering(std::string_view& s) {
    std::size_t i = 0;
    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
    if (i == 0 || i >= s.size() || (s[i] != '.' && s[i] != ')')) return false;
    if (i + 1 < s.size() && !is_space(s[i + 1])) return false;
    s.remove_prefix(i + 1);
    return true;
}

bool strip_bullet(std::string_view& s) {
    std::string_view probe = s;
    if (!strip_any_prefix(probe, kBullets)) return false;
    // "-5 degrees" is a value, not a bullet.
    if (!probe.empty() && !is_space(probe.front()) && probe.front() >= '0' && probe.front() <= '9')
        return false;
    s = probe;
    return true;
}

std::string clean_item(std::string_view s) {
    bool changed = true;
    while (changed && !s.empty()) {
        changed = trim(s);
        changed |= strip_bullet(s);
        changed |= strip_numbering(s);
        changed |= strip_any_prefix(s, kQuotes);
        changed |= strip_any_suffix(s, kQuotes);
        while (!s.empty() && s.back() == '.') {
            s.remove_suffix(1);
            changed = true;
        }
    }
    return std::string(s);
}

std::string clean_fragment(std::string_view s) {
    bool changed = true;
    while (changed && !s.empty()) {
        changed = trim(s);
        changed |= strip_bullet(s);
        changed |= strip_numbering(s);
        for (std::string_view q : kQuotes) {
            if (s.size() >= 2 * q.size() && s.starts_with(q)) {
                std::string_view inner = s.substr(q.size());
                if (strip_any_suffix(inner, kQuotes)) {
                    s = inner;
                    changed = true;
                }
                break;
            }
        }
    }
    return std::string(s);
}

} // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
    std::size_t first = text_.find(kPlaceholder);
    if (first == std::string::npos)
        throw ConfigError("prompt template has no {} placeholder");
    if (text_.find(kPlaceholder, first + kPlaceholder.size()) != std::string::npos)
        throw ConfigError("prompt template has more than one {} placeholder");
    slot_ = first;
}

std::string PromptTemplate::render(std::string_view seed) const {
    std::string out;
    out.reserve(text_.size() + seed.size());
    out.append(text_, 0, slot_);
    out.append(seed);
    out.append(text_, slot_ + kPlaceholder.size());
    return out;
}

std::vector<std::string> parse_response(std::string_view raw) {
    std::vector<std::string> items;
    std::unordered_set<std::string> seen;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= raw.size() && items.size() < kMaxResponseItems; ++i) {
        if (i < raw.size() && raw[i] != ',' && raw[i] != '\n' && raw[i] != '\r') continue;
        std::string item = clean_item(raw.substr(start, i - start));
        start = i + 1;
        if (item.empty()) continue;
        if (seen.insert(name_key(item)).second) items.push_back(std::move(item));
    }
    return items;
}

std::vector<std::string> parse_fragments(std::string_view raw) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= raw.size(); ++i) {
        if (i < raw.size() && raw[i] != '\n' && raw[i] != '\r') continue;
        std::string frag = clean_fragment(raw.substr(start, i - start));
        start = i + 1;
        if (frag.empty()) continue;
        if (seen.insert(frag).second) out.push_back(std::move(frag));
    }
    return out;
}

} // namespace nnm
