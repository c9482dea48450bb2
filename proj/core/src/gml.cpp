#include "nnm/gml.hpp"

#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "nnm/errors.hpp"

namespace nnm {

namespace {

void append_double(std::string& out, double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, end);
}

void append_quoted(std::string& out, std::string_view s) {
    out.push_back('"');
    for (char c : s) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
}

// ---------------------------------------------------------------- lexer

enum class TokenKind { key, integer, real, string, open, close, end };

struct Token {
    TokenKind kind = TokenKind::end;
    std::string text;
    std::int64_t integer = 0;
    double real = 0.0;
    std::size_t line = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view doc) : doc_(doc) {}

    Token next() {
        skip_blank();
        Token tok;
        tok.line = line_;
        if (pos_ >= doc_.size()) return tok;
        char c = doc_[pos_];
        if (c == '[') {
            ++pos_;
            tok.kind = TokenKind::open;
        } else if (c == ']') {
            ++pos_;
            tok.kind = TokenKind::close;
        } else if (c == '"') {
            lex_string(tok);
        } else if (is_key_start(c)) {
            std::size_t start = pos_;
            while (pos_ < doc_.size() && is_key_char(doc_[pos_])) ++pos_;
            tok.kind = TokenKind::key;
            tok.text = std::string(doc_.substr(start, pos_ - start));
        } else if (c == '-' || c == '+' || c == '.' || is_digit(c)) {
            lex_number(tok);
        } else {
            throw GmlParseError(line_, std::string("unexpected character '") + c + "'");
        }
        return tok;
    }

private:
    static bool is_digit(char c) { return c >= '0' && c <= '9'; }
    static bool is_key_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool is_key_char(char c) { return is_key_start(c) || is_digit(c); }

    void skip_blank() {
        while (pos_ < doc_.size()) {
            char c = doc_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
                ++pos_;
            } else if (c == '#') {
                while (pos_ < doc_.size() && doc_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    void lex_string(Token& tok) {
        ++pos_;
        tok.kind = TokenKind::string;
        while (true) {
            if (pos_ >= doc_.size()) throw GmlParseError(tok.line, "unterminated string");
            char c = doc_[pos_++];
            if (c == '"') return;
            if (c == '\n') ++line_;
            if (c == '\\') {
                if (pos_ >= doc_.size()) throw GmlParseError(tok.line, "unterminated string");
                c = doc_[pos_++];
                if (c == '\n') ++line_;
            }
            tok.text.push_back(c);
        }
    }

    void lex_number(Token& tok) {
        std::size_t start = pos_;
        bool is_real = false;
        if (doc_[pos_] == '-' || doc_[pos_] == '+') ++pos_;
        while (pos_ < doc_.size()) {
            char c = doc_[pos_];
            if (is_digit(c)) {
                ++pos_;
            } else if (c == '.' || c == 'e' || c == 'E') {
                is_real = true;
                ++pos_;
                if ((c == 'e' || c == 'E') && pos_ < doc_.size() &&
                    (doc_[pos_] == '-' || doc_[pos_] == '+'))
                    ++pos_;
            } else {
                break;
            }
        }
        std::string_view text = doc_.substr(start, pos_ - start);
        if (!text.empty() && text.front() == '+') text.remove_prefix(1);
        const char* first = text.data();
        const char* last = text.data() + text.size();
        if (is_real) {
            auto [ptr, ec] = std::from_chars(first, last, tok.real);
            if (ec != std::errc{} || ptr != last)
                throw GmlParseError(line_, "malformed number '" + std::string(text) + "'");
            tok.kind = TokenKind::real;
        } else {
            auto [ptr, ec] = std::from_chars(first, last, tok.integer);
            if (ec == std::errc::result_out_of_range && ptr == last) {
                // Large whole-valued doubles print without exponent.
                auto [rptr, rec] = std::from_chars(first, last, tok.real);
                if (rec != std::errc{} || rptr != last)
                    throw GmlParseError(line_, "malformed number '" + std::string(text) + "'");
                tok.kind = TokenKind::real;
                return;
            }
            if (ec != std::errc{} || ptr != last)
                throw GmlParseError(line_, "malformed integer '" + std::string(text) + "'");
            tok.kind = TokenKind::integer;
        }
    }

    std::string_view doc_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
};

// ---------------------------------------------------------------- tree

struct Pair;
using List = std::vector<Pair>;

struct Value {
    std::variant<std::int64_t, double, std::string, List> data;
    std::size_t line = 1;
};

struct Pair {
    std::string key;
    Value value;
};

class TreeParser {
public:
    explicit TreeParser(std::string_view doc) : lexer_(doc) { advance(); }

    List parse_document() {
        List top = parse_list(/*nested=*/false, 0);
        return top;
    }

private:
    void advance() { current_ = lexer_.next(); }

    List parse_list(bool nested, std::size_t open_line) {
        List out;
        while (true) {
            if (current_.kind == TokenKind::end) {
                if (nested) throw GmlParseError(current_.line, "unexpected end of document: list opened on line " +
                                                                   std::to_string(open_line) + " is not closed");
                return out;
            }
            if (current_.kind == TokenKind::close) {
                if (!nested) throw GmlParseError(current_.line, "unbalanced ']'");
                advance();
                return out;
            }
            if (current_.kind != TokenKind::key)
                throw GmlParseError(current_.line, "expected a key");
            Pair p;
            p.key = std::move(current_.text);
            std::size_t key_line = current_.line;
            advance();
            p.value.line = current_.line;
            switch (current_.kind) {
            case TokenKind::integer:
                p.value.data = current_.integer;
                advance();
                break;
            case TokenKind::real:
                p.value.data = current_.real;
                advance();
                break;
            case TokenKind::string:
                p.value.data = std::move(current_.text);
                advance();
                break;
            case TokenKind::open: {
                std::size_t line = current_.line;
                advance();
                p.value.data = parse_list(true, line);
                break;
            }
            case TokenKind::end:
                throw GmlParseError(key_line, "unexpected end of document after key '" + p.key + "'");
            default:
                throw GmlParseError(current_.line, "missing value for key '" + p.key + "'");
            }
            out.push_back(std::move(p));
        }
    }

    Lexer lexer_;
    Token current_;
};

// ---------------------------------------------------------------- interpretation

const List& as_list(const Pair& p) {
    if (auto* l = std::get_if<List>(&p.value.data)) return *l;
    throw GmlParseError(p.value.line, "'" + p.key + "' must be a list");
}

std::int64_t as_int(const Pair& p) {
    if (auto* i = std::get_if<std::int64_t>(&p.value.data)) return *i;
    throw GmlParseError(p.value.line, "'" + p.key + "' must be an integer");
}

double as_number(const Pair& p) {
    if (auto* i = std::get_if<std::int64_t>(&p.value.data)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&p.value.data)) return *d;
    throw GmlParseError(p.value.line, "'" + p.key + "' must be a number");
}

const std::string& as_string(const Pair& p) {
    if (auto* s = std::get_if<std::string>(&p.value.data)) return *s;
    throw GmlParseError(p.value.line, "'" + p.key + "' must be a string");
}

// Collects the keys we care about, rejecting duplicates among them.
class Fields {
public:
    Fields(const List& list, std::initializer_list<std::string_view> wanted) {
        for (const Pair& p : list) {
            for (std::string_view w : wanted) {
                if (p.key != w) continue;
                if (!found_.emplace(p.key, &p).second)
                    throw GmlParseError(p.value.line, "duplicate key '" + p.key + "'");
            }
        }
    }

    const Pair* get(const std::string& key) const {
        auto it = found_.find(key);
        return it == found_.end() ? nullptr : it->second;
    }

private:
    std::map<std::string, const Pair*, std::less<>> found_;
};

MapNode read_node(const Pair& block) {
    const List& body = as_list(block);
    Fields f(body, {"id", "label", "group", "value", "graphics"});
    const Pair* id = f.get("id");
    const Pair* label = f.get("label");
    if (!id) throw GmlParseError(block.value.line, "node without id");
    if (!label) throw GmlParseError(block.value.line, "node without label");
    MapNode node;
    node.id = NodeId{as_int(*id)};
    node.name = as_string(*label);
    if (const Pair* group = f.get("group")) node.group = as_string(*group);
    if (const Pair* value = f.get("value")) {
        std::int64_t v = as_int(*value);
        if (v < 0) throw GmlParseError(value->value.line, "negative value");
        node.query_count = static_cast<std::uint64_t>(v);
    }
    if (const Pair* graphics = f.get("graphics")) {
        Fields g(as_list(*graphics), {"x", "y"});
        if (const Pair* x = g.get("x")) node.position.x = as_number(*x);
        if (const Pair* y = g.get("y")) node.position.y = as_number(*y);
        if (!node.position.finite()) throw GmlParseError(graphics->value.line, "non-finite coordinate");
    }
    return node;
}

} // namespace

std::string export_gml(const MapGraph& graph) {
    std::string out = "graph [\n  directed 0\n";
    for (const MapNode& n : graph.nodes()) {
        out += "  node [ id ";
        out += std::to_string(n.id.value);
        out += " label ";
        append_quoted(out, n.name);
        if (n.group) {
            out += " group ";
            append_quoted(out, *n.group);
        }
        out += " value ";
        out += std::to_string(n.query_count);
        out += " graphics [ x ";
        append_double(out, n.position.x);
        out += " y ";
        append_double(out, n.position.y);
        out += " ] ]\n";
    }
    for (const MapEdge& e : graph.edges()) {
        out += "  edge [ source ";
        out += std::to_string(e.source.value);
        out += " target ";
        out += std::to_string(e.target.value);
        out += " ]\n";
    }
    out += "]\n";
    return out;
}

MapGraph import_gml(std::string_view document) {
    List top = TreeParser(document).parse_document();
    const Pair* graph_block = nullptr;
    for (const Pair& p : top) {
        if (p.key == "graph") {
            graph_block = &p;
            break;
        }
    }
    if (!graph_block) throw GmlParseError(1, "no 'graph' block");

    MapGraph graph;
    std::vector<const Pair*> edges;
    for (const Pair& p : as_list(*graph_block)) {
        if (p.key == "node") {
            MapNode node = read_node(p);
            try {
                graph.insert_node(std::move(node));
            } catch (const InvalidArgument& e) {
                throw GmlParseError(p.value.line, e.what());
            }
        } else if (p.key == "edge") {
            edges.push_back(&p);
        }
    }
    for (const Pair* p : edges) {
        Fields f(as_list(*p), {"source", "target"});
        const Pair* source = f.get("source");
        const Pair* target = f.get("target");
        if (!source || !target) throw GmlParseError(p->value.line, "edge without source or target");
        NodeId a{as_int(*source)};
        NodeId b{as_int(*target)};
        try {
            graph.connect(a, b);
        } catch (const Error& e) {
            throw GmlParseError(p->value.line, e.what());
        }
    }
    return graph;
}

} // namespace nnm
