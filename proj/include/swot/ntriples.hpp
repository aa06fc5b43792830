#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "swot/error.hpp"
#include "swot/rdf.hpp"

// N-Triples reader/writer with two Turtle borrowings: @prefix directives
// and CURIE terms (expanded at load time). Output is canonical: full
// IRIs, one line per triple, lines sorted bytewise.

namespace swot {

namespace detail {

// Shared by the N-Triples, rule, and query parsers: a cursor over the
// input that tracks 1-based line/column for error reporting.
class TextCursor {
public:
    explicit TextCursor(std::string_view text) : text_(text) {}

    bool eof() const noexcept { return pos_ >= text_.size(); }
    char peek() const noexcept { return eof() ? '\0' : text_[pos_]; }
    char peek_at(std::size_t ahead) const noexcept {
        return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
    }

    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_ws_and_comments() {
        while (!eof()) {
            char c = peek();
            if (c == '#') {
                while (!eof() && peek() != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                advance();
            } else {
                break;
            }
        }
    }

    // Horizontal skip only; stops at newline. Used by the line-oriented
    // N-Triples reader, where a missing '.' must be reported on its line.
    void skip_blanks() {
        while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) advance();
    }

    int line() const noexcept { return line_; }
    int col() const noexcept { return col_; }

    [[noreturn]] void fail(const std::string& message) const { throw ParseError(message, line_, col_); }
    [[noreturn]] static void fail_at(const std::string& message, int line, int col) {
        throw ParseError(message, line, col);
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

inline void append_utf8(std::string& out, std::uint32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline std::uint32_t parse_hex_escape(TextCursor& cur, int digits) {
    std::uint32_t cp = 0;
    for (int i = 0; i < digits; ++i) {
        if (cur.eof()) cur.fail("truncated \\u escape");
        char c = cur.advance();
        cp <<= 4;
        if (c >= '0' && c <= '9') cp |= static_cast<std::uint32_t>(c - '0');
        else if (c >= 'a' && c <= 'f') cp |= static_cast<std::uint32_t>(c - 'a' + 10);
        else if (c >= 'A' && c <= 'F') cp |= static_cast<std::uint32_t>(c - 'A' + 10);
        else cur.fail(std::string("bad hex digit '") + c + "' in escape");
    }
    return cp;
}

// Reads <...>; the angle brackets are consumed.
inline std::string read_iri_ref(TextCursor& cur) {
    const int line = cur.line(), col = cur.col();
    cur.advance(); // '<'
    std::string iri;
    while (true) {
        if (cur.eof() || cur.peek() == '\n') TextCursor::fail_at("unterminated IRI", line, col);
        char c = cur.advance();
        if (c == '>') break;
        if (c == '<' || c == '"') TextCursor::fail_at(std::string("'") + c + "' inside IRI", line, col);
        iri.push_back(c);
    }
    if (iri.empty()) TextCursor::fail_at("empty IRI", line, col);
    if (contains_whitespace(iri)) TextCursor::fail_at("whitespace inside IRI", line, col);
    return iri;
}

// Reads a quoted string body with N-Triples escapes; the quotes are consumed.
inline std::string read_quoted(TextCursor& cur) {
    const int line = cur.line(), col = cur.col();
    cur.advance(); // '"'
    std::string out;
    while (true) {
        if (cur.eof() || cur.peek() == '\n') TextCursor::fail_at("unbalanced quotes", line, col);
        char c = cur.advance();
        if (c == '"') break;
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        if (cur.eof()) TextCursor::fail_at("truncated escape", line, col);
        char e = cur.advance();
        switch (e) {
            case 't': out.push_back('\t'); break;
            case 'b': out.push_back('\b'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case 'f': out.push_back('\f'); break;
            case '"': out.push_back('"'); break;
            case '\'': out.push_back('\''); break;
            case '\\': out.push_back('\\'); break;
            case 'u': append_utf8(out, parse_hex_escape(cur, 4)); break;
            case 'U': append_utf8(out, parse_hex_escape(cur, 8)); break;
            default: cur.fail(std::string("unknown escape '\\") + e + "'");
        }
    }
    return out;
}

inline bool pname_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

// prefix:local, where local may also contain dots (but not end in one,
// so the statement terminator stays unambiguous).
inline std::string read_pname(TextCursor& cur) {
    std::string name;
    while (!cur.eof() && (pname_char(cur.peek()) || cur.peek() == ':' ||
                          (cur.peek() == '.' && (pname_char(cur.peek_at(1)) || cur.peek_at(1) == ':')))) {
        name.push_back(cur.advance());
    }
    return name;
}

inline Term expand_curie_term(const std::string& pname, const PrefixMap& prefixes, int line, int col) {
    auto colon = pname.find(':');
    if (colon == std::string::npos) {
        TextCursor::fail_at("expected an IRI, CURIE, literal, or blank node near '" + pname + "'",
                            line, col);
    }
    const std::string prefix = pname.substr(0, colon);
    auto ns = prefixes.ns_for(prefix);
    if (!ns) TextCursor::fail_at("unknown prefix '" + prefix + ":'", line, col);
    return Term::iri(*ns + pname.substr(colon + 1));
}

// One RDF term in Turtle-subset syntax. Blank node labels are kept as
// written; document scoping is the caller's concern.
inline Term read_term(TextCursor& cur, const PrefixMap& prefixes) {
    const int line = cur.line(), col = cur.col();
    char c = cur.peek();
    if (c == '<') {
        return Term::iri(read_iri_ref(cur));
    }
    if (c == '"') {
        std::string lexical = read_quoted(cur);
        if (cur.peek() == '@') {
            cur.advance();
            std::string tag;
            while (!cur.eof() &&
                   (std::isalnum(static_cast<unsigned char>(cur.peek())) || cur.peek() == '-')) {
                tag.push_back(cur.advance());
            }
            if (!valid_lang_tag(tag)) TextCursor::fail_at("bad language tag '@" + tag + "'", line, col);
            return Term::lang_literal(std::move(lexical), tag);
        }
        if (cur.peek() == '^') {
            cur.advance();
            if (cur.peek() != '^') cur.fail("expected '^^' before datatype");
            cur.advance();
            if (cur.peek() == '<') return Term::literal(std::move(lexical), read_iri_ref(cur));
            const int dline = cur.line(), dcol = cur.col();
            std::string pname = read_pname(cur);
            if (pname.empty()) cur.fail("expected datatype IRI after '^^'");
            Term dt = expand_curie_term(pname, prefixes, dline, dcol);
            return Term::literal(std::move(lexical), dt.value());
        }
        return Term::literal(std::move(lexical));
    }
    if (c == '_' && cur.peek_at(1) == ':') {
        cur.advance();
        cur.advance();
        std::string label;
        while (!cur.eof() && pname_char(cur.peek())) label.push_back(cur.advance());
        if (label.empty()) TextCursor::fail_at("empty blank node label", line, col);
        return Term::blank(std::move(label));
    }
    std::string pname = read_pname(cur);
    if (pname.empty()) cur.fail(std::string("unexpected character '") + c + "'");
    return expand_curie_term(pname, prefixes, line, col);
}

inline std::string escape_lexical(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (unsigned char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '"': out += "\\\""; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c < 0x20) {
                    static const char* hex = "0123456789ABCDEF";
                    out += "\\u00";
                    out.push_back(hex[c >> 4]);
                    out.push_back(hex[c & 0xF]);
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    return out;
}

} // namespace detail

inline std::string to_ntriples(const Term& t) {
    switch (t.kind()) {
        case Term::Kind::Iri: return "<" + t.value() + ">";
        case Term::Kind::Blank: return "_:" + t.value();
        case Term::Kind::Literal: break;
    }
    std::string out = "\"" + detail::escape_lexical(t.lexical()) + "\"";
    if (!t.lang().empty()) {
        out += "@" + t.lang();
    } else if (t.datatype() != vocab::xsd_string) {
        out += "^^<" + t.datatype() + ">";
    }
    return out;
}

inline std::string to_ntriples(const Triple& t) {
    return to_ntriples(t.subject()) + " " + to_ntriples(t.predicate()) + " " +
           to_ntriples(t.object()) + " .";
}

struct ParsedGraph {
    Graph graph;
    PrefixMap prefixes;
};

// Parses N-Triples text plus the Turtle-subset extensions (@prefix,
// CURIEs). Malformed input raises ParseError with line and column.
inline ParsedGraph parse_ntriples(std::string_view text) {
    detail::TextCursor cur(text);
    ParsedGraph out{Graph{}, PrefixMap::with_defaults()};
    while (true) {
        cur.skip_ws_and_comments();
        if (cur.eof()) break;
        if (cur.peek() == '@') {
            const int line = cur.line(), col = cur.col();
            cur.advance();
            std::string keyword = detail::read_pname(cur);
            if (keyword != "prefix") detail::TextCursor::fail_at("unknown directive '@" + keyword + "'", line, col);
            cur.skip_blanks();
            std::string label = detail::read_pname(cur);
            if (label.empty() || label.back() != ':') cur.fail("expected 'label:' after @prefix");
            label.pop_back();
            cur.skip_blanks();
            if (cur.peek() != '<') cur.fail("expected <namespace IRI> in @prefix");
            std::string ns = detail::read_iri_ref(cur);
            cur.skip_blanks();
            if (cur.peek() != '.') cur.fail("missing '.' after @prefix directive");
            cur.advance();
            out.prefixes.set(std::move(label), std::move(ns));
            continue;
        }
        Term subject = detail::read_term(cur, out.prefixes);
        cur.skip_blanks();
        Term predicate = detail::read_term(cur, out.prefixes);
        cur.skip_blanks();
        Term object = detail::read_term(cur, out.prefixes);
        cur.skip_blanks();
        if (cur.eof() || cur.peek() != '.') cur.fail("missing terminal '.'");
        cur.advance();
        const int line = cur.line(), col = cur.col();
        try {
            out.graph.insert(Triple(std::move(subject), std::move(predicate), std::move(object)));
        } catch (const std::invalid_argument& e) {
            detail::TextCursor::fail_at(e.what(), line, col);
        }
    }
    return out;
}

// Canonical serialization: one N-Triples line per triple, bytewise
// sorted. A pure function of the triple set, so equal graphs serialize
// identically regardless of insertion order.
inline std::string serialize_ntriples(const Graph& g) {
    std::vector<std::string> lines;
    lines.reserve(g.size());
    for (const Triple& t : g.triples()) lines.push_back(to_ntriples(t));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const std::string& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

} // namespace swot
