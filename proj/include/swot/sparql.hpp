#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "swot/error.hpp"
#include "swot/ntriples.hpp"
#include "swot/rdf.hpp"
#include "swot/rules.hpp"

// The SPARQL subset used by suggestion queries: SELECT [DISTINCT] over
// basic graph patterns with OPTIONAL blocks and FILTER expressions
// (comparisons, &&/||/!, lang, langMatches, str). Anything outside the
// subset is a named parse error.

namespace swot {

class FilterExpr;
using FilterExprPtr = std::shared_ptr<const FilterExpr>;

class FilterExpr {
public:
    enum class Kind { Constant, Variable, Compare, And, Or, Not, Lang, LangMatches, Str };
    enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne };

    static FilterExprPtr constant(Term t) {
        auto e = std::make_shared<FilterExpr>(Kind::Constant);
        e->term_ = std::move(t);
        return e;
    }
    static FilterExprPtr variable(std::string name) {
        auto e = std::make_shared<FilterExpr>(Kind::Variable);
        e->var_ = std::move(name);
        return e;
    }
    static FilterExprPtr compare(CmpOp op, FilterExprPtr lhs, FilterExprPtr rhs) {
        auto e = std::make_shared<FilterExpr>(Kind::Compare);
        e->cmp_ = op;
        e->children_ = {std::move(lhs), std::move(rhs)};
        return e;
    }
    static FilterExprPtr logical(Kind kind, std::vector<FilterExprPtr> children) {
        auto e = std::make_shared<FilterExpr>(kind);
        e->children_ = std::move(children);
        return e;
    }
    static FilterExprPtr call(Kind kind, std::vector<FilterExprPtr> args) {
        auto e = std::make_shared<FilterExpr>(kind);
        e->children_ = std::move(args);
        return e;
    }

    explicit FilterExpr(Kind kind) : kind_(kind) {}

    Kind kind() const noexcept { return kind_; }
    CmpOp cmp() const noexcept { return cmp_; }
    const Term& term() const { return *term_; }
    const std::string& var() const noexcept { return var_; }
    const std::vector<FilterExprPtr>& children() const noexcept { return children_; }

    // Variables mentioned anywhere in the expression.
    void collect_vars(std::set<std::string>& out) const {
        if (kind_ == Kind::Variable) out.insert(var_);
        for (const auto& c : children_) c->collect_vars(out);
    }

private:
    Kind kind_;
    CmpOp cmp_ = CmpOp::Eq;
    std::optional<Term> term_;
    std::string var_;
    std::vector<FilterExprPtr> children_;
};

struct GroupPattern {
    std::vector<TriplePattern> triples;
    std::vector<GroupPattern> optionals;
    std::vector<FilterExprPtr> filters;

    void collect_pattern_vars(std::set<std::string>& out) const {
        for (const TriplePattern& p : triples) {
            for (const TermOrVar* t : {&p.subject, &p.predicate, &p.object}) {
                if (t->is_var()) out.insert(t->var_name());
            }
        }
        for (const GroupPattern& opt : optionals) opt.collect_pattern_vars(out);
    }
};

struct Query {
    PrefixMap prefixes;
    std::vector<std::string> select_vars;
    bool distinct = false;
    GroupPattern pattern;
};

// A solution row: cells align with the header; unbound cells are empty.
struct SolutionTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::optional<Term>>> rows;

    std::string to_tsv() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += '\t';
            out += header[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += '\t';
                if (row[i]) out += to_ntriples(*row[i]);
            }
            out += '\n';
        }
        return out;
    }

    nlohmann::json to_json() const {
        nlohmann::json bindings = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json entry = nlohmann::json::object();
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (!row[i]) continue;
                const Term& t = *row[i];
                nlohmann::json cell;
                switch (t.kind()) {
                    case Term::Kind::Iri:
                        cell["type"] = "uri";
                        cell["value"] = t.value();
                        break;
                    case Term::Kind::Blank:
                        cell["type"] = "bnode";
                        cell["value"] = t.value();
                        break;
                    case Term::Kind::Literal:
                        cell["type"] = "literal";
                        cell["value"] = t.lexical();
                        if (!t.lang().empty()) {
                            cell["xml:lang"] = t.lang();
                        } else if (t.datatype() != vocab::xsd_string) {
                            cell["datatype"] = t.datatype();
                        }
                        break;
                }
                entry[header[i]] = std::move(cell);
            }
            bindings.push_back(std::move(entry));
        }
        return nlohmann::json{{"head", {{"vars", header}}}, {"results", {{"bindings", bindings}}}};
    }
};

namespace detail {

// Case-normalized lookahead at the next bare word, without consuming.
inline std::string peek_word(const TextCursor& cur) {
    std::string word;
    std::size_t i = 0;
    while (std::isalpha(static_cast<unsigned char>(cur.peek_at(i)))) {
        word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(cur.peek_at(i)))));
        ++i;
    }
    // a following ':' or name char means this is a CURIE, not a keyword
    char next = cur.peek_at(i);
    if (next == ':' || pname_char(next)) return {};
    return word;
}

inline void consume_word(TextCursor& cur, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) cur.advance();
}

inline const std::set<std::string>& unsupported_keywords() {
    static const std::set<std::string> kw = {
        "UNION", "GROUP",  "ORDER",     "LIMIT", "OFFSET",   "HAVING", "BIND",
        "MINUS", "VALUES", "SERVICE",   "GRAPH", "ASK",      "CONSTRUCT",
        "DESCRIBE", "REDUCED", "FROM",  "EXISTS", "NOT"};
    return kw;
}

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : cur_(text), prefixes_(PrefixMap::with_defaults()) {}

    Query parse() {
        Query q;
        parse_prologue();
        cur_.skip_ws_and_comments();
        expect_keyword("SELECT");
        cur_.skip_ws_and_comments();
        if (peek_word(cur_) == "DISTINCT") {
            consume_word(cur_, 8);
            q.distinct = true;
        }
        while (true) {
            cur_.skip_ws_and_comments();
            if (cur_.peek() == '?') {
                q.select_vars.push_back(read_var_name(cur_));
            } else {
                break;
            }
        }
        if (q.select_vars.empty()) {
            if (cur_.peek() == '*') cur_.fail("SELECT * is not supported; list variables explicitly");
            cur_.fail("expected at least one ?variable after SELECT");
        }
        cur_.skip_ws_and_comments();
        expect_keyword("WHERE");
        cur_.skip_ws_and_comments();
        q.pattern = parse_group();
        cur_.skip_ws_and_comments();
        if (!cur_.eof()) {
            std::string word = peek_word(cur_);
            if (unsupported_keywords().contains(word)) cur_.fail("unsupported keyword: " + word);
            cur_.fail("unexpected input after WHERE group");
        }
        q.prefixes = prefixes_;

        std::set<std::string> pattern_vars;
        q.pattern.collect_pattern_vars(pattern_vars);
        for (const std::string& v : q.select_vars) {
            if (!pattern_vars.contains(v)) {
                throw ParseError("unbound select variable ?" + v, 1, 1);
            }
        }
        return q;
    }

private:
    void parse_prologue() {
        while (true) {
            cur_.skip_ws_and_comments();
            if (peek_word(cur_) != "PREFIX") return;
            consume_word(cur_, 6);
            cur_.skip_ws_and_comments();
            std::string label = read_pname(cur_);
            if (label.empty() || label.back() != ':') cur_.fail("expected 'label:' after PREFIX");
            label.pop_back();
            cur_.skip_ws_and_comments();
            if (cur_.peek() != '<') cur_.fail("expected <namespace IRI> in PREFIX");
            prefixes_.set(std::move(label), read_iri_ref(cur_));
        }
    }

    void expect_keyword(const std::string& kw) {
        std::string word = peek_word(cur_);
        if (word == kw) {
            consume_word(cur_, kw.size());
            return;
        }
        if (unsupported_keywords().contains(word)) cur_.fail("unsupported keyword: " + word);
        cur_.fail("expected " + kw);
    }

    GroupPattern parse_group() {
        if (cur_.peek() != '{') cur_.fail("expected '{'");
        cur_.advance();
        GroupPattern group;
        bool need_dot = false; // a '.' must separate two triple patterns
        while (true) {
            cur_.skip_ws_and_comments();
            if (cur_.eof()) cur_.fail("unterminated group (missing '}')");
            if (cur_.peek() == '}') {
                cur_.advance();
                return group;
            }
            if (cur_.peek() == '.') {
                cur_.advance();
                need_dot = false;
                continue;
            }
            std::string word = peek_word(cur_);
            if (word == "OPTIONAL") {
                consume_word(cur_, 8);
                cur_.skip_ws_and_comments();
                group.optionals.push_back(parse_group());
                need_dot = false;
                continue;
            }
            if (word == "FILTER") {
                consume_word(cur_, 6);
                cur_.skip_ws_and_comments();
                if (cur_.peek() != '(') cur_.fail("expected '(' after FILTER");
                cur_.advance();
                group.filters.push_back(parse_expr());
                cur_.skip_ws_and_comments();
                if (cur_.peek() != ')') cur_.fail("expected ')' to close FILTER");
                cur_.advance();
                need_dot = false;
                continue;
            }
            if (unsupported_keywords().contains(word)) cur_.fail("unsupported keyword: " + word);
            if (need_dot) cur_.fail("expected '.' between triple patterns");
            TermOrVar s = read_term_or_var(cur_, prefixes_);
            cur_.skip_ws_and_comments();
            TermOrVar p = read_term_or_var(cur_, prefixes_);
            cur_.skip_ws_and_comments();
            TermOrVar o = read_term_or_var(cur_, prefixes_);
            group.triples.push_back(TriplePattern{std::move(s), std::move(p), std::move(o)});
            need_dot = true;
        }
    }

    FilterExprPtr parse_expr() { return parse_or(); }

    FilterExprPtr parse_or() {
        FilterExprPtr lhs = parse_and();
        while (true) {
            cur_.skip_ws_and_comments();
            if (cur_.peek() == '|' && cur_.peek_at(1) == '|') {
                cur_.advance();
                cur_.advance();
                lhs = FilterExpr::logical(FilterExpr::Kind::Or, {lhs, parse_and()});
            } else {
                return lhs;
            }
        }
    }

    FilterExprPtr parse_and() {
        FilterExprPtr lhs = parse_unary();
        while (true) {
            cur_.skip_ws_and_comments();
            if (cur_.peek() == '&' && cur_.peek_at(1) == '&') {
                cur_.advance();
                cur_.advance();
                lhs = FilterExpr::logical(FilterExpr::Kind::And, {lhs, parse_unary()});
            } else {
                return lhs;
            }
        }
    }

    FilterExprPtr parse_unary() {
        cur_.skip_ws_and_comments();
        if (cur_.peek() == '!' && cur_.peek_at(1) != '=') {
            cur_.advance();
            return FilterExpr::logical(FilterExpr::Kind::Not, {parse_unary()});
        }
        return parse_relational();
    }

    FilterExprPtr parse_relational() {
        FilterExprPtr lhs = parse_primary();
        cur_.skip_ws_and_comments();
        std::optional<FilterExpr::CmpOp> op;
        if (cur_.peek() == '<' && cur_.peek_at(1) == '=') {
            op = FilterExpr::CmpOp::Le;
            cur_.advance();
            cur_.advance();
        } else if (cur_.peek() == '>' && cur_.peek_at(1) == '=') {
            op = FilterExpr::CmpOp::Ge;
            cur_.advance();
            cur_.advance();
        } else if (cur_.peek() == '!' && cur_.peek_at(1) == '=') {
            op = FilterExpr::CmpOp::Ne;
            cur_.advance();
            cur_.advance();
        } else if (cur_.peek() == '<') {
            op = FilterExpr::CmpOp::Lt;
            cur_.advance();
        } else if (cur_.peek() == '>') {
            op = FilterExpr::CmpOp::Gt;
            cur_.advance();
        } else if (cur_.peek() == '=') {
            op = FilterExpr::CmpOp::Eq;
            cur_.advance();
        }
        if (!op) return lhs;
        return FilterExpr::compare(*op, std::move(lhs), parse_primary());
    }

    FilterExprPtr parse_primary() {
        cur_.skip_ws_and_comments();
        if (cur_.peek() == '(') {
            cur_.advance();
            FilterExprPtr inner = parse_expr();
            cur_.skip_ws_and_comments();
            if (cur_.peek() != ')') cur_.fail("expected ')'");
            cur_.advance();
            return inner;
        }
        if (cur_.peek() == '?') return FilterExpr::variable(read_var_name(cur_));
        std::string word = peek_word(cur_);
        if (!word.empty()) {
            // function call or unknown keyword; CURIEs were excluded by peek_word
            std::size_t len = word.size();
            if (word == "LANG") {
                consume_word(cur_, len);
                auto args = parse_call_args(1, "LANG");
                return FilterExpr::call(FilterExpr::Kind::Lang, std::move(args));
            }
            if (word == "LANGMATCHES") {
                consume_word(cur_, len);
                auto args = parse_call_args(2, "LANGMATCHES");
                return FilterExpr::call(FilterExpr::Kind::LangMatches, std::move(args));
            }
            if (word == "STR") {
                consume_word(cur_, len);
                auto args = parse_call_args(1, "STR");
                return FilterExpr::call(FilterExpr::Kind::Str, std::move(args));
            }
            cur_.fail("unsupported function: " + word);
        }
        // ground term: IRI, CURIE, number, or string literal
        if (cur_.peek() == '<' || cur_.peek() == '"' || number_start(cur_) ||
            pname_char(cur_.peek())) {
            if (number_start(cur_)) return FilterExpr::constant(read_number(cur_));
            return FilterExpr::constant(read_term(cur_, prefixes_));
        }
        cur_.fail("expected a filter expression");
    }

    std::vector<FilterExprPtr> parse_call_args(std::size_t arity, const std::string& fn) {
        cur_.skip_ws_and_comments();
        if (cur_.peek() != '(') cur_.fail("expected '(' after " + fn);
        cur_.advance();
        std::vector<FilterExprPtr> args;
        while (true) {
            args.push_back(parse_expr());
            cur_.skip_ws_and_comments();
            if (cur_.peek() == ',') {
                cur_.advance();
                continue;
            }
            if (cur_.peek() == ')') {
                cur_.advance();
                break;
            }
            cur_.fail("expected ',' or ')' in " + fn + " arguments");
        }
        if (args.size() != arity) {
            cur_.fail(fn + " takes " + std::to_string(arity) + " argument(s), got " +
                      std::to_string(args.size()));
        }
        return args;
    }

    TextCursor cur_;
    PrefixMap prefixes_;
};

} // namespace detail

// Parses the SPARQL subset; keywords are case-insensitive and CURIEs are
// expanded at parse time. Constructs outside the subset raise ParseError
// naming the keyword.
inline Query parse_query(std::string_view text) {
    return detail::QueryParser(text).parse();
}

enum class FilterResult { True, False, Error };

namespace detail {

// Values during filter evaluation: an RDF term, a simple string (the
// result of str()/lang()), a boolean, or an error marker.
struct EvalValue {
    enum class Kind { Error, Bool, Str, Node };
    Kind kind = Kind::Error;
    bool b = false;
    std::string s;
    std::optional<Term> node;

    static EvalValue error() { return {}; }
    static EvalValue boolean(bool v) {
        EvalValue e;
        e.kind = Kind::Bool;
        e.b = v;
        return e;
    }
    static EvalValue str(std::string v) {
        EvalValue e;
        e.kind = Kind::Str;
        e.s = std::move(v);
        return e;
    }
    static EvalValue term(Term t) {
        EvalValue e;
        e.kind = Kind::Node;
        e.node = std::move(t);
        return e;
    }
};

inline std::optional<double> value_as_number(const EvalValue& v) {
    if (v.kind == EvalValue::Kind::Node) return numeric_value(*v.node);
    return std::nullopt;
}

// Simple strings: Str values, plus xsd:string literals (no language tag).
inline std::optional<std::string> value_as_string(const EvalValue& v) {
    if (v.kind == EvalValue::Kind::Str) return v.s;
    if (v.kind == EvalValue::Kind::Node && v.node->is_literal() && v.node->lang().empty() &&
        v.node->datatype() == vocab::xsd_string) {
        return v.node->lexical();
    }
    return std::nullopt;
}

// RFC 4647 basic filtering: "*" matches any non-empty tag, otherwise a
// case-insensitive exact match or a prefix match at a '-' boundary.
inline bool lang_matches(std::string_view tag, std::string_view range) {
    std::string t = to_lower(tag);
    std::string r = to_lower(range);
    if (r == "*") return !t.empty();
    if (t == r) return true;
    return t.size() > r.size() && t.compare(0, r.size(), r) == 0 && t[r.size()] == '-';
}

using Env = std::map<std::string, Term>;

inline EvalValue eval_expr(const FilterExpr& e, const Env& env) {
    using Kind = FilterExpr::Kind;
    switch (e.kind()) {
        case Kind::Constant:
            return EvalValue::term(e.term());
        case Kind::Variable: {
            auto it = env.find(e.var());
            if (it == env.end()) return EvalValue::error();
            return EvalValue::term(it->second);
        }
        case Kind::Lang: {
            EvalValue v = eval_expr(*e.children()[0], env);
            if (v.kind != EvalValue::Kind::Node || !v.node->is_literal()) return EvalValue::error();
            return EvalValue::str(v.node->lang());
        }
        case Kind::Str: {
            EvalValue v = eval_expr(*e.children()[0], env);
            if (v.kind == EvalValue::Kind::Str) return v;
            if (v.kind == EvalValue::Kind::Node && !v.node->is_blank()) {
                return EvalValue::str(v.node->is_iri() ? v.node->value() : v.node->lexical());
            }
            return EvalValue::error();
        }
        case Kind::LangMatches: {
            EvalValue tag = eval_expr(*e.children()[0], env);
            EvalValue range = eval_expr(*e.children()[1], env);
            auto tag_s = value_as_string(tag);
            auto range_s = value_as_string(range);
            if (!tag_s || !range_s) return EvalValue::error();
            return EvalValue::boolean(lang_matches(*tag_s, *range_s));
        }
        case Kind::Not: {
            EvalValue v = eval_expr(*e.children()[0], env);
            if (v.kind != EvalValue::Kind::Bool) return EvalValue::error();
            return EvalValue::boolean(!v.b);
        }
        case Kind::And: {
            EvalValue l = eval_expr(*e.children()[0], env);
            EvalValue r = eval_expr(*e.children()[1], env);
            bool lf = l.kind == EvalValue::Kind::Bool && !l.b;
            bool rf = r.kind == EvalValue::Kind::Bool && !r.b;
            if (lf || rf) return EvalValue::boolean(false);
            if (l.kind != EvalValue::Kind::Bool || r.kind != EvalValue::Kind::Bool) {
                return EvalValue::error();
            }
            return EvalValue::boolean(true);
        }
        case Kind::Or: {
            EvalValue l = eval_expr(*e.children()[0], env);
            EvalValue r = eval_expr(*e.children()[1], env);
            bool lt = l.kind == EvalValue::Kind::Bool && l.b;
            bool rt = r.kind == EvalValue::Kind::Bool && r.b;
            if (lt || rt) return EvalValue::boolean(true);
            if (l.kind != EvalValue::Kind::Bool || r.kind != EvalValue::Kind::Bool) {
                return EvalValue::error();
            }
            return EvalValue::boolean(false);
        }
        case Kind::Compare: {
            EvalValue l = eval_expr(*e.children()[0], env);
            EvalValue r = eval_expr(*e.children()[1], env);
            if (l.kind == EvalValue::Kind::Error || r.kind == EvalValue::Kind::Error) {
                return EvalValue::error();
            }
            auto ln = value_as_number(l);
            auto rn = value_as_number(r);
            const auto op = e.cmp();
            if (ln && rn) {
                switch (op) {
                    case FilterExpr::CmpOp::Lt: return EvalValue::boolean(*ln < *rn);
                    case FilterExpr::CmpOp::Le: return EvalValue::boolean(*ln <= *rn);
                    case FilterExpr::CmpOp::Gt: return EvalValue::boolean(*ln > *rn);
                    case FilterExpr::CmpOp::Ge: return EvalValue::boolean(*ln >= *rn);
                    case FilterExpr::CmpOp::Eq: return EvalValue::boolean(*ln == *rn);
                    case FilterExpr::CmpOp::Ne: return EvalValue::boolean(*ln != *rn);
                }
            }
            if (op == FilterExpr::CmpOp::Eq || op == FilterExpr::CmpOp::Ne) {
                auto ls = value_as_string(l);
                auto rs = value_as_string(r);
                if (ls && rs) {
                    bool eq = *ls == *rs;
                    return EvalValue::boolean(op == FilterExpr::CmpOp::Eq ? eq : !eq);
                }
                if (l.kind == EvalValue::Kind::Node && r.kind == EvalValue::Kind::Node) {
                    bool eq = *l.node == *r.node;
                    return EvalValue::boolean(op == FilterExpr::CmpOp::Eq ? eq : !eq);
                }
                if (l.kind == EvalValue::Kind::Bool && r.kind == EvalValue::Kind::Bool) {
                    bool eq = l.b == r.b;
                    return EvalValue::boolean(op == FilterExpr::CmpOp::Eq ? eq : !eq);
                }
            }
            return EvalValue::error(); // incomparable
        }
    }
    return EvalValue::error();
}

} // namespace detail

// Three-valued filter evaluation over a (possibly partial) row binding.
// Errors are values here, never exceptions; execute() drops error rows.
inline FilterResult eval_filter(const FilterExpr& expr, const std::map<std::string, Term>& row) {
    detail::EvalValue v = detail::eval_expr(expr, row);
    if (v.kind == detail::EvalValue::Kind::Bool) return v.b ? FilterResult::True : FilterResult::False;
    return FilterResult::Error;
}

// Side channel for debugging: how many rows filters removed, and how
// many of those removals were three-valued errors rather than false.
struct ExecStats {
    std::size_t rows_filtered = 0;
    std::size_t filter_errors = 0;
};

namespace detail {

// Greedy most-selective-first ordering for a BGP: prefer patterns with
// more bound slots (ground terms or already-bound variables), break ties
// with the graph match count of the ground-only pattern, then with the
// original position. Result sets do not depend on this, only speed does.
inline std::vector<std::size_t> plan_bgp(const std::vector<TriplePattern>& patterns, const Graph& g,
                                         std::set<std::string> bound) {
    std::vector<std::size_t> remaining(patterns.size());
    for (std::size_t i = 0; i < patterns.size(); ++i) remaining[i] = i;
    std::vector<std::size_t> order;

    auto slot_bound = [&bound](const TermOrVar& t) {
        return !t.is_var() || bound.contains(t.var_name());
    };
    auto ground_count = [&g](const TriplePattern& p) {
        const Term* s = p.subject.is_var() ? nullptr : &p.subject.term();
        const Term* pr = p.predicate.is_var() ? nullptr : &p.predicate.term();
        const Term* o = p.object.is_var() ? nullptr : &p.object.term();
        std::size_t n = 0;
        g.scan(s, pr, o, [&n](const Triple&) { ++n; });
        return n;
    };

    while (!remaining.empty()) {
        std::size_t best_slot = 0;
        int best_bound = -1;
        std::size_t best_count = 0;
        for (std::size_t slot = 0; slot < remaining.size(); ++slot) {
            const TriplePattern& p = patterns[remaining[slot]];
            int bound_slots = static_cast<int>(slot_bound(p.subject)) +
                              static_cast<int>(slot_bound(p.predicate)) +
                              static_cast<int>(slot_bound(p.object));
            std::size_t count = ground_count(p);
            bool better = bound_slots > best_bound ||
                          (bound_slots == best_bound && count < best_count);
            if (best_bound < 0 || better) {
                best_slot = slot;
                best_bound = bound_slots;
                best_count = count;
            }
        }
        std::size_t chosen = remaining[best_slot];
        order.push_back(chosen);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_slot));
        const TriplePattern& p = patterns[chosen];
        for (const TermOrVar* t : {&p.subject, &p.predicate, &p.object}) {
            if (t->is_var()) bound.insert(t->var_name());
        }
    }
    return order;
}

inline std::vector<Env> eval_group(const GroupPattern& group, const Graph& g, std::vector<Env> rows,
                                   ExecStats* stats) {
    std::set<std::string> bound;
    if (!rows.empty()) {
        for (const auto& [var, term] : rows.front()) bound.insert(var);
    }
    for (std::size_t idx : plan_bgp(group.triples, g, bound)) {
        const TriplePattern& pattern = group.triples[idx];
        std::vector<Env> extended;
        for (const Env& row : rows) {
            match_pattern(g, pattern, row, [&extended](Env e) { extended.push_back(std::move(e)); });
        }
        rows = std::move(extended);
        if (rows.empty()) return rows;
    }
    for (const GroupPattern& opt : group.optionals) {
        std::vector<Env> joined;
        for (Env& row : rows) {
            std::vector<Env> sub = eval_group(opt, g, {row}, stats);
            if (sub.empty()) {
                joined.push_back(std::move(row)); // left join keeps the row
            } else {
                joined.insert(joined.end(), std::make_move_iterator(sub.begin()),
                              std::make_move_iterator(sub.end()));
            }
        }
        rows = std::move(joined);
    }
    if (!group.filters.empty()) {
        std::vector<Env> kept;
        for (Env& row : rows) {
            bool keep = true;
            for (const FilterExprPtr& f : group.filters) {
                FilterResult r = eval_filter(*f, row);
                if (r != FilterResult::True) {
                    keep = false;
                    if (stats) {
                        ++stats->rows_filtered;
                        if (r == FilterResult::Error) ++stats->filter_errors;
                    }
                    break;
                }
            }
            if (keep) kept.push_back(std::move(row));
        }
        rows = std::move(kept);
    }
    return rows;
}

inline std::string row_key(const std::vector<std::optional<Term>>& row) {
    std::string key;
    for (const auto& cell : row) {
        key += cell ? to_ntriples(*cell) : std::string("~");
        key += '\x1f';
    }
    return key;
}

} // namespace detail

// Evaluates the query: BGP join, then OPTIONAL left joins in order, then
// group filters, then projection (and DISTINCT) preserving first-occurrence
// row order. Never throws; filter errors drop rows per the three-valued
// contract.
inline SolutionTable execute(const Query& query, const Graph& graph, ExecStats* stats = nullptr) {
    std::vector<detail::Env> rows =
        detail::eval_group(query.pattern, graph, {detail::Env{}}, stats);

    SolutionTable table;
    table.header = query.select_vars;
    std::unordered_set<std::string> seen;
    for (const detail::Env& row : rows) {
        std::vector<std::optional<Term>> cells;
        cells.reserve(table.header.size());
        for (const std::string& var : table.header) {
            auto it = row.find(var);
            if (it == row.end()) {
                cells.emplace_back(std::nullopt);
            } else {
                cells.emplace_back(it->second);
            }
        }
        if (query.distinct) {
            if (!seen.insert(detail::row_key(cells)).second) continue;
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

} // namespace swot
