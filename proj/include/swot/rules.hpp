#pragma once

#include <array>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "swot/error.hpp"
#include "swot/ntriples.hpp"
#include "swot/rdf.hpp"

// Forward-chaining rules: `[name: body -> head]` where body atoms are
// triple patterns `(term term term)` or numeric builtins, and heads are
// triple patterns. infer() computes the least fixpoint closure with
// semi-naive evaluation; explain() additionally reports which rule
// instance first derived each new triple.

namespace swot {

// A pattern slot: either a variable or a ground term.
class TermOrVar {
public:
    static TermOrVar var(std::string name) { return TermOrVar(std::move(name)); }
    static TermOrVar ground(Term t) { return TermOrVar(std::move(t)); }

    bool is_var() const noexcept { return std::holds_alternative<std::string>(v_); }
    const std::string& var_name() const { return std::get<std::string>(v_); }
    const Term& term() const { return std::get<Term>(v_); }

    bool operator==(const TermOrVar& rhs) const { return v_ == rhs.v_; }

private:
    explicit TermOrVar(std::string name) : v_(std::move(name)) {}
    explicit TermOrVar(Term t) : v_(std::move(t)) {}
    std::variant<std::string, Term> v_;
};

struct TriplePattern {
    TermOrVar subject;
    TermOrVar predicate;
    TermOrVar object;
};

enum class BuiltinKind { GreaterThan, LessThan, Equal, NotEqual };

inline std::string_view builtin_name(BuiltinKind k) {
    switch (k) {
        case BuiltinKind::GreaterThan: return "greaterThan";
        case BuiltinKind::LessThan: return "lessThan";
        case BuiltinKind::Equal: return "equal";
        case BuiltinKind::NotEqual: return "notEqual";
    }
    return "?";
}

inline std::optional<BuiltinKind> builtin_from_name(std::string_view name) {
    if (name == "greaterThan") return BuiltinKind::GreaterThan;
    if (name == "lessThan") return BuiltinKind::LessThan;
    if (name == "equal") return BuiltinKind::Equal;
    if (name == "notEqual") return BuiltinKind::NotEqual;
    return std::nullopt;
}

struct BuiltinAtom {
    BuiltinKind kind;
    std::array<TermOrVar, 2> args;
};

using RuleAtom = std::variant<TriplePattern, BuiltinAtom>;

struct Rule {
    std::string name;
    std::vector<RuleAtom> body; // non-empty, at least one pattern
    std::vector<TriplePattern> head;
};

using Bindings = std::map<std::string, Term>;

// Numeric view of a term for builtins and filters: literals typed
// xsd:double/float/decimal/integer (and friends), or any literal whose
// whole lexical form reads as a decimal number. Everything else has no
// numeric value.
inline std::optional<double> numeric_value(const Term& t) {
    if (!t.is_literal()) return std::nullopt;
    const std::string& dt = t.datatype();
    const bool numeric_type = dt == vocab::xsd_double || dt == vocab::xsd_float ||
                              dt == vocab::xsd_decimal || dt == vocab::xsd_integer ||
                              dt == vocab::xsd_int || dt == vocab::xsd_long;
    const bool plain = dt == vocab::xsd_string && !t.lexical().empty();
    if (!numeric_type && !plain) return std::nullopt;
    const std::string& lex = t.lexical();
    char* end = nullptr;
    double v = std::strtod(lex.c_str(), &end);
    if (end != lex.c_str() + lex.size() || lex.empty()) return std::nullopt;
    return v;
}

namespace detail {

// ---- rule parsing ----------------------------------------------------

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

inline std::string read_ident(TextCursor& cur) {
    std::string s;
    while (!cur.eof() && ident_char(cur.peek())) s.push_back(cur.advance());
    return s;
}

inline bool number_start(const TextCursor& cur) {
    char c = cur.peek();
    if (std::isdigit(static_cast<unsigned char>(c))) return true;
    return (c == '-' || c == '+') && std::isdigit(static_cast<unsigned char>(cur.peek_at(1)));
}

// Bare numbers in rules and queries become xsd:double / xsd:integer
// literals with their source lexical form preserved.
inline Term read_number(TextCursor& cur) {
    std::string lex;
    if (cur.peek() == '-' || cur.peek() == '+') lex.push_back(cur.advance());
    bool has_dot = false, has_exp = false;
    while (!cur.eof()) {
        char c = cur.peek();
        if (std::isdigit(static_cast<unsigned char>(c))) {
            lex.push_back(cur.advance());
        } else if (c == '.' && !has_dot && !has_exp &&
                   std::isdigit(static_cast<unsigned char>(cur.peek_at(1)))) {
            has_dot = true;
            lex.push_back(cur.advance());
        } else if ((c == 'e' || c == 'E') && !has_exp) {
            has_exp = true;
            lex.push_back(cur.advance());
            if (cur.peek() == '-' || cur.peek() == '+') lex.push_back(cur.advance());
        } else {
            break;
        }
    }
    return Term::literal(lex, (has_dot || has_exp) ? vocab::xsd_double : vocab::xsd_integer);
}

inline std::string read_var_name(TextCursor& cur) {
    cur.advance(); // '?'
    std::string name = read_ident(cur);
    if (name.empty()) cur.fail("expected variable name after '?'");
    return name;
}

// A pattern slot in rule syntax: ?var, <iri>, curie, number, or quoted literal.
inline TermOrVar read_term_or_var(TextCursor& cur, const PrefixMap& prefixes) {
    if (cur.peek() == '?') return TermOrVar::var(read_var_name(cur));
    if (number_start(cur)) return TermOrVar::ground(read_number(cur));
    return TermOrVar::ground(read_term(cur, prefixes));
}

struct RuleValidation {
    // Accumulates pattern-bound variables in body order and checks the
    // safety conditions as atoms arrive.
    std::set<std::string> bound;

    void note_pattern(const TriplePattern& p) {
        for (const TermOrVar* t : {&p.subject, &p.predicate, &p.object}) {
            if (t->is_var()) bound.insert(t->var_name());
        }
    }

    void check_builtin(const BuiltinAtom& b, const std::string& rule, TextCursor& cur, int line, int col) {
        for (const TermOrVar& a : b.args) {
            if (a.is_var() && !bound.contains(a.var_name())) {
                TextCursor::fail_at("rule '" + rule + "': builtin argument ?" + a.var_name() +
                                        " is not bound by an earlier pattern",
                                    line, col);
            }
        }
        (void)cur;
    }

    void check_head(const std::vector<TriplePattern>& head, const std::string& rule, int line, int col) {
        for (const TriplePattern& p : head) {
            for (const TermOrVar* t : {&p.subject, &p.predicate, &p.object}) {
                if (t->is_var() && !bound.contains(t->var_name())) {
                    TextCursor::fail_at("rule '" + rule + "': head variable ?" + t->var_name() +
                                            " does not appear in the body (range restriction)",
                                        line, col);
                }
            }
        }
    }
};

} // namespace detail

// Parses a rule file: a `@prefix` preamble followed by
// `[name: atoms -> atoms]` blocks; '#' starts a comment. Rules come back
// in file order. Syntax and safety violations raise ParseError.
inline std::vector<Rule> parse_rules(std::string_view text) {
    detail::TextCursor cur(text);
    PrefixMap prefixes = PrefixMap::with_defaults();
    std::vector<Rule> rules;

    while (true) {
        cur.skip_ws_and_comments();
        if (cur.eof()) break;
        if (cur.peek() == '@') {
            const int line = cur.line(), col = cur.col();
            cur.advance();
            if (detail::read_ident(cur) != "prefix") {
                detail::TextCursor::fail_at("unknown directive", line, col);
            }
            cur.skip_ws_and_comments();
            std::string label = detail::read_pname(cur);
            if (label.empty() || label.back() != ':') cur.fail("expected 'label:' after @prefix");
            label.pop_back();
            cur.skip_ws_and_comments();
            if (cur.peek() != '<') cur.fail("expected <namespace IRI> in @prefix");
            std::string ns = detail::read_iri_ref(cur);
            cur.skip_ws_and_comments();
            if (cur.peek() != '.') cur.fail("missing '.' after @prefix directive");
            cur.advance();
            prefixes.set(std::move(label), std::move(ns));
            continue;
        }
        if (cur.peek() != '[') cur.fail("expected '[' to open a rule");
        const int rule_line = cur.line(), rule_col = cur.col();
        cur.advance();
        cur.skip_ws_and_comments();
        Rule rule;
        rule.name = detail::read_ident(cur);
        if (rule.name.empty()) cur.fail("expected rule name");
        cur.skip_ws_and_comments();
        if (cur.peek() != ':') cur.fail("expected ':' after rule name");
        cur.advance();

        detail::RuleValidation check;
        bool in_head = false;
        std::size_t body_patterns = 0;
        while (true) {
            cur.skip_ws_and_comments();
            if (cur.eof()) detail::TextCursor::fail_at("unterminated rule '" + rule.name + "'", rule_line, rule_col);
            if (cur.peek() == ']') {
                cur.advance();
                break;
            }
            if (cur.peek() == '-' && cur.peek_at(1) == '>') {
                if (in_head) cur.fail("rule '" + rule.name + "': duplicate '->'");
                cur.advance();
                cur.advance();
                in_head = true;
                continue;
            }
            const int atom_line = cur.line(), atom_col = cur.col();
            if (cur.peek() == '(') {
                cur.advance();
                cur.skip_ws_and_comments();
                TermOrVar s = detail::read_term_or_var(cur, prefixes);
                cur.skip_ws_and_comments();
                TermOrVar p = detail::read_term_or_var(cur, prefixes);
                cur.skip_ws_and_comments();
                TermOrVar o = detail::read_term_or_var(cur, prefixes);
                cur.skip_ws_and_comments();
                if (cur.peek() != ')') cur.fail("expected ')' to close a pattern atom");
                cur.advance();
                TriplePattern pat{std::move(s), std::move(p), std::move(o)};
                if (in_head) {
                    rule.head.push_back(std::move(pat));
                } else {
                    check.note_pattern(pat);
                    ++body_patterns;
                    rule.body.emplace_back(std::move(pat));
                }
                continue;
            }
            std::string name = detail::read_ident(cur);
            if (name.empty()) cur.fail("expected an atom");
            if (in_head) {
                detail::TextCursor::fail_at("rule '" + rule.name + "': head atoms must be patterns",
                                            atom_line, atom_col);
            }
            auto kind = builtin_from_name(name);
            if (!kind) {
                detail::TextCursor::fail_at("rule '" + rule.name + "': unknown builtin: " + name,
                                            atom_line, atom_col);
            }
            cur.skip_ws_and_comments();
            if (cur.peek() != '(') cur.fail("expected '(' after builtin name");
            cur.advance();
            std::vector<TermOrVar> args;
            while (true) {
                cur.skip_ws_and_comments();
                args.push_back(detail::read_term_or_var(cur, prefixes));
                cur.skip_ws_and_comments();
                if (cur.peek() == ',') {
                    cur.advance();
                    continue;
                }
                if (cur.peek() == ')') {
                    cur.advance();
                    break;
                }
                cur.fail("expected ',' or ')' in builtin arguments");
            }
            if (args.size() != 2) {
                detail::TextCursor::fail_at("rule '" + rule.name + "': builtin " + name +
                                                " takes exactly 2 arguments, got " +
                                                std::to_string(args.size()),
                                            atom_line, atom_col);
            }
            BuiltinAtom atom{*kind, {std::move(args[0]), std::move(args[1])}};
            check.check_builtin(atom, rule.name, cur, atom_line, atom_col);
            rule.body.emplace_back(std::move(atom));
        }
        if (rule.body.empty()) {
            detail::TextCursor::fail_at("rule '" + rule.name + "': empty body", rule_line, rule_col);
        }
        if (body_patterns == 0) {
            detail::TextCursor::fail_at("rule '" + rule.name + "': body needs at least one pattern atom",
                                        rule_line, rule_col);
        }
        if (rule.head.empty()) {
            detail::TextCursor::fail_at("rule '" + rule.name + "': empty head", rule_line, rule_col);
        }
        check.check_head(rule.head, rule.name, rule_line, rule_col);
        rules.push_back(std::move(rule));
    }
    return rules;
}

struct Derivation {
    Triple triple;
    std::string rule;
    Bindings bindings;
};

namespace detail {

inline const Term* bound_term(const TermOrVar& tv, const Bindings& env) {
    if (!tv.is_var()) return &tv.term();
    auto it = env.find(tv.var_name());
    return it == env.end() ? nullptr : &it->second;
}

inline bool eval_builtin(const BuiltinAtom& atom, const Bindings& env, const std::string& rule_name) {
    double v[2];
    for (int i = 0; i < 2; ++i) {
        const Term* t = bound_term(atom.args[i], env);
        if (!t) {
            throw EvalError("rule '" + rule_name + "': builtin " + std::string(builtin_name(atom.kind)) +
                            ": unbound argument ?" + atom.args[i].var_name());
        }
        auto num = numeric_value(*t);
        if (!num) {
            throw EvalError("rule '" + rule_name + "': builtin " + std::string(builtin_name(atom.kind)) +
                            ": non-numeric argument " + to_ntriples(*t));
        }
        v[i] = *num;
    }
    switch (atom.kind) {
        case BuiltinKind::GreaterThan: return v[0] > v[1];
        case BuiltinKind::LessThan: return v[0] < v[1];
        case BuiltinKind::Equal: return v[0] == v[1];
        case BuiltinKind::NotEqual: return v[0] != v[1];
    }
    return false;
}

// Matches `pattern` against graph triples, extending `env` once per hit.
template <typename F>
inline void match_pattern(const Graph& g, const TriplePattern& pattern, const Bindings& env, F&& emit) {
    const Term* s = bound_term(pattern.subject, env);
    const Term* p = bound_term(pattern.predicate, env);
    const Term* o = bound_term(pattern.object, env);
    g.scan(s, p, o, [&](const Triple& t) {
        Bindings extended = env;
        auto bind = [&extended](const TermOrVar& tv, const Term& value) {
            if (!tv.is_var()) return true;
            auto [it, inserted] = extended.emplace(tv.var_name(), value);
            return inserted || it->second == value;
        };
        if (!bind(pattern.subject, t.subject())) return;
        if (!bind(pattern.predicate, t.predicate())) return;
        if (!bind(pattern.object, t.object())) return;
        emit(std::move(extended));
    });
}

// Head instantiations that would violate triple positional rules (a
// literal flowing into subject position, a non-IRI into predicate) are
// skipped: they denote nothing representable in the data model.
inline std::optional<Triple> instantiate_head(const TriplePattern& p, const Bindings& env) {
    const Term* s = bound_term(p.subject, env);
    const Term* pr = bound_term(p.predicate, env);
    const Term* o = bound_term(p.object, env);
    if (!s || !pr || !o) return std::nullopt; // unreachable under range restriction
    if (s->is_literal() || !pr->is_iri()) return std::nullopt;
    return Triple(*s, *pr, *o);
}

// Joins rule body atoms left to right. The pattern at body position
// `delta_pos` matches the delta graph, every other pattern matches the
// full closure; builtins prune as soon as their arguments are bound.
template <typename F>
inline void join_rule(const Rule& rule, const Graph& closure, const Graph& delta,
                      std::size_t delta_pos, std::size_t atom_index, std::size_t pattern_index,
                      const Bindings& env, F&& fire) {
    if (atom_index == rule.body.size()) {
        fire(env);
        return;
    }
    const RuleAtom& atom = rule.body[atom_index];
    if (const auto* builtin = std::get_if<BuiltinAtom>(&atom)) {
        if (eval_builtin(*builtin, env, rule.name)) {
            join_rule(rule, closure, delta, delta_pos, atom_index + 1, pattern_index, env, fire);
        }
        return;
    }
    const auto& pattern = std::get<TriplePattern>(atom);
    const Graph& source = pattern_index == delta_pos ? delta : closure;
    match_pattern(source, pattern, env, [&](Bindings extended) {
        join_rule(rule, closure, delta, delta_pos, atom_index + 1, pattern_index + 1, extended, fire);
    });
}

inline std::size_t count_patterns(const Rule& rule) {
    std::size_t n = 0;
    for (const RuleAtom& atom : rule.body) {
        if (std::holds_alternative<TriplePattern>(atom)) ++n;
    }
    return n;
}

struct InferenceRun {
    Graph closure;
    std::vector<Derivation> derivations;
};

// Semi-naive fixpoint: round one sees the whole input as new; later
// rounds require each rule instance to touch at least one triple derived
// in the previous round. New triples become visible at round boundaries,
// which makes the derivation log independent of rule interleaving inside
// a round.
inline InferenceRun run_inference(const Graph& input, const std::vector<Rule>& rules) {
    InferenceRun run{input, {}};
    Graph delta = input;
    while (!delta.empty()) {
        Graph next_delta;
        std::vector<Derivation> round;
        for (const Rule& rule : rules) {
            const std::size_t patterns = count_patterns(rule);
            for (std::size_t delta_pos = 0; delta_pos < patterns; ++delta_pos) {
                join_rule(rule, run.closure, delta, delta_pos, 0, 0, Bindings{},
                          [&](const Bindings& env) {
                              for (const TriplePattern& hp : rule.head) {
                                  auto triple = instantiate_head(hp, env);
                                  if (!triple) continue;
                                  if (run.closure.contains(*triple) || next_delta.contains(*triple)) continue;
                                  next_delta.insert(*triple);
                                  round.push_back(Derivation{*triple, rule.name, env});
                              }
                          });
            }
        }
        for (const Triple& t : next_delta.triples()) run.closure.insert(t);
        run.derivations.insert(run.derivations.end(), round.begin(), round.end());
        delta = std::move(next_delta);
    }
    return run;
}

} // namespace detail

// Least fixpoint closure of `graph` under `rules`. Monotone, idempotent,
// and independent of rule order as a triple set.
inline Graph infer(const Graph& graph, const std::vector<Rule>& rules) {
    return detail::run_inference(graph, rules).closure;
}

// Every derived (non-input) triple paired with the rule instance that
// first produced it, in derivation order.
inline std::vector<Derivation> explain(const Graph& graph, const std::vector<Rule>& rules) {
    return detail::run_inference(graph, rules).derivations;
}

} // namespace swot
