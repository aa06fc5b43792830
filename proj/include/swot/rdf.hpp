#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

// RDF data model: terms, triples, an indexed in-memory graph, and prefix
// maps. Graphs are plain values: copy one to take a snapshot, hand copies
// to other threads freely. Const access is safe from many threads at once;
// mutation needs exclusive ownership, same as std::vector.

namespace swot {

namespace vocab {

inline constexpr std::string_view rdf_ns = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
inline constexpr std::string_view rdfs_ns = "http://www.w3.org/2000/01/rdf-schema#";
inline constexpr std::string_view xsd_ns = "http://www.w3.org/2001/XMLSchema#";

inline constexpr std::string_view rdf_type = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
inline constexpr std::string_view rdf_lang_string = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
inline constexpr std::string_view rdfs_label = "http://www.w3.org/2000/01/rdf-schema#label";
inline constexpr std::string_view rdfs_sub_class_of = "http://www.w3.org/2000/01/rdf-schema#subClassOf";

inline constexpr std::string_view xsd_string = "http://www.w3.org/2001/XMLSchema#string";
inline constexpr std::string_view xsd_boolean = "http://www.w3.org/2001/XMLSchema#boolean";
inline constexpr std::string_view xsd_double = "http://www.w3.org/2001/XMLSchema#double";
inline constexpr std::string_view xsd_float = "http://www.w3.org/2001/XMLSchema#float";
inline constexpr std::string_view xsd_decimal = "http://www.w3.org/2001/XMLSchema#decimal";
inline constexpr std::string_view xsd_integer = "http://www.w3.org/2001/XMLSchema#integer";
inline constexpr std::string_view xsd_int = "http://www.w3.org/2001/XMLSchema#int";
inline constexpr std::string_view xsd_long = "http://www.w3.org/2001/XMLSchema#long";

} // namespace vocab

namespace detail {

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline void hash_combine(std::size_t& seed, std::size_t v) {
    seed ^= v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
}

inline bool contains_whitespace(std::string_view s) {
    return s.find_first_of(" \t\r\n") != std::string_view::npos;
}

inline bool valid_lang_tag(std::string_view tag) {
    if (tag.empty() || !std::isalpha(static_cast<unsigned char>(tag.front()))) return false;
    for (char c : tag) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') return false;
    }
    return true;
}

} // namespace detail

// An RDF term: IRI, literal, or blank node. Terms compare structurally;
// language tags are case-insensitive and stored lowercased. A literal
// with a language tag always has datatype rdf:langString; one without
// always has an explicit datatype (xsd:string by default).
class Term {
public:
    enum class Kind : std::uint8_t { Iri, Literal, Blank };

    static Term iri(std::string value) {
        if (value.empty()) throw std::invalid_argument("empty IRI");
        if (detail::contains_whitespace(value)) {
            throw std::invalid_argument("IRI contains whitespace: <" + value + ">");
        }
        Term t;
        t.kind_ = Kind::Iri;
        t.text_ = std::move(value);
        return t;
    }

    static Term literal(std::string lexical, std::string_view datatype = vocab::xsd_string) {
        if (datatype.empty()) throw std::invalid_argument("literal with empty datatype");
        if (datatype == vocab::rdf_lang_string) {
            throw std::invalid_argument("rdf:langString literal requires a language tag");
        }
        Term t;
        t.kind_ = Kind::Literal;
        t.text_ = std::move(lexical);
        t.datatype_ = std::string(datatype);
        return t;
    }

    static Term lang_literal(std::string lexical, std::string_view lang) {
        if (!detail::valid_lang_tag(lang)) {
            throw std::invalid_argument("bad language tag: '" + std::string(lang) + "'");
        }
        Term t;
        t.kind_ = Kind::Literal;
        t.text_ = std::move(lexical);
        t.datatype_ = std::string(vocab::rdf_lang_string);
        t.lang_ = detail::to_lower(lang);
        return t;
    }

    static Term blank(std::string label) {
        if (label.empty()) throw std::invalid_argument("empty blank node label");
        Term t;
        t.kind_ = Kind::Blank;
        t.text_ = std::move(label);
        return t;
    }

    Kind kind() const noexcept { return kind_; }
    bool is_iri() const noexcept { return kind_ == Kind::Iri; }
    bool is_literal() const noexcept { return kind_ == Kind::Literal; }
    bool is_blank() const noexcept { return kind_ == Kind::Blank; }

    // IRI value or blank node label.
    const std::string& value() const noexcept { return text_; }
    // Literal lexical form.
    const std::string& lexical() const noexcept { return text_; }
    const std::string& datatype() const noexcept { return datatype_; }
    // Lowercased language tag; empty for anything but language literals.
    const std::string& lang() const noexcept { return lang_; }

    bool operator==(const Term& rhs) const noexcept {
        return kind_ == rhs.kind_ && text_ == rhs.text_ && datatype_ == rhs.datatype_ &&
               lang_ == rhs.lang_;
    }
    bool operator!=(const Term& rhs) const noexcept { return !(*this == rhs); }

    std::size_t hash() const noexcept {
        std::size_t h = static_cast<std::size_t>(kind_);
        detail::hash_combine(h, std::hash<std::string>{}(text_));
        detail::hash_combine(h, std::hash<std::string>{}(datatype_));
        detail::hash_combine(h, std::hash<std::string>{}(lang_));
        return h;
    }

private:
    Term() = default;

    Kind kind_ = Kind::Iri;
    std::string text_;     // IRI value, literal lexical form, or blank label
    std::string datatype_; // literals only
    std::string lang_;     // language literals only, lowercased
};

struct TermHash {
    std::size_t operator()(const Term& t) const noexcept { return t.hash(); }
};

// A single RDF statement. Construction enforces the positional rules:
// the subject is an IRI or blank node, the predicate an IRI.
class Triple {
public:
    Triple(Term subject, Term predicate, Term object)
        : s_(std::move(subject)), p_(std::move(predicate)), o_(std::move(object)) {
        if (s_.is_literal()) throw std::invalid_argument("triple subject must not be a literal");
        if (!p_.is_iri()) throw std::invalid_argument("triple predicate must be an IRI");
    }

    const Term& subject() const noexcept { return s_; }
    const Term& predicate() const noexcept { return p_; }
    const Term& object() const noexcept { return o_; }

    bool operator==(const Triple& rhs) const noexcept {
        return s_ == rhs.s_ && p_ == rhs.p_ && o_ == rhs.o_;
    }
    bool operator!=(const Triple& rhs) const noexcept { return !(*this == rhs); }

private:
    Term s_, p_, o_;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept {
        std::size_t h = t.subject().hash();
        detail::hash_combine(h, t.predicate().hash());
        detail::hash_combine(h, t.object().hash());
        return h;
    }
};

// An indexed set of triples. Insertion keeps set semantics; three
// permutation indexes (by subject, by predicate, by object) back pattern
// matching, which scans the smallest bucket among the bound positions.
// Triples are also kept in insertion order so downstream evaluation is
// deterministic.
class Graph {
public:
    Graph() = default;

    // Returns true iff the triple was not present before.
    bool insert(Triple t) {
        if (present_.contains(t)) return false;
        const auto idx = static_cast<std::uint32_t>(triples_.size());
        by_subject_[t.subject()].push_back(idx);
        by_predicate_[t.predicate()].push_back(idx);
        by_object_[t.object()].push_back(idx);
        present_.insert(t);
        triples_.push_back(std::move(t));
        return true;
    }

    bool contains(const Triple& t) const { return present_.contains(t); }

    std::size_t size() const noexcept { return triples_.size(); }
    bool empty() const noexcept { return triples_.empty(); }

    // Insertion-ordered view of the canonical set.
    const std::vector<Triple>& triples() const noexcept { return triples_; }

    // Calls fn(const Triple&) for every triple agreeing with each bound
    // position (nullptr = wildcard).
    template <typename F>
    void scan(const Term* s, const Term* p, const Term* o, F&& fn) const {
        const std::vector<std::uint32_t>* bucket = nullptr;
        if (s) {
            auto it = by_subject_.find(*s);
            if (it == by_subject_.end()) return;
            bucket = &it->second;
        }
        if (p) {
            auto it = by_predicate_.find(*p);
            if (it == by_predicate_.end()) return;
            if (!bucket || it->second.size() < bucket->size()) bucket = &it->second;
        }
        if (o) {
            auto it = by_object_.find(*o);
            if (it == by_object_.end()) return;
            if (!bucket || it->second.size() < bucket->size()) bucket = &it->second;
        }
        if (bucket) {
            for (std::uint32_t idx : *bucket) {
                const Triple& t = triples_[idx];
                if (s && t.subject() != *s) continue;
                if (p && t.predicate() != *p) continue;
                if (o && t.object() != *o) continue;
                fn(t);
            }
        } else {
            for (const Triple& t : triples_) fn(t);
        }
    }

    std::vector<Triple> match(const std::optional<Term>& s, const std::optional<Term>& p,
                              const std::optional<Term>& o) const {
        std::vector<Triple> out;
        scan(s ? &*s : nullptr, p ? &*p : nullptr, o ? &*o : nullptr,
             [&out](const Triple& t) { out.push_back(t); });
        return out;
    }

private:
    std::vector<Triple> triples_;
    std::unordered_set<Triple, TripleHash> present_;
    std::unordered_map<Term, std::vector<std::uint32_t>, TermHash> by_subject_;
    std::unordered_map<Term, std::vector<std::uint32_t>, TermHash> by_predicate_;
    std::unordered_map<Term, std::vector<std::uint32_t>, TermHash> by_object_;
};

inline bool same_triples(const Graph& a, const Graph& b) {
    if (a.size() != b.size()) return false;
    for (const Triple& t : a.triples()) {
        if (!b.contains(t)) return false;
    }
    return true;
}

// Prefix label -> namespace IRI. Expanding then compressing a CURIE with
// the same map is the identity whenever the prefix exists.
class PrefixMap {
public:
    PrefixMap() = default;

    // rdf, rdfs, and xsd are pre-declared in every parser; files may
    // override them with their own @prefix/PREFIX lines.
    static PrefixMap with_defaults() {
        PrefixMap m;
        m.set("rdf", std::string(vocab::rdf_ns));
        m.set("rdfs", std::string(vocab::rdfs_ns));
        m.set("xsd", std::string(vocab::xsd_ns));
        return m;
    }

    void set(std::string prefix, std::string ns) { map_[std::move(prefix)] = std::move(ns); }

    bool has(const std::string& prefix) const { return map_.contains(prefix); }

    std::optional<std::string> ns_for(const std::string& prefix) const {
        auto it = map_.find(prefix);
        if (it == map_.end()) return std::nullopt;
        return it->second;
    }

    // "p:local" -> full IRI; nullopt when the prefix is undeclared or the
    // input has no colon.
    std::optional<std::string> expand(std::string_view curie) const {
        auto colon = curie.find(':');
        if (colon == std::string_view::npos) return std::nullopt;
        auto it = map_.find(std::string(curie.substr(0, colon)));
        if (it == map_.end()) return std::nullopt;
        return it->second + std::string(curie.substr(colon + 1));
    }

    // Full IRI -> "p:local" using the longest matching namespace; ties
    // break on the lexicographically smallest prefix label.
    std::optional<std::string> compress(std::string_view iri) const {
        const std::string* best_prefix = nullptr;
        std::size_t best_len = 0;
        for (const auto& [prefix, ns] : map_) {
            if (ns.size() > best_len && iri.starts_with(ns)) {
                best_prefix = &prefix;
                best_len = ns.size();
            }
        }
        if (!best_prefix) return std::nullopt;
        return *best_prefix + ":" + std::string(iri.substr(best_len));
    }

    const std::map<std::string, std::string>& entries() const noexcept { return map_; }

private:
    std::map<std::string, std::string> map_;
};

// Union with set semantics. Blank nodes of each source are relabeled
// with a fresh "src{i}_" prefix before insertion so labels from distinct
// documents never collide; the counter starts past any src{k}_ label the
// target already carries, which keeps repeated merges collision-free.
inline Graph merge(Graph target, std::span<const Graph* const> sources) {
    std::size_t counter = 1;
    for (const Triple& t : target.triples()) {
        for (const Term* term : {&t.subject(), &t.object()}) {
            if (!term->is_blank()) continue;
            const std::string& label = term->value();
            if (!label.starts_with("src")) continue;
            std::size_t i = 3;
            while (i < label.size() && std::isdigit(static_cast<unsigned char>(label[i]))) ++i;
            if (i > 3 && i < label.size() && label[i] == '_') {
                counter = std::max(counter, std::stoull(label.substr(3, i - 3)) + 1);
            }
        }
    }
    for (const Graph* src : sources) {
        const std::string prefix = "src" + std::to_string(counter++) + "_";
        auto relabel = [&prefix](const Term& t) {
            return t.is_blank() ? Term::blank(prefix + t.value()) : t;
        };
        for (const Triple& t : src->triples()) {
            target.insert(Triple(relabel(t.subject()), t.predicate(), relabel(t.object())));
        }
    }
    return target;
}

inline Graph merge(Graph target, std::initializer_list<const Graph*> sources) {
    return merge(std::move(target), std::span<const Graph* const>(sources.begin(), sources.size()));
}

} // namespace swot
