#pragma once

#include <chrono>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "swot/error.hpp"
#include "swot/ntriples.hpp"
#include "swot/rdf.hpp"
#include "swot/registry.hpp"
#include "swot/rules.hpp"
#include "swot/senml.hpp"
#include "swot/sparql.hpp"

// End-to-end workflow: annotate SenML input, merge it with the
// template's ontology and dataset, close the merged graph under the
// template's rules, run the template's queries, and assemble a report.
// Every stage failure is tagged with the stage name.

namespace swot {

struct StageTimings {
    double annotate_ms = 0;
    double merge_ms = 0;
    double infer_ms = 0;
    double query_ms = 0;
    double total_ms = 0;
};

struct SuggestionRow {
    std::string query_id;
    std::map<std::string, std::string> bindings; // var -> N-Triples rendering
    std::optional<std::string> human_label;      // English label when present
};

struct PipelineReport {
    std::string template_id;
    std::size_t input_record_count = 0;
    std::size_t annotated_triple_count = 0;
    std::size_t derived_triple_count = 0;
    std::vector<SuggestionRow> suggestions;
    std::vector<std::pair<Triple, std::string>> derivations; // (triple, rule)
    StageTimings timings;
};

namespace detail {

inline double ms_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

inline std::string iri_local_name(std::string_view iri) {
    auto hash = iri.rfind('#');
    if (hash != std::string_view::npos && hash + 1 < iri.size()) return std::string(iri.substr(hash + 1));
    auto slash = iri.rfind('/');
    if (slash != std::string_view::npos && slash + 1 < iri.size()) return std::string(iri.substr(slash + 1));
    return std::string(iri);
}

// Human-readable rendering: the first English-tagged literal in select
// order wins, then the local name of the first IRI, then the first
// literal's lexical form.
inline std::optional<std::string> human_label_for(const SolutionTable& table,
                                                  const std::vector<std::optional<Term>>& row) {
    (void)table;
    for (const auto& cell : row) {
        if (cell && cell->is_literal() && lang_matches(cell->lang(), "en")) return cell->lexical();
    }
    for (const auto& cell : row) {
        if (cell && cell->is_iri()) return iri_local_name(cell->value());
    }
    for (const auto& cell : row) {
        if (cell && cell->is_literal()) return cell->lexical();
    }
    return std::nullopt;
}

template <typename F>
inline auto stage(const char* name, F&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

} // namespace detail

// Runs annotate -> merge -> infer -> query over one SenML document.
// Deterministic: identical bundle and input yield an identical report
// (timings aside).
inline PipelineReport run_pipeline(const TemplateBundle& bundle, std::string_view senml_text) {
    using clock = std::chrono::steady_clock;
    PipelineReport report;
    report.template_id = bundle.tmpl.id;
    const auto t0 = clock::now();

    Graph annotated = detail::stage("annotate", [&] {
        SenMLPack pack = parse_senml(senml_text);
        report.input_record_count = pack.records.size();
        return annotate(pack, bundle.mapping);
    });
    report.annotated_triple_count = annotated.size();
    report.timings.annotate_ms = detail::ms_since(t0);

    const auto t1 = clock::now();
    Graph merged = detail::stage("merge", [&] {
        return merge(Graph{}, {&bundle.ontology, &bundle.dataset, &annotated});
    });
    report.timings.merge_ms = detail::ms_since(t1);

    const auto t2 = clock::now();
    Graph closed = detail::stage("infer", [&] { return infer(merged, bundle.rules); });
    report.derived_triple_count = closed.size() - merged.size();
    auto derivations = detail::stage("infer", [&] { return explain(merged, bundle.rules); });
    for (const Derivation& d : derivations) report.derivations.emplace_back(d.triple, d.rule);
    report.timings.infer_ms = detail::ms_since(t2);

    const auto t3 = clock::now();
    detail::stage("query", [&] {
        for (const NamedQuery& nq : bundle.queries) {
            SolutionTable table = execute(nq.query, closed);
            for (const auto& row : table.rows) {
                SuggestionRow suggestion;
                suggestion.query_id = nq.id;
                for (std::size_t i = 0; i < table.header.size(); ++i) {
                    if (row[i]) suggestion.bindings[table.header[i]] = to_ntriples(*row[i]);
                }
                if (suggestion.bindings.empty()) continue;
                suggestion.human_label = detail::human_label_for(table, row);
                report.suggestions.push_back(std::move(suggestion));
            }
        }
        return 0;
    });
    report.timings.query_ms = detail::ms_since(t3);
    report.timings.total_ms = detail::ms_since(t0);
    return report;
}

// JSON rendering of a report. Timings are off by default so that the
// serialized form is byte-identical across runs on identical inputs;
// the service and the CLI both rely on that.
inline nlohmann::json report_to_json(const PipelineReport& report, bool include_timings = false) {
    nlohmann::json derivations = nlohmann::json::array();
    for (const auto& [triple, rule] : report.derivations) {
        derivations.push_back({{"rule", rule}, {"triple", to_ntriples(triple)}});
    }
    nlohmann::json suggestions = nlohmann::json::array();
    for (const SuggestionRow& s : report.suggestions) {
        nlohmann::json row{{"queryId", s.query_id}, {"bindings", s.bindings}};
        if (s.human_label) row["humanLabel"] = *s.human_label;
        suggestions.push_back(std::move(row));
    }
    nlohmann::json out{{"templateId", report.template_id},
                       {"inputRecordCount", report.input_record_count},
                       {"annotatedTripleCount", report.annotated_triple_count},
                       {"derivedTripleCount", report.derived_triple_count},
                       {"suggestions", std::move(suggestions)},
                       {"derivations", std::move(derivations)}};
    if (include_timings) {
        out["timings"] = {{"annotateMs", report.timings.annotate_ms},
                          {"mergeMs", report.timings.merge_ms},
                          {"inferMs", report.timings.infer_ms},
                          {"queryMs", report.timings.query_ms},
                          {"totalMs", report.timings.total_ms}};
    }
    return out;
}

// Plain-text rendering for terminal use.
inline std::string report_to_text(const PipelineReport& report) {
    std::string out;
    out += "template:          " + report.template_id + "\n";
    out += "input records:     " + std::to_string(report.input_record_count) + "\n";
    out += "annotated triples: " + std::to_string(report.annotated_triple_count) + "\n";
    out += "derived triples:   " + std::to_string(report.derived_triple_count) + "\n";
    out += "derivations:\n";
    for (const auto& [triple, rule] : report.derivations) {
        out += "  [" + rule + "] " + to_ntriples(triple) + "\n";
    }
    out += "suggestions:\n";
    if (report.suggestions.empty()) out += "  (none)\n";
    for (const SuggestionRow& s : report.suggestions) {
        out += "  - " + (s.human_label ? *s.human_label : "(unlabeled)") + "  [" + s.query_id + "]";
        for (const auto& [var, term] : s.bindings) out += " " + var + "=" + term;
        out += "\n";
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "timings: annotate %.3f ms, merge %.3f ms, infer %.3f ms, query %.3f ms, total %.3f ms\n",
                  report.timings.annotate_ms, report.timings.merge_ms, report.timings.infer_ms,
                  report.timings.query_ms, report.timings.total_ms);
    out += buf;
    return out;
}

// ---- benchmark harness -------------------------------------------------

// Naive fixpoint oracle: re-evaluates every rule against the whole graph
// by brute-force scans until nothing changes. Independent of the
// semi-naive engine and its indexes; the harness uses it to re-check
// closure correctness, and the test suite reuses it as the reference.
inline Graph naive_closure(const Graph& input, const std::vector<Rule>& rules) {
    Graph closure = input;
    auto term_of = [](const TermOrVar& tv, const Bindings& env) -> const Term* {
        if (!tv.is_var()) return &tv.term();
        auto it = env.find(tv.var_name());
        return it == env.end() ? nullptr : &it->second;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (const Rule& rule : rules) {
            std::vector<Bindings> envs{Bindings{}};
            for (const RuleAtom& atom : rule.body) {
                std::vector<Bindings> next;
                if (const auto* builtin = std::get_if<BuiltinAtom>(&atom)) {
                    for (const Bindings& env : envs) {
                        if (detail::eval_builtin(*builtin, env, rule.name)) next.push_back(env);
                    }
                } else {
                    const auto& pattern = std::get<TriplePattern>(atom);
                    for (const Bindings& env : envs) {
                        for (const Triple& t : closure.triples()) { // deliberate full scan
                            Bindings extended = env;
                            bool ok = true;
                            const std::pair<const TermOrVar*, const Term*> slots[3] = {
                                {&pattern.subject, &t.subject()},
                                {&pattern.predicate, &t.predicate()},
                                {&pattern.object, &t.object()}};
                            for (const auto& [tv, value] : slots) {
                                if (tv->is_var()) {
                                    auto [it, inserted] = extended.emplace(tv->var_name(), *value);
                                    if (!inserted && !(it->second == *value)) {
                                        ok = false;
                                        break;
                                    }
                                } else if (!(tv->term() == *value)) {
                                    ok = false;
                                    break;
                                }
                            }
                            if (ok) next.push_back(std::move(extended));
                        }
                    }
                }
                envs = std::move(next);
                if (envs.empty()) break;
            }
            for (const Bindings& env : envs) {
                for (const TriplePattern& hp : rule.head) {
                    const Term* s = term_of(hp.subject, env);
                    const Term* p = term_of(hp.predicate, env);
                    const Term* o = term_of(hp.object, env);
                    if (!s || !p || !o) continue;
                    if (s->is_literal() || !p->is_iri()) continue;
                    if (closure.insert(Triple(*s, *p, *o))) changed = true;
                }
            }
        }
    }
    return closure;
}

// Deterministic synthetic SenML pack: n body-temperature records with
// values cycling through 36.0..38.9 and increasing timestamps.
inline std::string synth_senml(std::size_t n) {
    nlohmann::json doc = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        doc.push_back({{"n", "bodyTemperature"},
                       {"u", "Cel"},
                       {"v", 36.0 + static_cast<double>(i % 30) * 0.1},
                       {"t", 1700000000 + static_cast<std::int64_t>(i)}});
    }
    return doc.dump();
}

// Cloned threshold rules over fresh head predicates, so each added rule
// does comparable work without interacting with the others.
inline std::vector<Rule> synth_rules(std::size_t count) {
    std::string text = "@prefix m3: <http://swot-forge.local/m3#> .\n";
    for (std::size_t k = 0; k < count; ++k) {
        const std::string suffix = std::to_string(k);
        text += "[bench" + suffix +
                ": (?m rdf:type m3:BodyThermometer) (?m m3:hasValue ?v) "
                "greaterThan(?v, 37.5) lessThan(?v, 39) -> "
                "(?m <urn:swot:bench:flag" + suffix + "> <urn:swot:bench:high>)]\n";
    }
    return parse_rules(text);
}

struct BenchRow {
    std::size_t size = 0;
    std::size_t rule_count = 0;
    double annotate_ms = 0;
    double merge_ms = 0;
    double infer_ms = 0;
    double query_ms = 0;
    std::size_t annotated_triples = 0;
    std::size_t derived_triples = 0;
    std::optional<bool> oracle_ok; // set when closure verification ran
};

struct BenchTable {
    std::vector<BenchRow> rows;

    std::string to_tsv() const {
        std::string out =
            "size\trules\tannotate_ms\tmerge_ms\tinfer_ms\tquery_ms\tannotated_triples\t"
            "derived_triples\toracle_ok\n";
        char buf[64];
        for (const BenchRow& r : rows) {
            out += std::to_string(r.size) + "\t" + std::to_string(r.rule_count);
            for (double ms : {r.annotate_ms, r.merge_ms, r.infer_ms, r.query_ms}) {
                std::snprintf(buf, sizeof(buf), "\t%.3f", ms);
                out += buf;
            }
            out += "\t" + std::to_string(r.annotated_triples) + "\t" +
                   std::to_string(r.derived_triples);
            out += "\t";
            out += r.oracle_ok ? (*r.oracle_ok ? "yes" : "NO") : "-";
            out += "\n";
        }
        return out;
    }
};

// Times each pipeline stage over the cross product of input sizes and
// rule counts, using synthetic packs and cloned threshold rules on top
// of the given bundle's graphs and queries. With verify_closure set, the
// semi-naive result of every row is re-checked against naive_closure.
inline BenchTable run_benchmark(const TemplateBundle& bundle, const std::vector<std::size_t>& sizes,
                                const std::vector<std::size_t>& rule_counts,
                                bool verify_closure = false) {
    if (sizes.empty()) throw std::runtime_error("bench: no sizes given");
    if (rule_counts.empty()) throw std::runtime_error("bench: no rule counts given");
    using clock = std::chrono::steady_clock;

    BenchTable table;
    for (std::size_t size : sizes) {
        const std::string senml = synth_senml(size);
        for (std::size_t rule_count : rule_counts) {
            std::vector<Rule> rules = synth_rules(rule_count);
            BenchRow row;
            row.size = size;
            row.rule_count = rule_count;

            auto t0 = clock::now();
            SenMLPack pack = parse_senml(senml);
            Graph annotated = annotate(pack, bundle.mapping);
            row.annotate_ms = detail::ms_since(t0);
            row.annotated_triples = annotated.size();

            auto t1 = clock::now();
            Graph merged = merge(Graph{}, {&bundle.ontology, &bundle.dataset, &annotated});
            row.merge_ms = detail::ms_since(t1);

            auto t2 = clock::now();
            Graph closed = infer(merged, rules);
            row.infer_ms = detail::ms_since(t2);
            row.derived_triples = closed.size() - merged.size();

            auto t3 = clock::now();
            for (const NamedQuery& nq : bundle.queries) execute(nq.query, closed);
            row.query_ms = detail::ms_since(t3);

            if (verify_closure) row.oracle_ok = same_triples(closed, naive_closure(merged, rules));
            table.rows.push_back(row);
        }
    }
    return table;
}

} // namespace swot
