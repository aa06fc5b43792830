#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "swot/error.hpp"
#include "swot/ntriples.hpp"
#include "swot/rules.hpp"
#include "swot/senml.hpp"
#include "swot/sparql.hpp"

// The local template catalogue: a registry root directory holds a
// registry.manifest plus the ontology/dataset/rule/query files each
// template references. Searching is by sensor tags and domain;
// materializing a template parses and merges everything it references.

namespace swot {

struct Template {
    std::string id;
    std::string title;
    std::string description;
    std::vector<std::string> sensors;
    std::vector<std::string> domains;
    std::vector<std::string> ontology_paths;
    std::vector<std::string> dataset_paths;
    std::vector<std::string> rule_paths;
    std::vector<std::string> query_paths;
};

class Registry {
public:
    Registry() = default;
    Registry(std::filesystem::path root, std::vector<Template> templates)
        : root_(std::move(root)), templates_(std::move(templates)) {
        for (const Template& t : templates_) {
            by_id_.emplace(t.id, &t);
            for (const std::string& s : t.sensors) by_sensor_[s].push_back(&t);
            for (const std::string& d : t.domains) by_domain_[d].push_back(&t);
        }
    }

    Registry(const Registry&) = delete;
    Registry& operator=(const Registry&) = delete;
    Registry(Registry&&) = default;
    Registry& operator=(Registry&&) = default;

    const std::filesystem::path& root() const noexcept { return root_; }
    const std::vector<Template>& templates() const noexcept { return templates_; }

    const Template* find(const std::string& id) const {
        auto it = by_id_.find(id);
        return it == by_id_.end() ? nullptr : it->second;
    }

    const std::vector<const Template*>* with_domain(const std::string& domain) const {
        auto it = by_domain_.find(domain);
        return it == by_domain_.end() ? nullptr : &it->second;
    }

private:
    std::filesystem::path root_;
    std::vector<Template> templates_;
    std::map<std::string, const Template*> by_id_;
    std::map<std::string, std::vector<const Template*>> by_sensor_;
    std::map<std::string, std::vector<const Template*>> by_domain_;
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        auto comma = value.find(',', pos);
        std::string_view item =
            value.substr(pos, comma == std::string_view::npos ? value.size() - pos : comma - pos);
        pos = comma == std::string_view::npos ? value.size() + 1 : comma + 1;
        std::size_t b = item.find_first_not_of(" \t");
        if (b == std::string_view::npos) continue;
        std::size_t e = item.find_last_not_of(" \t");
        out.emplace_back(item.substr(b, e - b + 1));
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

// Loads registry.manifest from the root directory. The manifest is a
// flat text file: one `[template]` block per template, `key = value`
// lines inside it, lists comma-separated, '#' comments. Referenced files
// are checked for existence here; they are parsed lazily by materialize.
inline Registry load_registry(const std::filesystem::path& root) {
    const std::filesystem::path manifest_path = root / "registry.manifest";
    if (!std::filesystem::exists(manifest_path)) {
        throw std::runtime_error("missing manifest: " + manifest_path.string());
    }
    std::string text = detail::read_file(manifest_path);

    std::vector<Template> templates;
    std::set<std::string> ids;
    Template current;
    bool open = false;
    int line_no = 0;

    auto flush = [&](int at_line) {
        if (!open) return;
        if (current.id.empty()) throw ParseError("template block without id", at_line, 1);
        if (!ids.insert(current.id).second) {
            throw ParseError("duplicate id: " + current.id, at_line, 1);
        }
        templates.push_back(std::move(current));
        current = Template{};
    };

    std::istringstream lines{text};
    std::string raw;
    while (std::getline(lines, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        std::size_t b = line.find_first_not_of(" \t");
        if (b == std::string_view::npos) continue;
        line = line.substr(b);
        if (line.front() == '#') continue;
        if (line == "[template]") {
            flush(line_no);
            open = true;
            continue;
        }
        if (line.front() == '[') throw ParseError("unknown section " + std::string(line), line_no, 1);
        if (!open) throw ParseError("key outside a [template] block", line_no, 1);
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no, 1);
        std::string key(line.substr(0, eq));
        key.erase(key.find_last_not_of(" \t") + 1);
        std::string_view value = line.substr(eq + 1);
        std::size_t vb = value.find_first_not_of(" \t");
        value = vb == std::string_view::npos ? std::string_view{} : value.substr(vb);
        std::string val(value);
        if (!val.empty()) val.erase(val.find_last_not_of(" \t") + 1);

        if (key == "id") current.id = val;
        else if (key == "title") current.title = val;
        else if (key == "description") current.description = val;
        else if (key == "sensors") current.sensors = detail::split_list(val);
        else if (key == "domains") current.domains = detail::split_list(val);
        else if (key == "ontologies") current.ontology_paths = detail::split_list(val);
        else if (key == "datasets") current.dataset_paths = detail::split_list(val);
        else if (key == "rules") current.rule_paths = detail::split_list(val);
        else if (key == "queries") current.query_paths = detail::split_list(val);
        else throw ParseError("unknown manifest key '" + key + "'", line_no, 1);
    }
    flush(line_no + 1);

    for (const Template& t : templates) {
        for (const auto* paths :
             {&t.ontology_paths, &t.dataset_paths, &t.rule_paths, &t.query_paths}) {
            for (const std::string& rel : *paths) {
                if (!std::filesystem::exists(root / rel)) {
                    throw std::runtime_error("template '" + t.id + "' references missing file: " + rel);
                }
            }
        }
    }
    return Registry(root, std::move(templates));
}

// Templates whose sensor set intersects the requested sensors and whose
// domain set contains the requested domain, ordered by descending
// sensor-overlap count, then id. Both inputs are required.
inline std::vector<Template> find_templates(const Registry& registry,
                                            const std::vector<std::string>& sensors,
                                            const std::string& domain) {
    if (sensors.empty()) throw std::runtime_error("no sensors given");
    if (domain.empty()) throw std::runtime_error("no domain given");
    std::set<std::string> wanted(sensors.begin(), sensors.end());

    std::vector<std::pair<std::size_t, const Template*>> hits;
    const auto* in_domain = registry.with_domain(domain);
    if (!in_domain) return {};
    for (const Template* t : *in_domain) {
        std::size_t overlap = 0;
        for (const std::string& s : t->sensors) {
            if (wanted.contains(s)) ++overlap;
        }
        if (overlap > 0) hits.emplace_back(overlap, t);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second->id < b.second->id;
    });
    std::vector<Template> out;
    out.reserve(hits.size());
    for (const auto& [overlap, t] : hits) out.push_back(*t);
    return out;
}

struct NamedQuery {
    std::string id; // file stem
    Query query;
};

struct TemplateBundle {
    Template tmpl;
    Graph ontology; // merged ontology graphs
    Graph dataset;  // merged dataset graphs
    std::vector<Rule> rules;
    std::vector<NamedQuery> queries;
    AnnotationMapping mapping;
};

// Parses and merges every file the template references. Any failure is
// reported with the path of the offending file.
inline TemplateBundle materialize(const Registry& registry, const std::string& id) {
    const Template* tmpl = registry.find(id);
    if (!tmpl) throw std::runtime_error("unknown template: " + id);

    auto load = [&registry](const std::string& rel, auto&& parse) {
        const std::filesystem::path path = registry.root() / rel;
        try {
            return parse(detail::read_file(path));
        } catch (const std::exception& e) {
            throw std::runtime_error(rel + ": " + e.what());
        }
    };

    TemplateBundle bundle{*tmpl, Graph{}, Graph{}, {}, {}, AnnotationMapping{}};
    for (const std::string& rel : tmpl->ontology_paths) {
        Graph g = load(rel, [](const std::string& text) { return parse_ntriples(text).graph; });
        bundle.ontology = merge(std::move(bundle.ontology), {&g});
    }
    for (const std::string& rel : tmpl->dataset_paths) {
        Graph g = load(rel, [](const std::string& text) { return parse_ntriples(text).graph; });
        bundle.dataset = merge(std::move(bundle.dataset), {&g});
    }
    for (const std::string& rel : tmpl->rule_paths) {
        auto rules = load(rel, [](const std::string& text) { return parse_rules(text); });
        bundle.rules.insert(bundle.rules.end(), rules.begin(), rules.end());
    }
    for (const std::string& rel : tmpl->query_paths) {
        NamedQuery nq{std::filesystem::path(rel).stem().string(),
                      load(rel, [](const std::string& text) { return parse_query(text); })};
        bundle.queries.push_back(std::move(nq));
    }

    const std::filesystem::path mappings_path = registry.root() / "mappings.tsv";
    if (std::filesystem::exists(mappings_path)) {
        try {
            bundle.mapping = parse_mappings(detail::read_file(mappings_path),
                                            tmpl->domains.empty() ? id : tmpl->domains.front());
        } catch (const std::exception& e) {
            throw std::runtime_error("mappings.tsv: " + std::string(e.what()));
        }
    } else {
        bundle.mapping = default_mapping();
    }
    return bundle;
}

} // namespace swot
