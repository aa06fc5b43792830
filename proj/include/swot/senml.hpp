#pragma once

#include <charconv>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "swot/detail/sha256.hpp"
#include "swot/error.hpp"
#include "swot/rdf.hpp"

// SenML measurement parsing and semantic annotation: each numeric sensor
// record becomes one RDF observation node typed by a sensor class from
// the annotation mapping.

namespace swot {

namespace m3 {

inline constexpr std::string_view ns = "http://swot-forge.local/m3#";
inline constexpr std::string_view has_value = "http://swot-forge.local/m3#hasValue";
inline constexpr std::string_view has_unit = "http://swot-forge.local/m3#hasUnit";
inline constexpr std::string_view has_datetime_value = "http://swot-forge.local/m3#hasDateTimeValue";
inline constexpr std::string_view suggests = "http://swot-forge.local/m3#suggests";

} // namespace m3

struct SenMLRecord {
    std::string name; // fully resolved (base name prepended)
    std::string unit;
    double value = 0.0;
    std::optional<std::int64_t> time; // seconds since epoch, base time applied
};

struct SenMLPack {
    std::optional<std::string> base_name;
    std::optional<std::int64_t> base_time;
    std::optional<std::string> base_unit;
    std::vector<SenMLRecord> records;
};

// Shortest lexical form that round-trips through a double; "37", "38.2".
inline std::string canonical_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::int64_t integer_field(const nlohmann::json& v, std::size_t record, const char* key) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number_float()) {
        double d = v.get<double>();
        auto i = static_cast<std::int64_t>(d);
        if (static_cast<double>(i) == d) return i;
    }
    throw std::runtime_error("record " + std::to_string(record) + ": '" + key +
                             "' must be an integer");
}

} // namespace detail

// Parses the JSON representation of SenML: an array of record objects
// with keys bn/bt/bu (bases) and n/u/v/t. Base fields apply to their own
// record and everything after it; records come back fully resolved.
// String and boolean values (vs/vb) are rejected, the pipeline is
// numeric-sensor-driven.
inline SenMLPack parse_senml(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // recover line/col from the byte offset for a uniform error shape
        int line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(std::string("senml: ") + e.what(), line, col);
    }
    if (!doc.is_array()) throw std::runtime_error("senml document must be a JSON array");
    if (doc.empty()) throw std::runtime_error("empty pack");

    SenMLPack pack;
    std::string base_name;
    std::string base_unit;
    std::optional<std::int64_t> base_time;
    std::size_t index = 0;
    for (const auto& rec : doc) {
        if (!rec.is_object()) {
            throw std::runtime_error("record " + std::to_string(index) + ": not a JSON object");
        }
        if (rec.contains("vs") || rec.contains("vb")) {
            throw std::runtime_error("record " + std::to_string(index) +
                                     ": string/boolean values are not supported");
        }
        if (rec.contains("bn")) {
            base_name = rec.at("bn").get<std::string>();
            if (!pack.base_name) pack.base_name = base_name;
        }
        if (rec.contains("bu")) {
            base_unit = rec.at("bu").get<std::string>();
            if (!pack.base_unit) pack.base_unit = base_unit;
        }
        if (rec.contains("bt")) {
            base_time = detail::integer_field(rec.at("bt"), index, "bt");
            if (!pack.base_time) pack.base_time = base_time;
        }

        SenMLRecord out;
        out.name = base_name + (rec.contains("n") ? rec.at("n").get<std::string>() : "");
        if (out.name.empty()) {
            throw std::runtime_error("record " + std::to_string(index) + ": no resolvable name");
        }
        out.unit = rec.contains("u") ? rec.at("u").get<std::string>() : base_unit;
        if (out.unit.empty()) {
            throw std::runtime_error("record " + std::to_string(index) + ": no unit");
        }
        if (!rec.contains("v") || !rec.at("v").is_number()) {
            throw std::runtime_error("record " + std::to_string(index) + ": missing numeric value 'v'");
        }
        out.value = rec.at("v").get<double>();
        if (rec.contains("t")) {
            out.time = (base_time ? *base_time : 0) + detail::integer_field(rec.at("t"), index, "t");
        } else if (base_time) {
            out.time = *base_time;
        }
        pack.records.push_back(std::move(out));
        ++index;
    }
    return pack;
}

// Measurement-name -> sensor class and SenML unit -> unit IRI tables.
// Keys are case-insensitive.
class AnnotationMapping {
public:
    AnnotationMapping() = default;
    explicit AnnotationMapping(std::string domain_tag) : domain_tag_(std::move(domain_tag)) {}

    void add_name(std::string_view key, std::string class_iri) {
        name_to_class_[detail::to_lower(key)] = std::move(class_iri);
    }
    void add_unit(std::string_view key, std::string unit_iri) {
        unit_to_iri_[detail::to_lower(key)] = std::move(unit_iri);
    }

    std::optional<std::string> class_for(std::string_view name) const {
        auto it = name_to_class_.find(detail::to_lower(name));
        if (it == name_to_class_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<std::string> unit_iri(std::string_view unit) const {
        auto it = unit_to_iri_.find(detail::to_lower(unit));
        if (it == unit_to_iri_.end()) return std::nullopt;
        return it->second;
    }

    const std::string& domain_tag() const noexcept { return domain_tag_; }
    std::size_t name_count() const noexcept { return name_to_class_.size(); }
    std::size_t unit_count() const noexcept { return unit_to_iri_.size(); }

private:
    std::string domain_tag_;
    std::map<std::string, std::string> name_to_class_;
    std::map<std::string, std::string> unit_to_iri_;
};

// The shipped table: health plus weather entries so cross-domain demos
// work without a registry. Registries usually override this with their
// own mappings.tsv.
inline AnnotationMapping default_mapping() {
    AnnotationMapping m("default");
    const std::string ns(m3::ns);
    m.add_name("bodyTemperature", ns + "BodyThermometer");
    m.add_name("temperature", ns + "Thermometer");
    m.add_name("humidity", ns + "Hygrometer");
    m.add_name("precipitation", ns + "RainGauge");
    m.add_name("windSpeed", ns + "Anemometer");
    m.add_unit("Cel", ns + "DegreeCelsius");
    m.add_unit("K", ns + "Kelvin");
    m.add_unit("%RH", ns + "Percent");
    m.add_unit("mm", ns + "Millimetre");
    m.add_unit("m/s", ns + "MetrePerSecond");
    return m;
}

// Loads a mappings.tsv table: three tab-separated columns
// (kind ∈ {name, unit}, key, absolute IRI), '#' comments.
inline AnnotationMapping parse_mappings(std::string_view text, std::string domain_tag) {
    AnnotationMapping m(std::move(domain_tag));
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto eol = text.find('\n', pos);
        std::string_view line =
            text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        auto t1 = line.find('\t');
        auto t2 = t1 == std::string_view::npos ? std::string_view::npos : line.find('\t', t1 + 1);
        if (t2 == std::string_view::npos) {
            throw ParseError("mappings line needs 3 tab-separated columns", line_no, 1);
        }
        std::string_view kind = line.substr(0, t1);
        std::string_view key = line.substr(t1 + 1, t2 - t1 - 1);
        std::string_view iri = line.substr(t2 + 1);
        if (key.empty()) throw ParseError("empty mapping key", line_no, static_cast<int>(t1) + 2);
        if (iri.find("://") == std::string_view::npos && iri.find("urn:") != 0) {
            throw ParseError("mapping IRI must be absolute: '" + std::string(iri) + "'", line_no,
                             static_cast<int>(t2) + 2);
        }
        if (kind == "name") {
            m.add_name(key, std::string(iri));
        } else if (kind == "unit") {
            m.add_unit(key, std::string(iri));
        } else {
            throw ParseError("mapping kind must be 'name' or 'unit', got '" + std::string(kind) + "'",
                             line_no, 1);
        }
    }
    return m;
}

// Deterministic observation IRI: a 64-bit SHA-256 prefix of the
// record's identity (resolved name, canonical value, time, index).
inline std::string mint_observation_iri(const SenMLRecord& rec, std::size_t index) {
    std::string key = rec.name + "|" + canonical_double(rec.value) + "|" +
                      (rec.time ? std::to_string(*rec.time) : "") + "|" + std::to_string(index);
    return "urn:swot:obs:" + detail::sha256_hex(key).substr(0, 16);
}

// Emits per record: rdf:type, m3:hasValue (xsd:double), m3:hasUnit, and
// m3:hasDateTimeValue (xsd:integer) when the record carries a time.
// Output is a pure function of the inputs.
inline Graph annotate(const SenMLPack& pack, const AnnotationMapping& mapping) {
    Graph g;
    const Term rdf_type = Term::iri(std::string(vocab::rdf_type));
    const Term has_value = Term::iri(std::string(m3::has_value));
    const Term has_unit = Term::iri(std::string(m3::has_unit));
    const Term has_time = Term::iri(std::string(m3::has_datetime_value));
    std::size_t index = 0;
    for (const SenMLRecord& rec : pack.records) {
        auto class_iri = mapping.class_for(rec.name);
        if (!class_iri) {
            throw std::runtime_error("unmapped measurement name: " + rec.name + " (record " +
                                     std::to_string(index) + ")");
        }
        auto unit_iri = mapping.unit_iri(rec.unit);
        if (!unit_iri) throw std::runtime_error("unmapped unit: " + rec.unit);
        Term obs = Term::iri(mint_observation_iri(rec, index));
        g.insert(Triple(obs, rdf_type, Term::iri(*class_iri)));
        g.insert(Triple(obs, has_value, Term::literal(canonical_double(rec.value), vocab::xsd_double)));
        g.insert(Triple(obs, has_unit, Term::iri(*unit_iri)));
        if (rec.time) {
            g.insert(Triple(obs, has_time, Term::literal(std::to_string(*rec.time), vocab::xsd_integer)));
        }
        ++index;
    }
    return g;
}

} // namespace swot
