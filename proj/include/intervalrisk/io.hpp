#pragma once

// Study-config JSON and response-record CSV/JSONL serialization.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "intervalrisk/domain.hpp"

namespace intervalrisk {

using json = nlohmann::json;

inline constexpr std::string_view kCsvHeader =
    "expert_id,hop_id,hop_type,attribute,lower,upper,submitted_at";

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline std::optional<double> parse_number(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, path + ": cannot open file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------- study config

inline json study_to_json(const StudyConfig& cfg) {
    json j;
    j["study_id"] = cfg.study_id;
    j["scale"] = {{"min", cfg.scale.min}, {"max", cfg.scale.max}};
    j["hops"] = json::array();
    for (const auto& h : cfg.hops)
        j["hops"].push_back({{"hop_id", h.hop_id}, {"name", h.name}, {"kind", to_string(h.kind)}});
    json q = json::object();
    for (const auto& [key, text] : cfg.questions)
        q[std::string(to_string(key.first))][std::string(1, code_char(key.second))] = text;
    j["questions"] = q;
    return j;
}

inline StudyConfig study_from_json(const json& j) {
    try {
        StudyConfig cfg;
        cfg.study_id = j.at("study_id").get<std::string>();
        if (j.contains("scale")) {
            cfg.scale.min = j["scale"].at("min").get<double>();
            cfg.scale.max = j["scale"].at("max").get<double>();
        }
        if (!(cfg.scale.min < cfg.scale.max))
            throw Error(ErrorCode::ParseError, "scale.min must be below scale.max");
        for (const auto& h : j.at("hops")) {
            auto kind = parse_hop_kind(h.at("kind").get<std::string>());
            if (!kind) throw Error(ErrorCode::ParseError, "hop kind must be attack or evade");
            HopSpec spec{h.at("hop_id").get<std::string>(), h.value("name", std::string{}), *kind};
            if (cfg.find_hop(spec.hop_id))
                throw Error(ErrorCode::ParseError, "duplicate hop_id '" + spec.hop_id + "'");
            cfg.hops.push_back(std::move(spec));
        }
        if (j.contains("questions")) {
            for (const auto& [kind_s, block] : j["questions"].items()) {
                auto kind = parse_hop_kind(kind_s);
                if (!kind) throw Error(ErrorCode::ParseError, "unknown question block '" + kind_s + "'");
                for (const auto& [code_s, text] : block.items()) {
                    auto code = parse_attribute(code_s);
                    if (!code || !is_legal(*kind, *code))
                        throw Error(ErrorCode::ParseError,
                                    "attribute '" + code_s + "' is not legal for " + kind_s);
                    cfg.questions[{*kind, *code}] = text.get<std::string>();
                }
            }
        }
        cfg.fill_default_questions();
        return cfg;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("study config: ") + e.what());
    }
}

inline StudyConfig load_study(const std::string& path) {
    const std::string text = read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path + ": " + e.what());
    }
    return study_from_json(j);
}

// ------------------------------------------------------------------- records

/// A line that could not be turned into a record.
struct LineIssue {
    std::size_t line = 0;
    std::string message;
};

struct LoadedRecords {
    std::vector<ResponseRecord> records;
    std::vector<std::size_t> lines;               // source line per record (1-based)
    std::map<std::string, HopKind> hop_kinds;     // from the hop_type column when present
    std::vector<LineIssue> issues;                // only filled in lenient mode
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

/// Builds a record from named fields; returns an error message on failure.
inline std::string make_record(const std::string& expert, const std::string& hop,
                               const std::string& hop_type, const std::string& attr,
                               std::optional<double> lower, std::optional<double> upper,
                               const std::string& stamp, LoadedRecords& out, std::size_t line) {
    if (expert.empty()) return "empty expert_id";
    if (hop.empty()) return "empty hop_id";
    auto code = parse_attribute(attr);
    if (!code) return "unknown attribute '" + attr + "'";
    if (!lower) return "lower is not a number";
    if (!upper) return "upper is not a number";
    Timestamp ts{};
    if (!stamp.empty()) {
        auto parsed = Timestamp::parse(stamp);
        if (!parsed) return "submitted_at '" + stamp + "' is not ISO-8601";
        ts = *parsed;
    }
    if (!hop_type.empty()) {
        auto kind = parse_hop_kind(hop_type);
        if (!kind) return "hop_type '" + hop_type + "' must be attack or evade";
        auto [it, inserted] = out.hop_kinds.try_emplace(hop, *kind);
        if (!inserted && it->second != *kind) return "hop '" + hop + "' has conflicting hop_type";
    }
    out.records.push_back({expert, hop, *code, {*lower, *upper}, ts});
    out.lines.push_back(line);
    return {};
}

inline void report_issue(LoadedRecords& out, bool lenient, const std::string& source,
                         std::size_t line, const std::string& msg) {
    if (!lenient) throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + msg);
    out.issues.push_back({line, msg});
}

}  // namespace detail

/// Parses CSV with a header naming at least expert_id, hop_id, attribute, lower, upper.
/// Strict mode throws ParseError citing "source:line"; lenient mode collects issues.
inline LoadedRecords parse_records_csv(std::string_view text, const std::string& source = "<csv>",
                                       bool lenient = false) {
    LoadedRecords out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (col.empty()) {
            auto names = detail::split_csv_line(line);
            for (std::size_t i = 0; i < names.size(); ++i) col[names[i]] = i;
            for (const char* need : {"expert_id", "hop_id", "attribute", "lower", "upper"})
                if (!col.count(need))
                    throw Error(ErrorCode::ParseError, source + ":" + std::to_string(lineno) +
                                                           ": header lacks column '" + need + "'");
            continue;
        }
        auto f = detail::split_csv_line(line);
        if (f.size() != col.size()) {
            detail::report_issue(out, lenient, source, lineno,
                                 "expected " + std::to_string(col.size()) + " fields, found " +
                                     std::to_string(f.size()));
            continue;
        }
        auto get = [&](const char* name) -> std::string {
            auto it = col.find(name);
            return it == col.end() ? std::string{} : f[it->second];
        };
        const std::string msg = detail::make_record(
            get("expert_id"), get("hop_id"), get("hop_type"), get("attribute"),
            parse_number(get("lower")), parse_number(get("upper")), get("submitted_at"), out, lineno);
        if (!msg.empty()) detail::report_issue(out, lenient, source, lineno, msg);
    }
    if (col.empty()) throw Error(ErrorCode::ParseError, source + ": missing CSV header");
    return out;
}

/// Parses one JSON object per line (the study-service log schema, `hop_type` optional).
inline LoadedRecords parse_records_jsonl(std::string_view text, const std::string& source = "<jsonl>",
                                         bool lenient = false) {
    LoadedRecords out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            detail::report_issue(out, lenient, source, lineno, std::string("invalid JSON: ") + e.what());
            continue;
        }
        auto str = [&](const char* k) -> std::string {
            return j.contains(k) && j[k].is_string() ? j[k].get<std::string>() : std::string{};
        };
        auto num = [&](const char* k) -> std::optional<double> {
            if (j.contains(k) && j[k].is_number()) return j[k].get<double>();
            return std::nullopt;
        };
        if (!j.is_object()) {
            detail::report_issue(out, lenient, source, lineno, "line is not a JSON object");
            continue;
        }
        const std::string msg = detail::make_record(str("expert_id"), str("hop_id"), str("hop_type"),
                                                    str("attribute"), num("lower"), num("upper"),
                                                    str("submitted_at"), out, lineno);
        if (!msg.empty()) detail::report_issue(out, lenient, source, lineno, msg);
    }
    return out;
}

/// Dispatches on extension: `.jsonl`/`.ndjson` are JSON lines, everything else CSV.
inline LoadedRecords load_records(const std::string& path, bool lenient = false) {
    const std::string text = read_file(path);
    auto ends_with = [&](std::string_view suf) {
        return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with(".jsonl") || ends_with(".ndjson")) return parse_records_jsonl(text, path, lenient);
    return parse_records_csv(text, path, lenient);
}

/// Config covering the hops named in a data file, with default question texts.
inline StudyConfig infer_study(const LoadedRecords& loaded, std::string study_id = "inferred") {
    std::vector<HopSpec> hops;
    for (const auto& [id, kind] : loaded.hop_kinds) hops.push_back({id, id, kind});
    return make_study_config(std::move(study_id), std::move(hops));
}

inline std::string hop_type_of(const StudyConfig& cfg, const std::string& hop_id) {
    const HopSpec* h = cfg.find_hop(hop_id);
    return h ? std::string(to_string(h->kind)) : std::string{};
}

inline json record_to_json(const ResponseRecord& r) {
    json j;
    j["expert_id"] = r.expert_id;
    j["hop_id"] = r.hop_id;
    j["attribute"] = std::string(1, code_char(r.attribute));
    j["lower"] = r.interval.lower;
    j["upper"] = r.interval.upper;
    j["submitted_at"] = r.submitted_at.to_iso8601();
    return j;
}

inline std::string write_records_csv(std::span<const ResponseRecord> records, const StudyConfig& cfg) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : records) {
        out += detail::csv_field(r.expert_id) + ',' + detail::csv_field(r.hop_id) + ',' +
               hop_type_of(cfg, r.hop_id) + ',' + code_char(r.attribute) + ',' +
               format_number(r.interval.lower) + ',' + format_number(r.interval.upper) + ',' +
               r.submitted_at.to_iso8601() + '\n';
    }
    return out;
}

inline std::string write_records_jsonl(std::span<const ResponseRecord> records, const StudyConfig& cfg,
                                       bool with_hop_type = true) {
    std::string out;
    for (const auto& r : records) {
        json j = record_to_json(r);
        if (with_hop_type) j["hop_type"] = hop_type_of(cfg, r.hop_id);
        out += j.dump() + '\n';
    }
    return out;
}

}  // namespace intervalrisk
