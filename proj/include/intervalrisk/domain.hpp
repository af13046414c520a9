#pragma once

// Domain types for interval-valued elicitation studies: hops, attributes,
// interval responses, and assembly of complete-case analysis datasets.

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "intervalrisk/error.hpp"
#include "intervalrisk/timestamp.hpp"

namespace intervalrisk {

enum class HopKind { attack, evade };

inline std::string_view to_string(HopKind kind) {
    return kind == HopKind::attack ? "attack" : "evade";
}

inline std::optional<HopKind> parse_hop_kind(std::string_view s) {
    if (s == "attack") return HopKind::attack;
    if (s == "evade") return HopKind::evade;
    return std::nullopt;
}

/// Rated attribute. `o` (overall difficulty) is the outcome, never a predictor.
enum class Attribute : char {
    c = 'c',
    t = 't',
    f = 'f',
    a = 'a',
    d = 'd',
    r = 'r',
    g = 'g',
    o = 'o',
};

inline char code_char(Attribute a) { return static_cast<char>(a); }

inline std::optional<Attribute> parse_attribute(std::string_view s) {
    if (s.size() != 1) return std::nullopt;
    switch (s[0]) {
        case 'c': return Attribute::c;
        case 't': return Attribute::t;
        case 'f': return Attribute::f;
        case 'a': return Attribute::a;
        case 'd': return Attribute::d;
        case 'r': return Attribute::r;
        case 'g': return Attribute::g;
        case 'o': return Attribute::o;
        default: return std::nullopt;
    }
}

namespace detail {
inline constexpr Attribute attack_predictors[] = {Attribute::c, Attribute::t, Attribute::f,
                                                  Attribute::a, Attribute::d, Attribute::r,
                                                  Attribute::g};
inline constexpr Attribute evade_predictors[] = {Attribute::c, Attribute::a, Attribute::r};
}  // namespace detail

/// Predictor attributes of a hop kind, in questionnaire order (excludes `o`).
inline std::span<const Attribute> predictor_attributes(HopKind kind) {
    if (kind == HopKind::attack) return detail::attack_predictors;
    return detail::evade_predictors;
}

inline bool is_legal(HopKind kind, Attribute a) {
    if (a == Attribute::o) return true;
    const auto preds = predictor_attributes(kind);
    return std::find(preds.begin(), preds.end(), a) != preds.end();
}

inline std::string_view attribute_name(HopKind kind, Attribute a) {
    switch (a) {
        case Attribute::c: return "Complexity";
        case Attribute::t: return "Interaction";
        case Attribute::f: return "Frequency";
        case Attribute::a:
            return kind == HopKind::attack ? "Availability Tool" : "Availability Information";
        case Attribute::d: return "Inherent Difficulty";
        case Attribute::r: return "Maturity";
        case Attribute::g: return "Going Unnoticed";
        case Attribute::o: return "Overall Difficulty";
    }
    return "?";
}

inline std::string_view default_question(HopKind kind, Attribute a) {
    if (a == Attribute::o) return "Overall, how difficult would it be for an attacker to do this?";
    if (kind == HopKind::evade) {
        switch (a) {
            case Attribute::c: return "How complex is the job of providing this kind of defence?";
            case Attribute::a:
                return "How likely is that there will be publicly available information that could "
                       "help with evading defence?";
            case Attribute::r: return "How mature is this type of technology?";
            default: return "";
        }
    }
    switch (a) {
        case Attribute::c:
            return "How complex is the target component (e.g. in terms of size of code, number of "
                   "sub-components)?";
        case Attribute::t: return "How much does the target component process/interact with any data input?";
        case Attribute::f: return "How often would you say this type of attack is reported in the public domain?";
        case Attribute::a:
            return "How likely is it that there will be a publicly available tool that could help "
                   "with this attack?";
        case Attribute::d:
            return "How inherently difficult is this type of attack? (i.e. how technically demanding "
                   "would it be to do from scratch, with no tools to help.)";
        case Attribute::r: return "How mature is this type of technology?";
        case Attribute::g: return "How easy is it to carry this attack out without being noticed?";
        default: return "";
    }
}

struct Scale {
    double min = 0.0;
    double max = 100.0;
    friend bool operator==(const Scale&, const Scale&) = default;
};

/// A [lower, upper] response. Plain aggregate; `valid()` checks the invariants
/// so raw submissions can be represented before validation.
struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    double midpoint() const { return (lower + upper) / 2.0; }
    double width() const { return upper - lower; }

    bool valid(const Scale& scale = {}) const {
        return lower >= scale.min && upper <= scale.max && lower <= upper;
    }

    friend bool operator==(const Interval&, const Interval&) = default;
};

struct IntervalSummary {
    double midpoint;
    double width;
};

inline IntervalSummary interval_summaries(const Interval& i) { return {i.midpoint(), i.width()}; }

struct HopSpec {
    std::string hop_id;
    std::string name;
    HopKind kind = HopKind::attack;
    friend bool operator==(const HopSpec&, const HopSpec&) = default;
};

struct StudyConfig {
    std::string study_id;
    Scale scale;
    std::vector<HopSpec> hops;
    std::map<std::pair<HopKind, Attribute>, std::string> questions;

    const HopSpec* find_hop(std::string_view hop_id) const {
        for (const auto& h : hops)
            if (h.hop_id == hop_id) return &h;
        return nullptr;
    }

    const std::string& question(HopKind kind, Attribute a) const {
        static const std::string empty;
        auto it = questions.find({kind, a});
        return it == questions.end() ? empty : it->second;
    }

    /// Fills in the standard question text for every legal (kind, code) pair
    /// that has none.
    void fill_default_questions() {
        for (HopKind kind : {HopKind::attack, HopKind::evade}) {
            for (Attribute a : predictor_attributes(kind))
                questions.try_emplace({kind, a}, std::string(default_question(kind, a)));
            questions.try_emplace({kind, Attribute::o}, std::string(default_question(kind, Attribute::o)));
        }
    }

    friend bool operator==(const StudyConfig&, const StudyConfig&) = default;
};

inline StudyConfig make_study_config(std::string study_id, std::vector<HopSpec> hops) {
    StudyConfig cfg;
    cfg.study_id = std::move(study_id);
    cfg.hops = std::move(hops);
    cfg.fill_default_questions();
    return cfg;
}

struct ResponseRecord {
    std::string expert_id;
    std::string hop_id;
    Attribute attribute = Attribute::o;
    Interval interval;
    Timestamp submitted_at;
    friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

struct Validity {
    bool ok = true;
    ErrorCode code = ErrorCode::MalformedInterval;
    std::string message;
    explicit operator bool() const { return ok; }
};

inline Validity validate_record(const ResponseRecord& rec, const StudyConfig& config) {
    const HopSpec* hop = config.find_hop(rec.hop_id);
    if (!hop) return {false, ErrorCode::UnknownHop, "hop '" + rec.hop_id + "' is not in the study"};
    if (!is_legal(hop->kind, rec.attribute))
        return {false, ErrorCode::IllegalAttribute,
                std::string("attribute '") + code_char(rec.attribute) + "' is not rated for " +
                    std::string(to_string(hop->kind)) + " hops"};
    if (!rec.interval.valid(config.scale))
        return {false, ErrorCode::MalformedInterval,
                "interval [" + std::to_string(rec.interval.lower) + ", " +
                    std::to_string(rec.interval.upper) + "] violates lower <= upper within [" +
                    std::to_string(config.scale.min) + ", " + std::to_string(config.scale.max) + "]"};
    return {};
}

/// One expert x one hop. `attributes` is aligned with predictor_attributes(kind).
struct ObservationRow {
    std::string expert_id;
    std::string hop_id;
    std::vector<Interval> attributes;
    Interval overall;

    double midpoint(std::size_t k) const { return attributes[k].midpoint(); }
    double width(std::size_t k) const { return attributes[k].width(); }

    friend bool operator==(const ObservationRow&, const ObservationRow&) = default;
};

struct Dataset {
    HopKind kind = HopKind::attack;
    std::vector<ObservationRow> rows;

    std::size_t size() const { return rows.size(); }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Keeps the latest submission per (expert, hop, attribute); equal timestamps
/// resolve to the later element. Result is sorted by (expert, hop, attribute).
inline std::vector<ResponseRecord> deduplicate_latest(std::span<const ResponseRecord> records) {
    using Key = std::tuple<std::string, std::string, char>;
    std::map<Key, std::size_t> latest;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        Key key{r.expert_id, r.hop_id, code_char(r.attribute)};
        auto [it, inserted] = latest.try_emplace(key, i);
        if (!inserted && !(r.submitted_at < records[it->second].submitted_at)) it->second = i;
    }
    std::vector<ResponseRecord> out;
    out.reserve(latest.size());
    for (const auto& [key, idx] : latest) out.push_back(records[idx]);
    return out;
}

/// Pivots long-format records into complete-case rows for one hop kind.
inline Dataset assemble_dataset(std::span<const ResponseRecord> records, const StudyConfig& config,
                                HopKind kind) {
    for (const auto& r : records) {
        if (auto v = validate_record(r, config); !v)
            throw Error(v.code, "expert '" + r.expert_id + "': " + v.message);
    }
    const auto preds = predictor_attributes(kind);

    struct Partial {
        std::vector<std::optional<Interval>> attrs;
        std::optional<Interval> overall;
    };
    std::map<std::pair<std::string, std::string>, Partial> cells;
    for (const auto& r : deduplicate_latest(records)) {
        if (config.find_hop(r.hop_id)->kind != kind) continue;
        auto& cell = cells[{r.expert_id, r.hop_id}];
        if (cell.attrs.empty()) cell.attrs.resize(preds.size());
        if (r.attribute == Attribute::o) {
            cell.overall = r.interval;
        } else {
            const auto k = static_cast<std::size_t>(
                std::find(preds.begin(), preds.end(), r.attribute) - preds.begin());
            cell.attrs[k] = r.interval;
        }
    }

    Dataset ds;
    ds.kind = kind;
    for (const auto& [key, cell] : cells) {
        if (!cell.overall) continue;
        if (!std::all_of(cell.attrs.begin(), cell.attrs.end(), [](const auto& x) { return x.has_value(); }))
            continue;
        ObservationRow row{key.first, key.second, {}, *cell.overall};
        row.attributes.reserve(preds.size());
        for (const auto& x : cell.attrs) row.attributes.push_back(*x);
        ds.rows.push_back(std::move(row));
    }
    if (ds.rows.empty())
        throw Error(ErrorCode::EmptyDataset,
                    "no complete " + std::string(to_string(kind)) + " expert x hop case");
    return ds;
}

/// Inverse of the pivot: one record per attribute (and overall) per row.
inline std::vector<ResponseRecord> flatten(const Dataset& ds, Timestamp stamp = {}) {
    const auto preds = predictor_attributes(ds.kind);
    std::vector<ResponseRecord> out;
    for (const auto& row : ds.rows) {
        for (std::size_t k = 0; k < preds.size(); ++k)
            out.push_back({row.expert_id, row.hop_id, preds[k], row.attributes[k], stamp});
        out.push_back({row.expert_id, row.hop_id, Attribute::o, row.overall, stamp});
    }
    return out;
}

}  // namespace intervalrisk
