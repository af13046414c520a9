#pragma once

// z-standardization and the fixed-effects design: intercept, attribute
// midpoints, attribute widths, and midpoint-by-width interactions.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "intervalrisk/domain.hpp"

namespace intervalrisk {

enum class TermKind { intercept, midpoint, width, interaction };
enum class OutcomeKind { m, w };

inline std::string_view to_string(OutcomeKind o) { return o == OutcomeKind::m ? "m" : "w"; }

inline std::optional<OutcomeKind> parse_outcome_kind(std::string_view s) {
    if (s == "m") return OutcomeKind::m;
    if (s == "w") return OutcomeKind::w;
    return std::nullopt;
}

inline constexpr std::string_view kInterceptLabel = "(Intercept)";

struct TermSpec {
    std::string label;
    TermKind kind = TermKind::intercept;
    std::optional<Attribute> attribute;

    static TermSpec intercept() { return {std::string(kInterceptLabel), TermKind::intercept, std::nullopt}; }

    static TermSpec of(TermKind kind, Attribute a) {
        std::string label(1, code_char(a));
        label += kind == TermKind::midpoint ? "_m" : kind == TermKind::width ? "_w" : "_mw";
        return {label, kind, a};
    }

    bool is_intercept() const { return kind == TermKind::intercept; }

    friend bool operator==(const TermSpec&, const TermSpec&) = default;
};

/// Human-readable row label in the style "Inherent Difficulty m", "Maturity m·w".
inline std::string display_name(const TermSpec& t, HopKind kind) {
    if (t.is_intercept() || !t.attribute) return "Intercept";
    std::string s(attribute_name(kind, *t.attribute));
    switch (t.kind) {
        case TermKind::midpoint: return s + " m";
        case TermKind::width: return s + " w";
        case TermKind::interaction: return s + " m·w";
        default: return s;
    }
}

/// Parses "(Intercept)", "d_m", "a_w", "r_mw".
inline std::optional<TermSpec> parse_term(std::string_view label) {
    if (label == kInterceptLabel || label == "intercept") return TermSpec::intercept();
    if (label.size() < 3 || label[1] != '_') return std::nullopt;
    auto a = parse_attribute(label.substr(0, 1));
    if (!a || *a == Attribute::o) return std::nullopt;
    auto suffix = label.substr(2);
    if (suffix == "m") return TermSpec::of(TermKind::midpoint, *a);
    if (suffix == "w") return TermSpec::of(TermKind::width, *a);
    if (suffix == "mw") return TermSpec::of(TermKind::interaction, *a);
    return std::nullopt;
}

/// Full term list for a hop kind: [intercept; midpoints; widths; interactions].
inline std::vector<TermSpec> full_terms(HopKind kind) {
    std::vector<TermSpec> terms{TermSpec::intercept()};
    for (TermKind tk : {TermKind::midpoint, TermKind::width, TermKind::interaction})
        for (Attribute a : predictor_attributes(kind)) terms.push_back(TermSpec::of(tk, a));
    return terms;
}

struct VariableStats {
    std::string name;
    double mean = 0.0;
    double sd = 1.0;
};

struct StandardizationTable {
    std::vector<VariableStats> variables;

    const VariableStats* find(std::string_view name) const {
        for (const auto& v : variables)
            if (v.name == name) return &v;
        return nullptr;
    }
};

/// Returns (x - mean) / sd with the n-1 sample SD. Throws DegenerateVariable
/// on zero variance.
inline std::vector<double> zscore(std::span<const double> x, const std::string& name,
                                  VariableStats* stats = nullptr) {
    const std::size_t n = x.size();
    if (n < 2) throw Error(ErrorCode::InsufficientData, "cannot standardize '" + name + "' with N < 2");
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 1e-12 * std::max(1.0, std::abs(mean))))
        throw Error(ErrorCode::DegenerateVariable, "variable '" + name + "' has zero variance");
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = (x[i] - mean) / sd;
    if (stats) *stats = {name, mean, sd};
    return z;
}

/// Dataset with every variable replaced by its z-score over all rows.
struct StandardizedDataset {
    HopKind kind = HopKind::attack;
    std::vector<std::string> expert_ids;
    std::vector<std::string> hop_ids;
    std::vector<std::vector<double>> midpoints;  // [attribute][row]
    std::vector<std::vector<double>> widths;     // [attribute][row]
    std::vector<double> overall_midpoint;
    std::vector<double> overall_width;

    std::size_t size() const { return expert_ids.size(); }
};

inline std::pair<StandardizedDataset, StandardizationTable> standardize(const Dataset& ds) {
    const std::size_t n = ds.rows.size();
    if (n < 2) throw Error(ErrorCode::InsufficientData, "standardization needs N >= 2");
    const auto preds = predictor_attributes(ds.kind);

    StandardizedDataset out;
    StandardizationTable table;
    out.kind = ds.kind;
    for (const auto& row : ds.rows) {
        out.expert_ids.push_back(row.expert_id);
        out.hop_ids.push_back(row.hop_id);
    }
    auto column = [&](auto&& get, const std::string& name) {
        std::vector<double> raw(n);
        for (std::size_t i = 0; i < n; ++i) raw[i] = get(ds.rows[i]);
        VariableStats st;
        auto z = zscore(raw, name, &st);
        table.variables.push_back(st);
        return z;
    };
    for (std::size_t k = 0; k < preds.size(); ++k)
        out.midpoints.push_back(column([k](const ObservationRow& r) { return r.midpoint(k); },
                                       std::string(1, code_char(preds[k])) + "_m"));
    for (std::size_t k = 0; k < preds.size(); ++k)
        out.widths.push_back(column([k](const ObservationRow& r) { return r.width(k); },
                                    std::string(1, code_char(preds[k])) + "_w"));
    out.overall_midpoint = column([](const ObservationRow& r) { return r.overall.midpoint(); }, "o_m");
    out.overall_width = column([](const ObservationRow& r) { return r.overall.width(); }, "o_w");
    return {std::move(out), std::move(table)};
}

/// Outcome vector, fixed-effect columns, and crossed grouping indices.
struct DesignMatrix {
    Eigen::VectorXd y;
    Eigen::MatrixXd X;
    std::vector<TermSpec> terms;
    std::vector<int> expert_index;
    std::vector<int> hop_index;
    std::vector<std::string> expert_levels;
    std::vector<std::string> hop_levels;
    OutcomeKind outcome = OutcomeKind::m;
    HopKind kind = HopKind::attack;

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t p() const { return static_cast<std::size_t>(X.cols()); }
    std::size_t n_experts() const { return expert_levels.size(); }
    std::size_t n_hops() const { return hop_levels.size(); }

    std::optional<std::size_t> column_of(std::string_view label) const {
        for (std::size_t j = 0; j < terms.size(); ++j)
            if (terms[j].label == label) return j;
        return std::nullopt;
    }
};

namespace detail {
inline void index_levels(std::span<const std::string> labels, std::vector<int>& index,
                         std::vector<std::string>& levels) {
    std::set<std::string> uniq(labels.begin(), labels.end());
    levels.assign(uniq.begin(), uniq.end());
    index.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        index[i] = static_cast<int>(std::lower_bound(levels.begin(), levels.end(), labels[i]) - levels.begin());
}
}  // namespace detail

/// Assembles a design from raw pieces; grouping levels are sorted labels.
inline DesignMatrix make_design(Eigen::VectorXd y, Eigen::MatrixXd X, std::vector<TermSpec> terms,
                                std::span<const std::string> experts, std::span<const std::string> hops) {
    const auto n = static_cast<std::size_t>(y.size());
    if (static_cast<std::size_t>(X.rows()) != n || experts.size() != n || hops.size() != n ||
        static_cast<std::size_t>(X.cols()) != terms.size())
        throw Error(ErrorCode::MismatchedData, "design pieces disagree in size");
    DesignMatrix d;
    d.y = std::move(y);
    d.X = std::move(X);
    d.terms = std::move(terms);
    detail::index_levels(experts, d.expert_index, d.expert_levels);
    detail::index_levels(hops, d.hop_index, d.hop_levels);
    return d;
}

inline DesignMatrix build_design(const StandardizedDataset& sd, OutcomeKind outcome) {
    const std::size_t n = sd.size();
    const auto preds = predictor_attributes(sd.kind);
    const std::size_t na = preds.size();
    auto terms = full_terms(sd.kind);

    Eigen::MatrixXd X(n, terms.size());
    X.col(0).setOnes();
    for (std::size_t k = 0; k < na; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            const double m = sd.midpoints[k][i];
            const double w = sd.widths[k][i];
            X(i, 1 + k) = m;
            X(i, 1 + na + k) = w;
            X(i, 1 + 2 * na + k) = m * w;
        }
    }
    for (std::size_t j = 1 + 2 * na; j < terms.size(); ++j) {
        const double lo = X.col(j).minCoeff(), hi = X.col(j).maxCoeff();
        if (!(hi > lo)) throw Error(ErrorCode::DegenerateVariable, "column '" + terms[j].label + "' is constant");
    }
    const auto& yv = outcome == OutcomeKind::m ? sd.overall_midpoint : sd.overall_width;
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(yv.data(), static_cast<Eigen::Index>(n));
    DesignMatrix d = make_design(std::move(y), std::move(X), std::move(terms), sd.expert_ids, sd.hop_ids);
    d.outcome = outcome;
    d.kind = sd.kind;
    return d;
}

/// Standardizes and builds in one step.
inline DesignMatrix build_design(const Dataset& ds, OutcomeKind outcome) {
    return build_design(standardize(ds).first, outcome);
}

/// Keeps only the named columns (in their original order).
inline DesignMatrix subset_design(const DesignMatrix& design, std::span<const TermSpec> keep) {
    bool has_intercept = false;
    for (const auto& t : keep) {
        if (t.is_intercept()) has_intercept = true;
        if (!design.column_of(t.label))
            throw Error(ErrorCode::UnknownTerm, "term '" + t.label + "' is not in the design");
    }
    if (!has_intercept) throw Error(ErrorCode::InterceptRequired, "kept terms must include the intercept");

    std::vector<Eigen::Index> cols;
    std::vector<TermSpec> terms;
    for (std::size_t j = 0; j < design.terms.size(); ++j) {
        const auto& t = design.terms[j];
        if (std::any_of(keep.begin(), keep.end(), [&](const TermSpec& k) { return k.label == t.label; })) {
            cols.push_back(static_cast<Eigen::Index>(j));
            terms.push_back(t);
        }
    }
    DesignMatrix out = design;
    out.X = design.X(Eigen::all, cols);
    out.terms = std::move(terms);
    return out;
}

inline DesignMatrix drop_term(const DesignMatrix& design, std::string_view label) {
    std::vector<TermSpec> keep;
    for (const auto& t : design.terms)
        if (t.label != label) keep.push_back(t);
    if (keep.size() == design.terms.size())
        throw Error(ErrorCode::UnknownTerm, "term '" + std::string(label) + "' is not in the design");
    return subset_design(design, keep);
}

}  // namespace intervalrisk
