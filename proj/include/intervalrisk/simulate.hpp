#pragma once

// Synthetic expert panels with known fixed effects and variance components.
//
// Attribute midpoints are uniform over `midpoint_range`; widths are uniform over
// the feasible range [0, 2 min(m, 100 - m)]. The overall-difficulty midpoint and
// width outcomes are generated on the standardized scale from the same term
// structure the analysis uses, then mapped back to raw units:
//   M = 50 + 15 y_m,  W = 20 + 10 y_w,  overall = [M - W/2, M + W/2] clamped.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "intervalrisk/design.hpp"
#include "intervalrisk/io.hpp"
#include "intervalrisk/stepwise.hpp"

namespace intervalrisk {

struct AffineMap {
    double mean = 0.0;
    double sd = 1.0;
};

inline constexpr AffineMap kMidpointBackMap{50.0, 15.0};
inline constexpr AffineMap kWidthBackMap{20.0, 10.0};

struct SimulationSpec {
    std::uint64_t seed = 1;
    HopKind kind = HopKind::attack;
    int n_experts = 20;
    int n_hops = 10;
    std::map<std::string, double> true_beta;        // midpoint outcome, by term label
    std::map<std::string, double> true_beta_width;  // width outcome, by term label
    double sd_expert = 0.0;
    double sd_hop = 0.0;
    double sd_residual = 1.0;
    double midpoint_lo = 10.0;
    double midpoint_hi = 90.0;
    double dropout = 0.0;  // chance an expert x hop case loses one attribute record
};

inline void validate_spec(const SimulationSpec& s) {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InfeasibleSpec, m); };
    if (s.n_experts < 1 || s.n_hops < 1) fail("need at least one expert and one hop");
    if (s.sd_expert < 0 || s.sd_hop < 0 || s.sd_residual < 0) fail("standard deviations must be >= 0");
    if (!(s.midpoint_lo >= 0 && s.midpoint_hi <= 100 && s.midpoint_lo < s.midpoint_hi))
        fail("midpoint range must be a non-empty sub-range of [0, 100]");
    if (!(s.dropout >= 0 && s.dropout < 1)) fail("dropout must lie in [0, 1)");
    const auto legal = full_terms(s.kind);
    for (const auto* betas : {&s.true_beta, &s.true_beta_width}) {
        for (const auto& [label, value] : *betas) {
            auto t = parse_term(label);
            if (!t || std::none_of(legal.begin(), legal.end(), [&](const TermSpec& x) { return x.label == t->label; }))
                fail("term '" + label + "' is not legal for " + std::string(to_string(s.kind)) + " hops");
            if (!std::isfinite(value)) fail("coefficient for '" + label + "' is not finite");
        }
    }
}

inline std::string simulated_expert_id(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "X%03d", i + 1);
    return buf;
}

inline std::string simulated_hop_id(HopKind kind, int j) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d", kind == HopKind::attack ? 'A' : 'E', j + 1);
    return buf;
}

inline StudyConfig simulation_study(const SimulationSpec& s) {
    std::vector<HopSpec> hops;
    for (int j = 0; j < s.n_hops; ++j) {
        const auto id = simulated_hop_id(s.kind, j);
        hops.push_back({id, "Simulated " + std::string(to_string(s.kind)) + " hop " + id, s.kind});
    }
    return make_study_config("simulated-" + std::to_string(s.seed), std::move(hops));
}

inline const Timestamp kSimulationTimestamp = *Timestamp::parse("2020-01-01T00:00:00Z");

inline std::vector<ResponseRecord> generate_panel(const SimulationSpec& s) {
    validate_spec(s);
    std::mt19937_64 rng(s.seed);
    const auto preds = predictor_attributes(s.kind);
    const std::size_t na = preds.size();
    const std::size_t n = static_cast<std::size_t>(s.n_experts) * static_cast<std::size_t>(s.n_hops);

    std::vector<std::vector<double>> mid(na, std::vector<double>(n)), wid(na, std::vector<double>(n));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t row = 0; row < n; ++row) {
        for (std::size_t k = 0; k < na; ++k) {
            const double m = s.midpoint_lo + (s.midpoint_hi - s.midpoint_lo) * unif(rng);
            const double wmax = 2.0 * std::min(m, 100.0 - m);
            mid[k][row] = m;
            wid[k][row] = wmax * unif(rng);
        }
    }

    // Predictor columns on the standardized scale, keyed by term label.
    std::map<std::string, std::vector<double>> cols;
    auto zs = [&](const std::vector<double>& x) {
        double mean = 0, ss = 0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        for (double v : x) ss += (v - mean) * (v - mean);
        const double sd = x.size() > 1 ? std::sqrt(ss / static_cast<double>(x.size() - 1)) : 0.0;
        std::vector<double> z(x.size(), 0.0);
        if (sd > 0)
            for (std::size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - mean) / sd;
        return z;
    };
    cols[std::string(kInterceptLabel)] = std::vector<double>(n, 1.0);
    for (std::size_t k = 0; k < na; ++k) {
        auto zm = zs(mid[k]);
        auto zw = zs(wid[k]);
        std::vector<double> zmw(n);
        for (std::size_t i = 0; i < n; ++i) zmw[i] = zm[i] * zw[i];
        cols[TermSpec::of(TermKind::midpoint, preds[k]).label] = std::move(zm);
        cols[TermSpec::of(TermKind::width, preds[k]).label] = std::move(zw);
        cols[TermSpec::of(TermKind::interaction, preds[k]).label] = std::move(zmw);
    }

    auto outcome = [&](const std::map<std::string, double>& beta) {
        std::normal_distribution<double> std_normal(0.0, 1.0);
        std::vector<double> ue(static_cast<std::size_t>(s.n_experts)), uh(static_cast<std::size_t>(s.n_hops));
        for (auto& v : ue) v = s.sd_expert * std_normal(rng);
        for (auto& v : uh) v = s.sd_hop * std_normal(rng);
        std::vector<double> y(n);
        for (std::size_t row = 0; row < n; ++row) {
            const std::size_t i = row / static_cast<std::size_t>(s.n_hops);
            const std::size_t j = row % static_cast<std::size_t>(s.n_hops);
            double v = ue[i] + uh[j] + s.sd_residual * std_normal(rng);
            for (const auto& [label, b] : beta) v += b * cols.at(parse_term(label)->label)[row];
            y[row] = v;
        }
        return y;
    };
    const auto ym = outcome(s.true_beta);
    const auto yw = outcome(s.true_beta_width);

    std::mt19937_64 drop_rng(s.seed ^ 0x9E3779B97F4A7C15ULL);
    std::vector<ResponseRecord> records;
    records.reserve(n * (na + 1));
    auto clamp = [](double v) { return std::clamp(v, 0.0, 100.0); };
    for (std::size_t row = 0; row < n; ++row) {
        const int i = static_cast<int>(row / static_cast<std::size_t>(s.n_hops));
        const int j = static_cast<int>(row % static_cast<std::size_t>(s.n_hops));
        const std::string expert = simulated_expert_id(i);
        const std::string hop = simulated_hop_id(s.kind, j);

        std::size_t dropped = na + 1;
        if (s.dropout > 0 && unif(drop_rng) < s.dropout)
            dropped = static_cast<std::size_t>(unif(drop_rng) * static_cast<double>(na + 1)) % (na + 1);

        for (std::size_t k = 0; k < na; ++k) {
            if (k == dropped) continue;
            const double m = mid[k][row], w = wid[k][row];
            const double lo = clamp(m - w / 2), hi = std::max(lo, clamp(m + w / 2));
            records.push_back({expert, hop, preds[k], {lo, hi}, kSimulationTimestamp});
        }
        if (dropped == na) continue;
        const double M = clamp(kMidpointBackMap.mean + kMidpointBackMap.sd * ym[row]);
        const double W = clamp(kWidthBackMap.mean + kWidthBackMap.sd * yw[row]);
        const double lo = clamp(M - W / 2), hi = std::max(lo, clamp(M + W / 2));
        records.push_back({expert, hop, Attribute::o, {lo, hi}, kSimulationTimestamp});
    }
    return records;
}

// ------------------------------------------------------------------ spec JSON

inline json spec_to_json(const SimulationSpec& s) {
    return json{{"seed", s.seed},
                {"kind", to_string(s.kind)},
                {"n_experts", s.n_experts},
                {"n_hops", s.n_hops},
                {"true_beta", s.true_beta},
                {"true_beta_width", s.true_beta_width},
                {"sd_expert", s.sd_expert},
                {"sd_hop", s.sd_hop},
                {"sd_residual", s.sd_residual},
                {"midpoint_range", {s.midpoint_lo, s.midpoint_hi}},
                {"dropout", s.dropout}};
}

inline SimulationSpec spec_from_json(const json& j) {
    try {
        SimulationSpec s;
        s.seed = j.value("seed", s.seed);
        if (j.contains("kind")) {
            auto k = parse_hop_kind(j["kind"].get<std::string>());
            if (!k) throw Error(ErrorCode::InfeasibleSpec, "kind must be attack or evade");
            s.kind = *k;
        }
        s.n_experts = j.value("n_experts", s.n_experts);
        s.n_hops = j.value("n_hops", s.n_hops);
        if (j.contains("true_beta")) s.true_beta = j["true_beta"].get<std::map<std::string, double>>();
        if (j.contains("true_beta_width"))
            s.true_beta_width = j["true_beta_width"].get<std::map<std::string, double>>();
        s.sd_expert = j.value("sd_expert", s.sd_expert);
        s.sd_hop = j.value("sd_hop", s.sd_hop);
        s.sd_residual = j.value("sd_residual", s.sd_residual);
        if (j.contains("midpoint_range")) {
            s.midpoint_lo = j["midpoint_range"].at(0).get<double>();
            s.midpoint_hi = j["midpoint_range"].at(1).get<double>();
        }
        s.dropout = j.value("dropout", s.dropout);
        validate_spec(s);
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::InfeasibleSpec, std::string("simulation spec: ") + e.what());
    }
}

/// Ground truth written next to a simulated panel.
inline json simulation_sidecar(const SimulationSpec& s) {
    json j = spec_to_json(s);
    j["back_map"] = {{"midpoint", {{"mean", kMidpointBackMap.mean}, {"sd", kMidpointBackMap.sd}}},
                     {"width", {{"mean", kWidthBackMap.mean}, {"sd", kWidthBackMap.sd}}}};
    j["predictor_scaling"] = "z-score within panel (n-1 SD); interactions are products of z-scores";
    return j;
}

// ------------------------------------------------------------ recovery study

struct TermRecovery {
    std::string label;
    double true_value = 0.0;       // generator units
    double mean_estimate = 0.0;    // generator units
    double bias = 0.0;
    double empirical_se = 0.0;     // SD of estimates across runs
    double mean_reported_se = 0.0;
    double retention_rate = 0.0;   // fraction of runs where stepwise keeps the term
    double coverage = 0.0;         // fraction with |est - true| <= 1.96 SE
    double within_3se_rate = 0.0;
};

struct RunSummary {
    std::uint64_t seed = 0;
    VarianceComponents vc_analysis;   // standardized-outcome units, full model
    VarianceComponents vc_generator;  // mapped back to generator units
    std::vector<std::string> retained;
    bool clean_termination = false;
    std::size_t covered = 0;          // non-intercept terms whose interval covers the truth
    std::size_t assessed = 0;
};

struct RecoveryReport {
    int n_runs = 0;
    OutcomeKind outcome = OutcomeKind::m;
    std::vector<TermRecovery> terms;
    std::vector<RunSummary> runs;
    VarianceComponents mean_vc_generator;
    double clean_termination_rate = 0.0;
    double pooled_coverage = 0.0;  // over all non-intercept terms and runs

    const TermRecovery* find(std::string_view label) const {
        for (const auto& t : terms)
            if (t.label == label) return &t;
        return nullptr;
    }
};

/// Runs the full pipeline (assemble, standardize, fit, stepwise) on `n_runs`
/// panels with seeds spec.seed, spec.seed + 1, ...
inline RecoveryReport recovery_report(const SimulationSpec& spec, int n_runs,
                                      OutcomeKind outcome = OutcomeKind::m,
                                      const StepwiseConfig& config = {}) {
    if (n_runs < 1) throw Error(ErrorCode::InvalidArgument, "n_runs must be >= 1");
    validate_spec(spec);
    const auto terms = full_terms(spec.kind);
    const auto& truth = outcome == OutcomeKind::m ? spec.true_beta : spec.true_beta_width;
    const AffineMap back = outcome == OutcomeKind::m ? kMidpointBackMap : kWidthBackMap;

    std::vector<std::vector<double>> est(terms.size()), ses(terms.size());
    std::vector<int> retained(terms.size(), 0), covered(terms.size(), 0), within3(terms.size(), 0);
    std::vector<double> true_vals(terms.size(), 0.0);
    for (std::size_t j = 0; j < terms.size(); ++j)
        for (const auto& [label, b] : truth)
            if (parse_term(label)->label == terms[j].label) true_vals[j] = b;

    RecoveryReport rep;
    rep.n_runs = n_runs;
    rep.outcome = outcome;
    std::size_t cov_hits = 0, cov_total = 0;
    int clean = 0;
    for (int run = 0; run < n_runs; ++run) {
        SimulationSpec s = spec;
        s.seed = spec.seed + static_cast<std::uint64_t>(run);
        const auto records = generate_panel(s);
        const auto study = simulation_study(s);
        const auto ds = assemble_dataset(records, study, s.kind);
        const auto [sds, table] = standardize(ds);
        const auto design = build_design(sds, outcome);
        const auto trace = reduce(design, config);
        const auto& full = trace.initial;
        // Analysis units -> generator units.
        const double scale = table.find(outcome == OutcomeKind::m ? "o_m" : "o_w")->sd / back.sd;

        RunSummary rs;
        rs.seed = s.seed;
        rs.vc_analysis = full.vc;
        rs.vc_generator = {full.vc.sd_expert * scale, full.vc.sd_hop * scale, full.vc.sd_residual * scale};
        rs.clean_termination = trace.clean_termination;
        clean += trace.clean_termination ? 1 : 0;
        for (std::size_t j = 0; j < terms.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double b = full.beta(jj) * scale, se = full.se(jj) * scale;
            est[j].push_back(b);
            ses[j].push_back(se);
            const double err = std::abs(b - true_vals[j]);
            if (err <= 1.96 * se) ++covered[j];
            if (err <= 3.0 * se) ++within3[j];
            if (trace.final.index_of(terms[j].label)) {
                ++retained[j];
                rs.retained.push_back(terms[j].label);
            }
            if (!terms[j].is_intercept()) {
                ++rs.assessed;
                if (err <= 1.96 * se) ++rs.covered;
            }
        }
        cov_hits += rs.covered;
        cov_total += rs.assessed;
        rep.mean_vc_generator.sd_expert += rs.vc_generator.sd_expert / n_runs;
        rep.mean_vc_generator.sd_hop += rs.vc_generator.sd_hop / n_runs;
        rep.mean_vc_generator.sd_residual += rs.vc_generator.sd_residual / n_runs;
        rep.runs.push_back(std::move(rs));
    }
    const double nr = static_cast<double>(n_runs);
    for (std::size_t j = 0; j < terms.size(); ++j) {
        TermRecovery tr;
        tr.label = terms[j].label;
        tr.true_value = true_vals[j];
        for (double v : est[j]) tr.mean_estimate += v / nr;
        for (double v : ses[j]) tr.mean_reported_se += v / nr;
        double ss = 0;
        for (double v : est[j]) ss += (v - tr.mean_estimate) * (v - tr.mean_estimate);
        tr.empirical_se = n_runs > 1 ? std::sqrt(ss / (nr - 1)) : 0.0;
        tr.bias = tr.mean_estimate - tr.true_value;
        tr.retention_rate = retained[j] / nr;
        tr.coverage = covered[j] / nr;
        tr.within_3se_rate = within3[j] / nr;
        rep.terms.push_back(tr);
    }
    rep.clean_termination_rate = clean / nr;
    rep.pooled_coverage = cov_total ? static_cast<double>(cov_hits) / static_cast<double>(cov_total) : 0.0;
    return rep;
}

}  // namespace intervalrisk
