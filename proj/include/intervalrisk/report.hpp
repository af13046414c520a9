#pragma once

// Model reports in the layout of published mixed-model tables: fixed effects
// (beta, SE, t, p to three decimals), random-intercept SDs, residual SD, and a
// footer "N = ..., DF = ..., AIC = ..., BIC=...".

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "intervalrisk/io.hpp"
#include "intervalrisk/stepwise.hpp"

namespace intervalrisk {

enum class ReportFormat { text, markdown, csv, json };

inline std::optional<ReportFormat> parse_report_format(std::string_view s) {
    if (s == "text") return ReportFormat::text;
    if (s == "markdown" || s == "md") return ReportFormat::markdown;
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    return std::nullopt;
}

/// Three decimals without the leading zero: 0.012 -> ".012", -0.223 -> "-.223".
inline std::string format_coef(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    else if (s.rfind("-0.", 0) == 0) s.erase(1, 1);
    return s;
}

inline std::string format_p(double p) {
    if (p < 0.0005) return "<.001";
    if (p >= 0.9995) return ">.999";
    return format_coef(p);
}

inline std::string format_one_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

struct ReportRow {
    std::string label;
    std::string name;
    double beta = 0, se = 0, t = 0, p = 0;
};

struct ModelReport {
    std::string title;
    std::string kind;
    std::string outcome;
    std::vector<ReportRow> fixed;
    double sd_expert = 0, sd_hop = 0, sd_residual = 0;
    long n = 0, df = 0;
    double aic = 0, bic = 0, minus2ll = 0;
    long k_params = 0;
    bool converged = false;
    std::vector<std::string> notes;
    std::vector<std::string> warnings;
    std::optional<json> trace;
};

inline std::string analysis_title(HopKind kind, OutcomeKind outcome) {
    return std::string(kind == HopKind::attack ? "Attack" : "Evade") + " hops: overall difficulty " +
           (outcome == OutcomeKind::m ? "midpoint (m)" : "width (w)");
}

inline std::vector<std::string> standard_notes() {
    return {"estimation: maximum likelihood; random intercepts for expert and hop (crossed)",
            "predictors and outcome z-standardized over the analysis dataset (sample SD, n-1)",
            "interaction columns are products of standardized midpoint and width; not re-standardized",
            "DF = N - number of fixed-effect columns; k = fixed effects + 3 variance parameters",
            "incomplete expert x hop cases dropped listwise; duplicate submissions resolved latest-wins"};
}

inline ModelReport make_report(const FittedModel& m) {
    ModelReport r;
    r.title = analysis_title(m.kind, m.outcome);
    r.kind = std::string(to_string(m.kind));
    r.outcome = std::string(to_string(m.outcome));
    for (std::size_t j = 0; j < m.terms.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        r.fixed.push_back({m.terms[j].label, display_name(m.terms[j], m.kind), m.beta(jj), m.se(jj), m.t(jj), m.p(jj)});
    }
    r.sd_expert = m.vc.sd_expert;
    r.sd_hop = m.vc.sd_hop;
    r.sd_residual = m.vc.sd_residual;
    r.n = static_cast<long>(m.n);
    r.df = m.df_residual;
    r.aic = m.aic;
    r.bic = m.bic;
    r.minus2ll = m.minus2ll;
    r.k_params = static_cast<long>(m.k_params);
    r.converged = m.converged;
    r.notes = standard_notes();
    r.warnings = m.warnings;
    return r;
}

inline std::string footer_line(const ModelReport& r) {
    return "N = " + std::to_string(r.n) + ", DF = " + std::to_string(r.df) + ", AIC = " +
           format_one_decimal(r.aic) + ", BIC=" + format_one_decimal(r.bic);
}

// ------------------------------------------------------------------- trace

inline json trace_to_json(const StepwiseTrace& tr) {
    json it = json::array();
    for (const auto& s : tr.iterations) {
        it.push_back({{"candidate", s.candidate.label},
                      {"t", s.t},
                      {"p", s.p},
                      {"terms_before", s.terms_before},
                      {"lr", {{"stat", s.lr.stat}, {"df", s.lr.df}, {"p", s.lr.p}}},
                      {"current", {{"aic", s.aic_current}, {"bic", s.bic_current}}},
                      {"reduced", {{"aic", s.aic_reduced}, {"bic", s.bic_reduced}}},
                      {"decision", to_string(s.decision)}});
    }
    json prot = json::array();
    for (const auto& t : tr.protected_terms) prot.push_back(t.label);
    json fin = json::array();
    for (const auto& t : tr.final.terms) fin.push_back(t.label);
    return {{"alpha", tr.alpha},
            {"iterations", it},
            {"protected", prot},
            {"final_terms", fin},
            {"clean_termination", tr.clean_termination}};
}

inline std::string render_trace_log(const json& tr) {
    std::ostringstream os;
    os << "Stepwise elimination (alpha = " << tr.at("alpha").get<double>() << ")\n";
    int k = 0;
    for (const auto& s : tr.at("iterations")) {
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "[%d] %-8s t = %8.3f  p = %.4f | LR = %.3f (df %ld) p = %.4f | BIC %.1f -> %.1f | %s\n",
                      ++k, s.at("candidate").get<std::string>().c_str(), s.at("t").get<double>(),
                      s.at("p").get<double>(), s.at("lr").at("stat").get<double>(),
                      s.at("lr").at("df").get<long>(), s.at("lr").at("p").get<double>(),
                      s.at("current").at("bic").get<double>(), s.at("reduced").at("bic").get<double>(),
                      s.at("decision").get<std::string>().c_str());
        os << buf;
    }
    if (k == 0) os << "no candidates: every fixed effect significant in the initial model\n";
    os << "Protected:";
    if (tr.at("protected").empty()) os << " none";
    for (const auto& p : tr.at("protected")) os << ' ' << p.get<std::string>();
    os << "\nFinal terms:";
    for (const auto& p : tr.at("final_terms")) os << ' ' << p.get<std::string>();
    os << "\nClean termination: " << (tr.at("clean_termination").get<bool>() ? "yes" : "no") << '\n';
    return os.str();
}

// ------------------------------------------------------------------- JSON

inline json report_to_json(const ModelReport& r) {
    json fixed = json::array();
    for (const auto& row : r.fixed)
        fixed.push_back({{"term", row.label}, {"name", row.name}, {"beta", row.beta}, {"se", row.se},
                         {"t", row.t}, {"p", row.p}});
    json j{{"title", r.title},
           {"kind", r.kind},
           {"outcome", r.outcome},
           {"fixed_effects", fixed},
           {"random_effects", {{"expert_intercept_sd", r.sd_expert}, {"hop_intercept_sd", r.sd_hop}}},
           {"residual_sd", r.sd_residual},
           {"fit", {{"n", r.n}, {"df", r.df}, {"aic", r.aic}, {"bic", r.bic}, {"minus2ll", r.minus2ll},
                    {"k_params", r.k_params}, {"converged", r.converged}}},
           {"notes", r.notes},
           {"warnings", r.warnings}};
    if (r.trace) j["trace"] = *r.trace;
    return j;
}

inline ModelReport report_from_json(const json& j) {
    ModelReport r;
    r.title = j.at("title").get<std::string>();
    r.kind = j.at("kind").get<std::string>();
    r.outcome = j.at("outcome").get<std::string>();
    for (const auto& row : j.at("fixed_effects"))
        r.fixed.push_back({row.at("term").get<std::string>(), row.at("name").get<std::string>(),
                           row.at("beta").get<double>(), row.at("se").get<double>(), row.at("t").get<double>(),
                           row.at("p").get<double>()});
    r.sd_expert = j.at("random_effects").at("expert_intercept_sd").get<double>();
    r.sd_hop = j.at("random_effects").at("hop_intercept_sd").get<double>();
    r.sd_residual = j.at("residual_sd").get<double>();
    const auto& f = j.at("fit");
    r.n = f.at("n").get<long>();
    r.df = f.at("df").get<long>();
    r.aic = f.at("aic").get<double>();
    r.bic = f.at("bic").get<double>();
    r.minus2ll = f.at("minus2ll").get<double>();
    r.k_params = f.at("k_params").get<long>();
    r.converged = f.at("converged").get<bool>();
    r.notes = j.at("notes").get<std::vector<std::string>>();
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    if (j.contains("trace")) r.trace = j["trace"];
    return r;
}

// --------------------------------------------------------------- renderers

inline std::string render_text(const ModelReport& r) {
    std::ostringstream os;
    char buf[256];
    os << r.title << "\n\n";
    std::snprintf(buf, sizeof buf, "%-34s %8s %8s %9s %8s\n", "Fixed Effects Estimates", "β", "SE", "t", "p");
    os << buf << std::string(72, '-') << '\n';
    for (const auto& row : r.fixed) {
        const std::string name = row.name + " (" + row.label + ")";
        std::snprintf(buf, sizeof buf, "%-34s %8s %8s %9s %8s\n", name.c_str(), format_coef(row.beta).c_str(),
                      format_coef(row.se).c_str(), format_coef(row.t).c_str(), format_p(row.p).c_str());
        os << buf;
    }
    os << std::string(72, '-') << '\n';
    std::snprintf(buf, sizeof buf, "%-34s %8s\n", "Random Effects Estimates", "μ");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-34s %8s\n%-34s %8s\n", "Expert intercept", format_coef(r.sd_expert).c_str(),
                  "Hop intercept", format_coef(r.sd_hop).c_str());
    os << buf << std::string(72, '-') << '\n';
    std::snprintf(buf, sizeof buf, "%-34s %8s\n", "Residual", format_coef(r.sd_residual).c_str());
    os << buf << std::string(72, '-') << '\n';
    os << footer_line(r) << '\n';
    if (!r.converged) os << "WARNING: optimizer did not converge\n";
    for (const auto& w : r.warnings) os << "warning: " << w << '\n';
    os << '\n';
    for (const auto& n : r.notes) os << "# " << n << '\n';
    if (r.trace) os << '\n' << render_trace_log(*r.trace);
    return os.str();
}

inline std::string render_markdown(const ModelReport& r) {
    std::ostringstream os;
    os << "### " << r.title << "\n\n";
    os << "| Fixed Effects Estimates | β | SE | t | p |\n|---|---:|---:|---:|---:|\n";
    for (const auto& row : r.fixed)
        os << "| " << row.name << " (`" << row.label << "`) | " << format_coef(row.beta) << " | "
           << format_coef(row.se) << " | " << format_coef(row.t) << " | " << format_p(row.p) << " |\n";
    os << "\n| Random Effects Estimates | μ |\n|---|---:|\n";
    os << "| Expert intercept | " << format_coef(r.sd_expert) << " |\n";
    os << "| Hop intercept | " << format_coef(r.sd_hop) << " |\n";
    os << "| Residual | " << format_coef(r.sd_residual) << " |\n\n";
    os << footer_line(r) << "\n";
    for (const auto& w : r.warnings) os << "\n> warning: " << w << '\n';
    os << '\n';
    for (const auto& n : r.notes) os << "- " << n << '\n';
    if (r.trace) os << "\n```\n" << render_trace_log(*r.trace) << "```\n";
    return os.str();
}

inline std::string render_csv(const ModelReport& r) {
    std::ostringstream os;
    os << "section,term,name,estimate,se,t,p\n";
    for (const auto& row : r.fixed)
        os << "fixed," << row.label << ',' << detail::csv_field(row.name) << ',' << format_number(row.beta) << ','
           << format_number(row.se) << ',' << format_number(row.t) << ',' << format_number(row.p) << '\n';
    os << "random,expert,Expert intercept," << format_number(r.sd_expert) << ",,,\n";
    os << "random,hop,Hop intercept," << format_number(r.sd_hop) << ",,,\n";
    os << "residual,residual,Residual," << format_number(r.sd_residual) << ",,,\n";
    os << "fit,N,," << r.n << ",,,\n";
    os << "fit,DF,," << r.df << ",,,\n";
    os << "fit,AIC,," << format_number(r.aic) << ",,,\n";
    os << "fit,BIC,," << format_number(r.bic) << ",,,\n";
    os << "fit,minus2ll,," << format_number(r.minus2ll) << ",,,\n";
    return os.str();
}

inline std::string render_json(const ModelReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline std::string render(const ModelReport& r, ReportFormat f) {
    switch (f) {
        case ReportFormat::text: return render_text(r);
        case ReportFormat::markdown: return render_markdown(r);
        case ReportFormat::csv: return render_csv(r);
        case ReportFormat::json: return render_json(r);
    }
    return {};
}

}  // namespace intervalrisk
