#pragma once

// Backwards elimination of fixed effects. Each round takes the non-significant,
// unprotected term whose t is closest to zero, refits without it, and compares
// the two models with a likelihood-ratio test. A non-significant loss of fit
// lets BIC decide which model goes forward; a significant loss protects the term.

#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "intervalrisk/inference.hpp"
#include "intervalrisk/lme.hpp"

namespace intervalrisk {

struct StepwiseConfig {
    double alpha = 0.05;
    int max_iterations = 100;
};

enum class StepDecision { removed, protected_term };

inline std::string_view to_string(StepDecision d) {
    return d == StepDecision::removed ? "removed" : "protected";
}

struct StepRecord {
    TermSpec candidate;
    double t = 0.0;
    double p = 0.0;
    LRTestResult lr;
    double aic_current = 0.0;
    double bic_current = 0.0;
    double aic_reduced = 0.0;
    double bic_reduced = 0.0;
    std::size_t terms_before = 0;
    StepDecision decision = StepDecision::removed;
};

struct StepwiseTrace {
    std::vector<StepRecord> iterations;
    FittedModel initial;
    FittedModel final;
    std::vector<TermSpec> protected_terms;
    double alpha = 0.05;
    bool clean_termination = false;
};

using FitFn = std::function<FittedModel(const DesignMatrix&)>;
using TestFn = std::function<LRTestResult(const FittedModel&, const FittedModel&)>;

/// The non-significant, unprotected, non-intercept term with minimal |t|;
/// ties go to the earlier column.
inline std::optional<TermSpec> step_candidate(const FittedModel& model, double alpha,
                                              const std::set<std::string>& protected_labels) {
    std::optional<std::size_t> best;
    for (std::size_t j = 0; j < model.terms.size(); ++j) {
        const auto& term = model.terms[j];
        const auto jj = static_cast<Eigen::Index>(j);
        if (term.is_intercept() || protected_labels.count(term.label)) continue;
        if (!(model.p(jj) >= alpha)) continue;
        if (!best || std::abs(model.t(jj)) < std::abs(model.t(static_cast<Eigen::Index>(*best)))) best = j;
    }
    if (!best) return std::nullopt;
    return model.terms[*best];
}

/// True when every non-intercept term of `model` has p < alpha.
inline bool all_significant(const FittedModel& model, double alpha) {
    for (std::size_t j = 0; j < model.terms.size(); ++j)
        if (!model.terms[j].is_intercept() && !(model.p(static_cast<Eigen::Index>(j)) < alpha)) return false;
    return true;
}

inline StepwiseTrace reduce(const DesignMatrix& design, const FitFn& fit_fn, const TestFn& test_fn,
                            const StepwiseConfig& config = {}) {
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw Error(ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    constexpr double kBicTie = 1e-9;

    StepwiseTrace trace;
    trace.alpha = config.alpha;
    DesignMatrix current_design = design;
    FittedModel current = fit_fn(current_design);
    trace.initial = current;
    std::set<std::string> protected_labels;

    for (int iter = 0;; ++iter) {
        auto cand = step_candidate(current, config.alpha, protected_labels);
        if (!cand) break;
        if (iter >= config.max_iterations)
            throw Error(ErrorCode::IterationCapExceeded,
                        "stepwise reduction exceeded " + std::to_string(config.max_iterations) + " iterations");

        const auto j = static_cast<Eigen::Index>(*current.index_of(cand->label));
        DesignMatrix reduced_design = drop_term(current_design, cand->label);
        FittedModel reduced = fit_fn(reduced_design);
        const LRTestResult lr = test_fn(current, reduced);

        StepRecord rec{*cand,         current.t(j), current.p(j), lr,
                       current.aic,   current.bic,  reduced.aic,  reduced.bic,
                       current.p_cols(), StepDecision::protected_term};
        if (lr.p >= config.alpha && reduced.bic <= current.bic + kBicTie) {
            rec.decision = StepDecision::removed;
            current_design = std::move(reduced_design);
            current = std::move(reduced);
        } else {
            protected_labels.insert(cand->label);
            trace.protected_terms.push_back(*cand);
        }
        trace.iterations.push_back(std::move(rec));
    }
    trace.clean_termination = all_significant(current, config.alpha);
    trace.final = std::move(current);
    return trace;
}

/// Default pipeline: ML fit and the chi-square likelihood-ratio test.
inline StepwiseTrace reduce(const DesignMatrix& design, const StepwiseConfig& config = {}) {
    return reduce(
        design, [](const DesignMatrix& d) { return fit_ml(d); },
        [](const FittedModel& a, const FittedModel& b) { return lr_test(a, b); }, config);
}

}  // namespace intervalrisk
