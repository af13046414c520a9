#pragma once

#include <algorithm>
#include <string>

#include "intervalrisk/distributions.hpp"
#include "intervalrisk/lme.hpp"

namespace intervalrisk {

struct LRTestResult {
    double stat = 0.0;
    long df = 0;
    double p = 1.0;
};

/// Likelihood-ratio test of a reduced model nested in `full` (chi-square reference).
inline LRTestResult lr_test(const FittedModel& full, const FittedModel& reduced) {
    if (full.n != reduced.n || full.data_fingerprint != reduced.data_fingerprint)
        throw Error(ErrorCode::MismatchedData, "models were fitted to different data");
    for (const auto& t : reduced.terms)
        if (!full.index_of(t.label))
            throw Error(ErrorCode::NotNested, "term '" + t.label + "' of the reduced model is not in the full model");
    if (reduced.terms.size() == full.terms.size())
        throw Error(ErrorCode::ZeroDF, "models have identical fixed-effect terms");

    LRTestResult res;
    res.stat = std::max(0.0, reduced.minus2ll - full.minus2ll);
    res.df = static_cast<long>(full.k_params) - static_cast<long>(reduced.k_params);
    res.p = chi2_sf(res.stat, res.df);
    return res;
}

}  // namespace intervalrisk
