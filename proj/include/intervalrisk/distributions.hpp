#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "intervalrisk/error.hpp"

namespace intervalrisk {

/// CDF of Student's t with `df` degrees of freedom.
inline double t_cdf(double x, long df) {
    if (df < 1) throw Error(ErrorCode::InvalidDF, "t distribution needs df >= 1, got " + std::to_string(df));
    if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
    boost::math::students_t_distribution<double> dist(static_cast<double>(df));
    return boost::math::cdf(dist, x);
}

/// 2 * P(T > |t|), computed from the upper tail to keep precision for large |t|.
inline double two_sided_t_p(double t, long df) {
    if (df < 1) throw Error(ErrorCode::InvalidDF, "t distribution needs df >= 1, got " + std::to_string(df));
    if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
    if (std::isinf(t)) return 0.0;
    boost::math::students_t_distribution<double> dist(static_cast<double>(df));
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

/// Upper tail 1 - F(stat) of the chi-square distribution.
inline double chi2_sf(double stat, long df) {
    if (df < 1) throw Error(ErrorCode::InvalidDF, "chi-square needs df >= 1, got " + std::to_string(df));
    if (stat < 0.0) throw Error(ErrorCode::NegativeStat, "chi-square statistic must be >= 0");
    if (std::isinf(stat)) return 0.0;
    if (stat == 0.0) return 1.0;
    boost::math::chi_squared_distribution<double> dist(static_cast<double>(df));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace intervalrisk
