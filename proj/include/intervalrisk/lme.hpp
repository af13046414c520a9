#pragma once

// Maximum-likelihood fit of y = X b + u_expert + u_hop + e with two crossed
// random intercepts. The variance ratios lambda = var(u) / var(e) are the only
// non-linear parameters; beta and sigma^2 are profiled out in closed form.
//
// With Lambda = diag(sqrt(lambda)) over the q = (#experts + #hops) indicator
// columns Z, V0 = I + Z Lambda^2 Z' and
//   V0^-1    = I - Z Lambda M^-1 Lambda Z',   M = Lambda Z'Z Lambda + I
//   log|V0|  = log|M|
// so every evaluation costs one q x q Cholesky plus O(N p).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>

#include "intervalrisk/design.hpp"
#include "intervalrisk/distributions.hpp"

namespace intervalrisk {

struct VarianceComponents {
    double sd_expert = 0.0;
    double sd_hop = 0.0;
    double sd_residual = 0.0;
};

struct GroupMode {
    std::string level;
    double value = 0.0;
};

struct FittedModel {
    std::vector<TermSpec> terms;
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
    Eigen::VectorXd t;
    Eigen::VectorXd p;
    long df_residual = 0;
    VarianceComponents vc;
    double lambda_expert = 0.0;
    double lambda_hop = 0.0;
    double minus2ll = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t n = 0;
    std::size_t k_params = 0;
    bool converged = false;
    int evaluations = 0;
    std::vector<GroupMode> expert_modes;  // diagnostics only
    std::vector<GroupMode> hop_modes;
    std::vector<std::string> warnings;
    HopKind kind = HopKind::attack;
    OutcomeKind outcome = OutcomeKind::m;
    std::uint64_t data_fingerprint = 0;

    std::size_t p_cols() const { return terms.size(); }

    std::optional<std::size_t> index_of(std::string_view label) const {
        for (std::size_t j = 0; j < terms.size(); ++j)
            if (terms[j].label == label) return j;
        return std::nullopt;
    }
};

/// Hash of y and the grouping; models fitted to the same data share it.
inline std::uint64_t data_fingerprint(const DesignMatrix& d) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const void* p, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    mix(d.y.data(), sizeof(double) * d.n());
    mix(d.expert_index.data(), sizeof(int) * d.expert_index.size());
    mix(d.hop_index.data(), sizeof(int) * d.hop_index.size());
    return h;
}

/// Evaluates the ML deviance profiled over beta and sigma^2 for a fixed design.
/// Cross-products are computed once at construction.
class ProfiledDeviance {
public:
    struct Result {
        double minus2ll = 0.0;
        Eigen::VectorXd beta;
        double sigma2 = 0.0;
        Eigen::MatrixXd beta_cov_unscaled;  // (X'V0^-1 X)^-1, only with details
        Eigen::VectorXd modes;              // conditional modes of u (y units), only with details
    };

    explicit ProfiledDeviance(const DesignMatrix& d)
        : design_(d), ne_(static_cast<int>(d.n_experts())), nh_(static_cast<int>(d.n_hops())) {
        const int q = ne_ + nh_;
        const auto n = static_cast<Eigen::Index>(d.n());
        const auto p = static_cast<Eigen::Index>(d.p());
        ztz_ = Eigen::MatrixXd::Zero(q, q);
        ztx_ = Eigen::MatrixXd::Zero(q, p);
        zty_ = Eigen::VectorXd::Zero(q);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int e = d.expert_index[static_cast<std::size_t>(i)];
            const int h = ne_ + d.hop_index[static_cast<std::size_t>(i)];
            ztz_(e, e) += 1.0;
            ztz_(h, h) += 1.0;
            ztz_(e, h) += 1.0;
            ztz_(h, e) += 1.0;
            ztx_.row(e) += d.X.row(i);
            ztx_.row(h) += d.X.row(i);
            zty_(e) += d.y(i);
            zty_(h) += d.y(i);
        }
        xtx_ = d.X.transpose() * d.X;
        xty_ = d.X.transpose() * d.y;
    }

    Result evaluate(double lambda_expert, double lambda_hop, bool details = false) const {
        if (!(lambda_expert >= 0.0) || !(lambda_hop >= 0.0) || !std::isfinite(lambda_expert) ||
            !std::isfinite(lambda_hop))
            throw Error(ErrorCode::InsufficientData, "variance ratios must be finite and >= 0");
        const int q = ne_ + nh_;
        const auto n = static_cast<double>(design_.n());

        Eigen::VectorXd lam(q);
        lam.head(ne_).setConstant(std::sqrt(lambda_expert));
        lam.tail(nh_).setConstant(std::sqrt(lambda_hop));

        Eigen::MatrixXd m = lam.asDiagonal() * ztz_ * lam.asDiagonal();
        m.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXd> chol_m(m);
        const auto& lm = chol_m.matrixL();
        const double logdet_v0 = 2.0 * chol_m.matrixLLT().diagonal().array().log().sum();

        const Eigen::MatrixXd c = lm.solve(lam.asDiagonal() * ztx_);
        const Eigen::VectorXd cy = lm.solve(lam.cwiseProduct(zty_));
        const Eigen::MatrixXd a = xtx_ - c.transpose() * c;
        const Eigen::VectorXd b = xty_ - c.transpose() * cy;

        Eigen::LLT<Eigen::MatrixXd> chol_a(a);
        if (chol_a.info() != Eigen::Success || !(chol_a.rcond() >= 1e-12))
            throw Error(ErrorCode::SingularDesign,
                        "X'V^-1 X is numerically singular (reciprocal condition " +
                            std::to_string(chol_a.info() == Eigen::Success ? chol_a.rcond() : 0.0) + ")");

        Result res;
        res.beta = chol_a.solve(b);
        const Eigen::VectorXd r = design_.y - design_.X * res.beta;
        Eigen::VectorXd ztr = Eigen::VectorXd::Zero(q);
        for (std::size_t i = 0; i < design_.n(); ++i) {
            ztr(design_.expert_index[i]) += r(static_cast<Eigen::Index>(i));
            ztr(ne_ + design_.hop_index[i]) += r(static_cast<Eigen::Index>(i));
        }
        const Eigen::VectorXd cr = lm.solve(lam.cwiseProduct(ztr));
        const double quad = r.squaredNorm() - cr.squaredNorm();
        if (!(quad > 0.0))
            throw Error(ErrorCode::InsufficientData, "model reproduces the outcome exactly; sigma^2 = 0");

        res.sigma2 = quad / n;
        res.minus2ll = n * std::log(2.0 * std::numbers::pi * res.sigma2) + logdet_v0 + n;
        if (details) {
            res.beta_cov_unscaled = chol_a.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
            res.modes = lam.cwiseProduct(chol_m.matrixU().solve(cr));
        }
        return res;
    }

    double operator()(double lambda_expert, double lambda_hop) const {
        ++evaluations_;
        return evaluate(lambda_expert, lambda_hop).minus2ll;
    }

    int evaluations() const { return evaluations_; }

private:
    const DesignMatrix& design_;
    int ne_;
    int nh_;
    Eigen::MatrixXd ztz_;
    Eigen::MatrixXd ztx_;
    Eigen::VectorXd zty_;
    Eigen::MatrixXd xtx_;
    Eigen::VectorXd xty_;
    mutable int evaluations_ = 0;
};

inline ProfiledDeviance::Result profiled_deviance(const DesignMatrix& design, double lambda_expert,
                                                  double lambda_hop) {
    return ProfiledDeviance(design).evaluate(lambda_expert, lambda_hop);
}

struct FitOptions {
    bool fix_expert_zero = false;
    bool fix_hop_zero = false;
    double tolerance = 1e-8;  // on -2LL
    int max_iterations = 500;
};

namespace detail {

inline constexpr double kLogLambdaMin = -30.0;
inline constexpr double kLogLambdaMax = 15.0;
// The joint search stays above this: below it the deviance is numerically flat
// and equal to its boundary value, which the edge searches already cover.
inline constexpr double kLogLambdaInteriorMin = -12.0;

struct NelderMeadResult {
    std::array<double, 2> x{};
    double f = 0.0;
    bool converged = false;
};

/// Nelder-Mead on the box [lo, hi]^2 (points are projected onto it). Stops when
/// the spread of simplex values falls to `tol`.
template <typename F>
NelderMeadResult nelder_mead_2d(F&& f, std::array<double, 2> start, double step, double tol, int max_iter,
                                double lo = kLogLambdaInteriorMin, double hi = kLogLambdaMax) {
    using Pt = std::array<double, 2>;
    auto clamp = [lo, hi](Pt p) {
        for (auto& v : p) v = std::clamp(v, lo, hi);
        return p;
    };
    std::array<Pt, 3> s{clamp(start), clamp({start[0] + step, start[1]}), clamp({start[0], start[1] + step})};
    std::array<double, 3> fs{f(s[0]), f(s[1]), f(s[2])};

    NelderMeadResult out;
    for (int it = 0; it < max_iter; ++it) {
        std::array<int, 3> idx{0, 1, 2};
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fs[a] < fs[b]; });
        const Pt best = s[idx[0]], mid = s[idx[1]], worst = s[idx[2]];
        const double fb = fs[idx[0]], fm = fs[idx[1]], fw = fs[idx[2]];
        s = {best, mid, worst};
        fs = {fb, fm, fw};
        if (fw - fb <= tol) {
            out.converged = true;
            break;
        }
        const Pt cen{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
        auto along = [&](double coef) {
            return clamp({cen[0] + coef * (worst[0] - cen[0]), cen[1] + coef * (worst[1] - cen[1])});
        };
        const Pt xr = along(-1.0);
        const double fr = f(xr);
        if (fr < fb) {
            const Pt xe = along(-2.0);
            const double fe = f(xe);
            if (fe < fr) {
                s[2] = xe;
                fs[2] = fe;
            } else {
                s[2] = xr;
                fs[2] = fr;
            }
        } else if (fr < fm) {
            s[2] = xr;
            fs[2] = fr;
        } else {
            const Pt xc = fr < fw ? along(-0.5) : along(0.5);
            const double fc = f(xc);
            if (fc < std::min(fr, fw)) {
                s[2] = xc;
                fs[2] = fc;
            } else {
                for (int k = 1; k < 3; ++k) {
                    s[k] = clamp({(s[0][0] + s[k][0]) / 2, (s[0][1] + s[k][1]) / 2});
                    fs[k] = f(s[k]);
                }
            }
        }
    }
    const auto best = std::min_element(fs.begin(), fs.end()) - fs.begin();
    out.x = s[static_cast<std::size_t>(best)];
    out.f = fs[static_cast<std::size_t>(best)];
    return out;
}

/// Minimizes g(log lambda) over the box: coarse scan, then Brent around the best cell.
template <typename G>
std::pair<double, double> minimize_log_ratio(G&& g) {
    double best_x = -15.0, best_f = std::numeric_limits<double>::infinity();
    for (int k = -15; k <= 10; ++k) {
        const double v = g(static_cast<double>(k));
        if (v < best_f) {
            best_f = v;
            best_x = k;
        }
    }
    const double lo = best_x <= -15.0 ? kLogLambdaMin : best_x - 1.0;
    const double hi = best_x >= 10.0 ? kLogLambdaMax : best_x + 1.0;
    std::uintmax_t iters = 200;
    auto [x, fx] = boost::math::tools::brent_find_minima(g, lo, hi, std::numeric_limits<double>::digits / 2, iters);
    if (fx < best_f) return {x, fx};
    return {best_x, best_f};
}

}  // namespace detail

/// ML fit with both variance ratios optimized over [0, inf)^2. Boundary
/// candidates (each ratio, or both, at exactly zero) are evaluated explicitly
/// and the global minimum of -2LL is kept.
inline FittedModel fit_ml(const DesignMatrix& design, const FitOptions& options = {}) {
    const std::size_t n = design.n();
    const std::size_t p = design.p();
    if (n <= p)
        throw Error(ErrorCode::InsufficientData,
                    "need N > p (N = " + std::to_string(n) + ", p = " + std::to_string(p) + ")");

    FittedModel model;
    bool expert_free = !options.fix_expert_zero;
    bool hop_free = !options.fix_hop_zero;
    if (expert_free && design.n_experts() < 2) {
        expert_free = false;
        model.warnings.push_back("fewer than 2 experts; expert variance fixed at 0");
    }
    if (hop_free && design.n_hops() < 2) {
        hop_free = false;
        model.warnings.push_back("fewer than 2 hops; hop variance fixed at 0");
    }

    // If the fixed and free random-effect columns together span the data, sigma^2
    // can shrink to zero as lambda grows and the likelihood has no maximum.
    if (expert_free || hop_free) {
        const auto ne = expert_free ? static_cast<Eigen::Index>(design.n_experts()) : 0;
        const auto nh = hop_free ? static_cast<Eigen::Index>(design.n_hops()) : 0;
        Eigen::MatrixXd xz = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p) + ne + nh);
        xz.leftCols(static_cast<Eigen::Index>(p)) = design.X;
        for (std::size_t i = 0; i < n; ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            if (expert_free) xz(row, static_cast<Eigen::Index>(p) + design.expert_index[i]) = 1.0;
            if (hop_free) xz(row, static_cast<Eigen::Index>(p) + ne + design.hop_index[i]) = 1.0;
        }
        if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(xz).rank() >= static_cast<Eigen::Index>(n))
            throw Error(ErrorCode::InsufficientData,
                        "fixed effects plus grouping levels fit the data exactly; no residual variance to estimate");
    }

    ProfiledDeviance dev(design);
    // X'X itself is checked at (0, 0); elsewhere a numerically singular system
    // only means the point is not a minimum.
    auto safe_dev = [&](double le, double lh) {
        try {
            return dev(le, lh);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::SingularDesign || e.code() == ErrorCode::InsufficientData)
                return std::numeric_limits<double>::infinity();
            throw;
        }
    };
    // Boundary candidates first; an interior point replaces them only if strictly better.
    double best_le = 0.0, best_lh = 0.0;
    double best_f = dev(0.0, 0.0);
    bool converged = true;
    constexpr double kImprove = 1e-10;

    double edge_e = detail::kLogLambdaMin, edge_h = detail::kLogLambdaMin;
    if (expert_free) {
        auto [x, fx] = detail::minimize_log_ratio([&](double le) { return safe_dev(std::exp(le), 0.0); });
        edge_e = x;
        if (fx < best_f - kImprove) {
            best_f = fx;
            best_le = std::exp(x);
            best_lh = 0.0;
        }
    }
    if (hop_free) {
        auto [x, fx] = detail::minimize_log_ratio([&](double lh) { return safe_dev(0.0, std::exp(lh)); });
        edge_h = x;
        if (fx < best_f - kImprove) {
            best_f = fx;
            best_le = 0.0;
            best_lh = std::exp(x);
        }
    }
    if (expert_free && hop_free) {
        auto f2 = [&](const std::array<double, 2>& th) { return safe_dev(std::exp(th[0]), std::exp(th[1])); };
        // Multi-start: the two best points of a coarse grid plus the edge optima
        // lifted into the searchable box.
        using Start = std::pair<double, std::array<double, 2>>;
        std::vector<Start> starts;
        for (double a = detail::kLogLambdaInteriorMin; a <= 8.0; a += 2.0)
            for (double b = detail::kLogLambdaInteriorMin; b <= 8.0; b += 2.0) starts.push_back({f2({a, b}), {a, b}});
        std::sort(starts.begin(), starts.end(), [](const Start& x, const Start& y) { return x.first < y.first; });
        starts.resize(2);
        const std::array<double, 2> lifted{std::max(edge_e, -6.0), std::max(edge_h, -6.0)};
        starts.push_back({f2(lifted), lifted});

        detail::NelderMeadResult nm2;
        nm2.f = std::numeric_limits<double>::infinity();
        for (const auto& [f0, x0] : starts) {
            auto nm = detail::nelder_mead_2d(f2, x0, 1.0, options.tolerance, options.max_iterations);
            if (nm.f < nm2.f) nm2 = nm;
        }
        auto polish = detail::nelder_mead_2d(f2, nm2.x, 0.25, options.tolerance, options.max_iterations);
        if (polish.f <= nm2.f) nm2 = polish;
        converged = nm2.converged;
        if (nm2.f < best_f - kImprove) {
            best_f = nm2.f;
            best_le = std::exp(nm2.x[0]);
            best_lh = std::exp(nm2.x[1]);
        }
    }
    if (!converged)
        model.warnings.push_back("optimizer did not reach tolerance within " +
                                 std::to_string(options.max_iterations) + " iterations");

    const auto res = dev.evaluate(best_le, best_lh, true);
    model.terms = design.terms;
    model.kind = design.kind;
    model.outcome = design.outcome;
    model.n = n;
    model.df_residual = static_cast<long>(n - p);
    model.k_params = p + 3;
    model.lambda_expert = best_le;
    model.lambda_hop = best_lh;
    model.minus2ll = res.minus2ll;
    model.aic = res.minus2ll + 2.0 * static_cast<double>(model.k_params);
    model.bic = res.minus2ll + static_cast<double>(model.k_params) * std::log(static_cast<double>(n));
    model.beta = res.beta;
    model.se = (res.sigma2 * res.beta_cov_unscaled.diagonal().array()).sqrt().matrix();
    model.t = model.beta.cwiseQuotient(model.se);
    model.p.resize(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < model.p.size(); ++j) model.p(j) = two_sided_t_p(model.t(j), model.df_residual);
    const double sigma = std::sqrt(res.sigma2);
    model.vc = {sigma * std::sqrt(best_le), sigma * std::sqrt(best_lh), sigma};
    for (std::size_t e = 0; e < design.n_experts(); ++e)
        model.expert_modes.push_back({design.expert_levels[e], res.modes(static_cast<Eigen::Index>(e))});
    for (std::size_t h = 0; h < design.n_hops(); ++h)
        model.hop_modes.push_back(
            {design.hop_levels[h], res.modes(static_cast<Eigen::Index>(design.n_experts() + h))});
    model.converged = converged;
    model.evaluations = dev.evaluations();
    model.data_fingerprint = data_fingerprint(design);
    return model;
}

inline double loglik_at_optimum(const FittedModel& model) {
    if (!model.converged) throw Error(ErrorCode::NotConverged, "model did not converge");
    return model.minus2ll;
}

}  // namespace intervalrisk
