#pragma once

// Weighted binary-response GLMs fitted by IRLS: logistic, log-binomial (with
// a Poisson fallback) and the identity-link linear probability model.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "qba/error.hpp"

namespace qba {

enum class Link { logit, log, identity };

inline const char* to_string(Link l) {
    switch (l) {
        case Link::logit: return "logit";
        case Link::log: return "log";
        case Link::identity: return "identity";
    }
    return "?";
}

struct GlmFit {
    Link link = Link::logit;
    Eigen::VectorXd coefficients;
    Eigen::MatrixXd covariance;         // model based
    Eigen::MatrixXd robust_covariance;  // HC0 sandwich
    bool converged = false;
    bool fallback = false;   // log link fitted as Poisson after log-binomial failed
    bool separated = false;  // coefficients diverging or |linear predictor| > 30
    // Columns whose coefficients run off when separated. The remaining
    // coefficients (and their covariance) are still reported if the
    // iterations otherwise settled.
    std::vector<Eigen::Index> diverging;
    int iterations = 0;
    double deviance = 0.0;   // residual sum of squares for the identity link
    std::vector<std::string> labels;

    double se(Eigen::Index j) const { return std::sqrt(covariance(j, j)); }
    double robust_se(Eigen::Index j) const { return std::sqrt(robust_covariance(j, j)); }
    bool usable() const { return converged; }
    // Coefficient j is finite at the maximum: the fit converged, or it is
    // separated only in other columns.
    bool estimable(Eigen::Index j) const {
        if (converged) return true;
        if (!separated || covariance.size() == 0) return false;
        return std::find(diverging.begin(), diverging.end(), j) == diverging.end();
    }
};

struct GlmOptions {
    double score_tolerance = 1e-8;
    double deviance_tolerance = 1e-10;
    int max_iter_logistic = 100;
    int max_iter_log_binomial = 200;
    int max_iter_poisson = 100;
    double separation_bound = 30.0;
    double probability_cap = 1.0 - 1e-10;  // log-binomial feasibility bound
    double boundary_margin = 1.0 - 1e-8;   // fitted risks above this are not an interior MLE
    double rank_tolerance = 1e-11;
};

inline double expit(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

namespace detail {

constexpr Eigen::Index kBlock = 4096;

// X' diag(v) X accumulated in row blocks; v must be nonnegative.
inline Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& x, const Eigen::VectorXd& v) {
    const Eigen::Index n = x.rows(), p = x.cols();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
    Eigen::MatrixXd blk;
    for (Eigen::Index start = 0; start < n; start += kBlock) {
        const Eigen::Index len = std::min(kBlock, n - start);
        blk = x.middleRows(start, len).array().colwise() * v.segment(start, len).array().sqrt();
        h.selfadjointView<Eigen::Lower>().rankUpdate(blk.transpose());
    }
    return h.selfadjointView<Eigen::Lower>();
}

inline Eigen::VectorXd weighted_cross(const Eigen::MatrixXd& x, const Eigen::VectorXd& v) {
    return x.transpose() * v;
}

inline std::vector<std::string> column_names(std::span<const std::string> labels, Eigen::Index p) {
    std::vector<std::string> out;
    for (Eigen::Index j = 0; j < p; ++j)
        out.push_back(static_cast<std::size_t>(j) < labels.size() ? labels[j]
                                                                  : "x" + std::to_string(j));
    return out;
}

inline void check_inputs(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    if (x.rows() != y.size() || x.rows() != w.size())
        throw DataError("glm: design has " + std::to_string(x.rows()) + " rows but " +
                        std::to_string(y.size()) + " responses and " + std::to_string(w.size()) +
                        " weights");
    if (x.cols() == 0) throw DataError("glm: design has no columns");
    if (!x.allFinite() || !y.allFinite() || !w.allFinite())
        throw DataError("glm: non-finite value in design, response or weights");
    if ((w.array() < 0).any()) throw DataError("glm: negative weight");
}

// Rank check on the weighted support. Columns beyond the numerical rank of
// the scaled Gram matrix, and the columns they are combinations of, are
// reported by label.
inline void check_rank(const Eigen::MatrixXd& x, const Eigen::VectorXd& w,
                       std::span<const std::string> labels, double tol) {
    const Eigen::Index p = x.cols();
    const auto names = column_names(labels, p);
    Eigen::MatrixXd g = weighted_gram(x, w);
    Eigen::VectorXd d = g.diagonal().cwiseSqrt();
    std::vector<std::string> zero;
    for (Eigen::Index j = 0; j < p; ++j)
        if (!(d(j) > 0)) zero.push_back(names[j]);
    if (!zero.empty()) throw RankDeficiencyError(zero);
    Eigen::MatrixXd gs = d.cwiseInverse().asDiagonal() * g * d.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gs);
    qr.setThreshold(tol);
    const Eigen::Index r = qr.rank();
    if (r == p) return;

    const auto& perm = qr.colsPermutation().indices();
    std::vector<Eigen::Index> indep(perm.data(), perm.data() + r);
    std::vector<bool> involved(static_cast<std::size_t>(p), false);
    Eigen::MatrixXd gi(r, r);
    for (Eigen::Index a = 0; a < r; ++a)
        for (Eigen::Index b = 0; b < r; ++b) gi(a, b) = gs(indep[a], indep[b]);
    auto solver = gi.ldlt();
    for (Eigen::Index k = r; k < p; ++k) {
        const Eigen::Index dep = perm(k);
        involved[static_cast<std::size_t>(dep)] = true;
        Eigen::VectorXd rhs(r);
        for (Eigen::Index a = 0; a < r; ++a) rhs(a) = gs(indep[a], dep);
        Eigen::VectorXd c = solver.solve(rhs);
        for (Eigen::Index a = 0; a < r; ++a)
            if (std::abs(c(a)) > 1e-6) involved[static_cast<std::size_t>(indep[a])] = true;
    }
    std::vector<std::string> cols;
    for (Eigen::Index j = 0; j < p; ++j)
        if (involved[static_cast<std::size_t>(j)]) cols.push_back(names[j]);
    throw RankDeficiencyError(cols);
}

inline Eigen::MatrixXd inverse_spd(const Eigen::MatrixXd& a) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        (ldlt.vectorD().array() <= 0).any())
        throw NumericError("glm: information matrix is singular");
    Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
    return 0.5 * (inv + inv.transpose());
}

enum class Family { binomial_logit, binomial_log, poisson_log, gaussian_identity };

inline Family family_of(const GlmFit& fit) {
    switch (fit.link) {
        case Link::logit: return Family::binomial_logit;
        case Link::log: return fit.fallback ? Family::poisson_log : Family::binomial_log;
        case Link::identity: return Family::gaussian_identity;
    }
    return Family::binomial_logit;
}

// Per-observation information factor v_i and score factor s_i such that the
// weighted score is X'(w*s) and the expected information X' diag(w*v) X.
inline void score_factors(Family f, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                          Eigen::VectorXd& v, Eigen::VectorXd& s) {
    const Eigen::Index n = eta.size();
    v.resize(n);
    s.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        switch (f) {
            case Family::binomial_logit: {
                const double mu = expit(eta(i));
                v(i) = mu * (1.0 - mu);
                s(i) = y(i) - mu;
                break;
            }
            case Family::binomial_log: {
                const double mu = std::exp(eta(i));
                v(i) = mu / (1.0 - mu);
                s(i) = (y(i) - mu) / (1.0 - mu);
                break;
            }
            case Family::poisson_log: {
                const double mu = std::exp(eta(i));
                v(i) = mu;
                s(i) = y(i) - mu;
                break;
            }
            case Family::gaussian_identity:
                v(i) = 1.0;
                s(i) = y(i) - eta(i);
                break;
        }
    }
}

inline double deviance(Family f, const Eigen::VectorXd& eta, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w) {
    double dev = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        if (w(i) == 0) continue;
        const double yi = y(i);
        double di = 0.0;
        switch (f) {
            case Family::binomial_logit:
                di = yi * softplus(-eta(i)) + (1.0 - yi) * softplus(eta(i));
                break;
            case Family::binomial_log: {
                const double mu = std::exp(eta(i));
                if (!(mu < 1.0)) return std::numeric_limits<double>::infinity();
                di = -(yi > 0 ? yi * eta(i) : 0.0) - (yi < 1 ? (1.0 - yi) * std::log1p(-mu) : 0.0);
                break;
            }
            case Family::poisson_log: {
                const double mu = std::exp(eta(i));
                di = mu - yi * eta(i) - (yi > 0 ? yi - yi * std::log(yi) : 0.0);
                break;
            }
            case Family::gaussian_identity: {
                const double r = yi - eta(i);
                di = 0.5 * r * r;
                break;
            }
        }
        dev += 2.0 * w(i) * di;
    }
    return dev;
}

struct IrlsResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd eta;
    double deviance = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_step = 0.0;  // max |full Newton step| of the final iteration
    Eigen::VectorXd step;    // full Newton step of the final iteration
};

// Fisher scoring with step halving on the deviance. `feasible` rejects
// linear predictors outside the parameter space.
template <class Feasible>
IrlsResult irls(Family fam, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                const Eigen::VectorXd& w, Eigen::VectorXd beta, int max_iter,
                const GlmOptions& opt, Feasible feasible) {
    IrlsResult res;
    Eigen::VectorXd eta = x * beta;
    double dev = deviance(fam, eta, y, w);
    Eigen::VectorXd v, s;
    for (int it = 1; it <= max_iter; ++it) {
        res.iterations = it;
        score_factors(fam, eta, y, v, s);
        const Eigen::VectorXd g = weighted_cross(x, (w.array() * s.array()).matrix());
        const Eigen::MatrixXd h = weighted_gram(x, (w.array() * v.array()).matrix());
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success) break;
        const Eigen::VectorXd step = ldlt.solve(g);
        if (!step.allFinite()) break;
        res.last_step = step.cwiseAbs().maxCoeff();
        res.step = step;
        if (g.cwiseAbs().maxCoeff() < opt.score_tolerance) {
            res.converged = true;
            break;
        }

        double t = 1.0;
        Eigen::VectorXd cand, cand_eta;
        double cand_dev = 0.0;
        bool moved = false;
        while (t >= 1e-10) {
            cand = beta + t * step;
            cand_eta = x * cand;
            if (feasible(cand_eta, w)) {
                cand_dev = deviance(fam, cand_eta, y, w);
                if (std::isfinite(cand_dev) && cand_dev <= dev + 1e-12 * std::abs(dev)) {
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!moved) {
            // No acceptable step along the Newton direction: stalled.
            res.converged = true;
            break;
        }
        const double change = std::abs(cand_dev - dev) / (std::abs(cand_dev) + 0.1);
        beta = std::move(cand);
        eta = std::move(cand_eta);
        dev = cand_dev;
        if (change < opt.deviance_tolerance) {
            res.converged = true;
            break;
        }
    }
    res.beta = std::move(beta);
    res.eta = std::move(eta);
    res.deviance = dev;
    return res;
}

// Separation: linear predictor beyond the bound on the support, or a
// deviance that stopped changing while Newton steps stayed large (the
// coefficients are running off to infinity).
inline bool separated(const IrlsResult& res, const Eigen::VectorXd& w, double bound) {
    if (res.last_step > 1e-3) return true;
    for (Eigen::Index i = 0; i < res.eta.size(); ++i)
        if (w(i) > 0 && std::abs(res.eta(i)) > bound) return true;
    return false;
}

inline double weighted_mean(const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    const double sw = w.sum();
    return sw > 0 ? w.dot(y) / sw : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace detail

// HC0 sandwich A^-1 B A^-1 with A the weighted expected information and B
// the sum of squared weighted scores.
inline Eigen::MatrixXd sandwich_covariance(const GlmFit& fit, const Eigen::MatrixXd& x,
                                           const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    if (!fit.usable() && !fit.separated) throw NumericError("sandwich: fit did not converge");
    const auto fam = detail::family_of(fit);
    Eigen::VectorXd eta = x * fit.coefficients, v, s;
    detail::score_factors(fam, eta, y, v, s);
    const Eigen::MatrixXd a = detail::weighted_gram(x, (w.array() * v.array()).matrix());
    const Eigen::MatrixXd b =
        detail::weighted_gram(x, (w.array() * s.array()).square().matrix());
    const Eigen::MatrixXd ai = detail::inverse_spd(a);
    Eigen::MatrixXd cov = ai * b * ai;
    return 0.5 * (cov + cov.transpose());
}

inline Eigen::VectorXd sandwich_se(const GlmFit& fit, const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    return sandwich_covariance(fit, x, y, w).diagonal().cwiseSqrt();
}

namespace detail {

inline void finish(GlmFit& fit, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                   const Eigen::VectorXd& w, double scale) {
    const auto fam = family_of(fit);
    Eigen::VectorXd eta = x * fit.coefficients, v, s;
    score_factors(fam, eta, y, v, s);
    fit.covariance = scale * inverse_spd(weighted_gram(x, (w.array() * v.array()).matrix()));
    fit.robust_covariance = sandwich_covariance(fit, x, y, w);
}

// Marks a separated fit: the diverging columns are those still taking
// Newton steps above 1e-3 (all columns when the flag came from the linear
// predictor bound alone). Covariances are kept when the iterations settled
// and the information matrix is still invertible.
inline void finish_separated(GlmFit& fit, const IrlsResult& res, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& w) {
    fit.separated = true;
    fit.converged = false;
    fit.diverging.clear();
    for (Eigen::Index j = 0; j < res.step.size(); ++j)
        if (std::abs(res.step(j)) > 1e-3) fit.diverging.push_back(j);
    if (fit.diverging.empty())
        for (Eigen::Index j = 0; j < x.cols(); ++j) fit.diverging.push_back(j);
    if (!res.converged || static_cast<Eigen::Index>(fit.diverging.size()) == x.cols()) return;
    try {
        finish(fit, x, y, w, 1.0);
        if (!fit.covariance.allFinite() || !fit.robust_covariance.allFinite()) throw NumericError("");
    } catch (const NumericError&) {
        fit.covariance.resize(0, 0);
        fit.robust_covariance.resize(0, 0);
    }
}

}  // namespace detail

inline GlmFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& w, std::span<const std::string> labels = {},
                           const GlmOptions& opt = {}) {
    detail::check_inputs(x, y, w);
    detail::check_rank(x, w, labels, opt.rank_tolerance);
    auto res = detail::irls(detail::Family::binomial_logit, x, y, w,
                            Eigen::VectorXd::Zero(x.cols()), opt.max_iter_logistic, opt,
                            [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return true; });
    GlmFit fit;
    fit.link = Link::logit;
    fit.labels = detail::column_names(labels, x.cols());
    fit.coefficients = res.beta;
    fit.iterations = res.iterations;
    fit.deviance = res.deviance;
    fit.converged = res.converged;
    if (detail::separated(res, w, opt.separation_bound))
        detail::finish_separated(fit, res, x, y, w);
    else if (fit.converged)
        detail::finish(fit, x, y, w, 1.0);
    return fit;
}

inline GlmFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                           std::span<const std::string> labels = {}) {
    return fit_logistic(x, y, Eigen::VectorXd::Ones(x.rows()), labels);
}

// Weighted Poisson regression with log link; used as the log-binomial fallback.
inline GlmFit fit_poisson(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                          const Eigen::VectorXd& w, std::span<const std::string> labels = {},
                          const GlmOptions& opt = {}) {
    detail::check_inputs(x, y, w);
    detail::check_rank(x, w, labels, opt.rank_tolerance);
    GlmFit fit;
    fit.link = Link::log;
    fit.fallback = true;
    fit.labels = detail::column_names(labels, x.cols());
    const double ybar = detail::weighted_mean(y, w);
    if (!(ybar > 0)) {
        fit.coefficients = Eigen::VectorXd::Zero(x.cols());
        return fit;
    }
    Eigen::VectorXd start = Eigen::VectorXd::Zero(x.cols());
    start(0) = std::log(ybar);
    auto res = detail::irls(detail::Family::poisson_log, x, y, w, start, opt.max_iter_poisson, opt,
                            [](const Eigen::VectorXd&, const Eigen::VectorXd&) { return true; });
    fit.coefficients = res.beta;
    fit.iterations = res.iterations;
    fit.deviance = res.deviance;
    fit.converged = res.converged;
    if (detail::separated(res, w, opt.separation_bound))
        detail::finish_separated(fit, res, x, y, w);
    else if (fit.converged)
        detail::finish(fit, x, y, w, 1.0);
    return fit;
}

// Log-binomial MLE. Iterates stay inside {max fitted risk <= 1 - 1e-10}.
// A solution whose fitted risks press against that bound is not an interior
// maximum and counts as non-convergence, which triggers the Poisson
// fallback (fallback = true; converged, separated and diverging then
// describe the Poisson fit).
inline GlmFit fit_log_binomial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& w, std::span<const std::string> labels = {},
                               const GlmOptions& opt = {}) {
    detail::check_inputs(x, y, w);
    detail::check_rank(x, w, labels, opt.rank_tolerance);
    const double ybar = detail::weighted_mean(y, w);
    const double cap = std::log(opt.probability_cap);
    if (ybar > 0 && ybar < 1) {
        Eigen::VectorXd start = Eigen::VectorXd::Zero(x.cols());
        start(0) = std::log(ybar);
        auto feasible = [cap](const Eigen::VectorXd& eta, const Eigen::VectorXd& w) {
            for (Eigen::Index i = 0; i < eta.size(); ++i)
                if (w(i) > 0 && !(eta(i) <= cap)) return false;
            return true;
        };
        auto res = detail::irls(detail::Family::binomial_log, x, y, w, start,
                                opt.max_iter_log_binomial, opt, feasible);
        double max_eta = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < res.eta.size(); ++i)
            if (w(i) > 0) max_eta = std::max(max_eta, res.eta(i));
        const bool interior = std::exp(max_eta) < opt.boundary_margin;
        if (res.converged && interior && !detail::separated(res, w, opt.separation_bound)) {
            GlmFit fit;
            fit.link = Link::log;
            fit.labels = detail::column_names(labels, x.cols());
            fit.coefficients = res.beta;
            fit.iterations = res.iterations;
            fit.deviance = res.deviance;
            fit.converged = true;
            detail::finish(fit, x, y, w, 1.0);
            return fit;
        }
    }
    return fit_poisson(x, y, w, labels, opt);
}

inline GlmFit fit_log_binomial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                               std::span<const std::string> labels = {}) {
    return fit_log_binomial(x, y, Eigen::VectorXd::Ones(x.rows()), labels);
}

// Linear probability model by weighted least squares.
inline GlmFit fit_identity_binomial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& w,
                                    std::span<const std::string> labels = {},
                                    const GlmOptions& opt = {}) {
    detail::check_inputs(x, y, w);
    detail::check_rank(x, w, labels, opt.rank_tolerance);
    const Eigen::MatrixXd a = detail::weighted_gram(x, w);
    const Eigen::VectorXd rhs = x.transpose() * (w.array() * y.array()).matrix();
    GlmFit fit;
    fit.link = Link::identity;
    fit.labels = detail::column_names(labels, x.cols());
    fit.coefficients = a.ldlt().solve(rhs);
    fit.iterations = 1;
    fit.converged = fit.coefficients.allFinite();
    if (!fit.converged) return fit;
    const Eigen::VectorXd r = y - x * fit.coefficients;
    fit.deviance = (w.array() * r.array().square()).sum();
    Eigen::Index support = (w.array() > 0).count();
    const double dof = static_cast<double>(std::max<Eigen::Index>(support - x.cols(), 1));
    const double sigma2 = fit.deviance / dof;
    detail::finish(fit, x, y, w, sigma2);
    return fit;
}

inline GlmFit fit_identity_binomial(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    std::span<const std::string> labels = {}) {
    return fit_identity_binomial(x, y, Eigen::VectorXd::Ones(x.rows()), labels);
}

struct Prediction {
    Eigen::VectorXd p;
    std::size_t clamped = 0;
};

inline Prediction predict_prob(Link link, const Eigen::VectorXd& beta, const Eigen::MatrixXd& x) {
    if (x.cols() != beta.size())
        throw DataError("predict: design has " + std::to_string(x.cols()) + " columns, model has " +
                        std::to_string(beta.size()));
    Prediction out;
    const Eigen::VectorXd eta = x * beta;
    out.p.resize(eta.size());
    constexpr double lo = 1e-10, hi = 1.0 - 1e-10;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        double p = 0.0;
        switch (link) {
            case Link::logit: p = expit(eta(i)); break;
            case Link::log:
                p = std::exp(eta(i));
                if (p > hi) {
                    p = hi;
                    ++out.clamped;
                }
                break;
            case Link::identity:
                p = eta(i);
                if (p < lo || p > hi) {
                    p = std::clamp(p, lo, hi);
                    ++out.clamped;
                }
                break;
        }
        out.p(i) = p;
    }
    return out;
}

inline Prediction predict_prob(const GlmFit& fit, const Eigen::MatrixXd& x) {
    return predict_prob(fit.link, fit.coefficients, x);
}

// Weighted Bernoulli log-likelihood and its gradient, for the logit and log
// links; exposed for diagnostics and tests.
inline double log_likelihood(Link link, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const Eigen::VectorXd& beta) {
    const auto fam = link == Link::logit ? detail::Family::binomial_logit
                     : link == Link::log ? detail::Family::binomial_log
                                         : detail::Family::gaussian_identity;
    return -0.5 * detail::deviance(fam, x * beta, y, w);
}

inline Eigen::VectorXd score(Link link, const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& w, const Eigen::VectorXd& beta) {
    const auto fam = link == Link::logit ? detail::Family::binomial_logit
                     : link == Link::log ? detail::Family::binomial_log
                                         : detail::Family::gaussian_identity;
    Eigen::VectorXd v, s;
    detail::score_factors(fam, x * beta, y, v, s);
    return x.transpose() * (w.array() * s.array()).matrix();
}

}  // namespace qba
