#include "dcrm/glm.hpp"

#include <cmath>

#include "dcrm/error.hpp"

namespace dcrm {

namespace {

double normal_two_sided_p(double z) {
    return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

void check_design(const Eigen::MatrixXd& X) {
    if (!X.allFinite()) throw estimation_error("design matrix contains non-finite entries");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < X.cols()) throw estimation_error("design matrix is rank deficient");
}

/// Weighted log-link IRLS shared by the Poisson and gamma fits. `w` are the
/// prior weights; `irls_weight` maps (mu, w) to the working weight.
template <typename WeightFn>
GlmFit irls_log_link(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                     const Eigen::VectorXd& w, WeightFn irls_weight,
                     std::vector<std::string> names, const GlmOptions& opts) {
    check_design(X);
    const long n = X.rows();
    const long p = X.cols();

    // start at the weighted-mean intercept solution
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    double ybar = (w.array() * y.array()).sum() / w.sum();
    beta(0) = std::log(std::max(ybar, 1e-12));

    Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu = eta.array().exp();

    GlmFit fit;
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        Eigen::VectorXd W(n);
        for (long i = 0; i < n; ++i) W(i) = std::max(irls_weight(mu(i), w(i)), 1e-12);
        Eigen::VectorXd z = eta.array() + (y - mu).array() / mu.array();
        Eigen::MatrixXd XtWX = X.transpose() * W.asDiagonal() * X;
        Eigen::VectorXd XtWz = X.transpose() * W.asDiagonal() * z;
        Eigen::VectorXd beta_new = XtWX.ldlt().solve(XtWz);
        double step = (beta_new - beta).lpNorm<Eigen::Infinity>();
        beta = beta_new;
        eta = X * beta;
        mu = eta.array().exp();
        fit.iterations = iter;
        if (step < opts.tol) {
            fit.converged = true;
            break;
        }
    }

    // score residual under a log link: X' (W (y - mu) / mu) with the working
    // weight W, which is X'(y - mu) for Poisson and X' w (y/mu - 1) for gamma
    Eigen::VectorXd Wfin(n);
    for (long i = 0; i < n; ++i) Wfin(i) = irls_weight(mu(i), w(i));
    Eigen::VectorXd score =
        X.transpose() * (Wfin.array() * (y - mu).array() / mu.array()).matrix();
    fit.max_score = score.lpNorm<Eigen::Infinity>();
    if (!fit.converged || fit.max_score > opts.score_tol * std::max(1.0, w.sum()))
        throw convergence_error("IRLS failed to satisfy the score equations");

    Eigen::VectorXd W(n);
    for (long i = 0; i < n; ++i) W(i) = std::max(irls_weight(mu(i), w(i)), 1e-12);
    Eigen::MatrixXd info = X.transpose() * W.asDiagonal() * X;
    Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(p, p));

    fit.names = std::move(names);
    fit.coef = beta;
    fit.n = n;

    // Pearson dispersion on the weighted residuals (fixed at 1 for Poisson by
    // the caller)
    double pearson = 0.0;
    for (long i = 0; i < n; ++i) {
        double r = (y(i) - mu(i)) / mu(i);
        pearson += w(i) * r * r;
    }
    fit.dispersion = n > p ? pearson / static_cast<double>(n - p) : 1.0;

    fit.se.resize(p);
    fit.p_value.resize(p);
    for (long j = 0; j < p; ++j) {
        fit.se(j) = std::sqrt(std::max(cov(j, j), 0.0));
        fit.p_value(j) = fit.se(j) > 0.0 ? normal_two_sided_p(beta(j) / fit.se(j)) : 0.0;
    }
    return fit;
}

} // namespace

GlmFit fit_poisson(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   std::vector<std::string> names, const GlmOptions& opts) {
    if (y.minCoeff() < 0) throw estimation_error("counts must be non-negative");
    Eigen::VectorXd w = Eigen::VectorXd::Ones(X.rows());
    // Poisson log link: working weight mu
    GlmFit fit = irls_log_link(
        X, y, w, [](double mu, double) { return mu; }, std::move(names), opts);
    // Poisson variance cov is Fisher-based with dispersion 1
    fit.dispersion = 1.0;
    return fit;
}

GlmFit fit_gamma_severity(const Eigen::MatrixXd& X, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2, std::vector<std::string> names,
                          bool include_count, const GlmOptions& opts) {
    const long n = X.rows();
    if (y1.size() != n || y2.size() != n)
        throw estimation_error("response lengths do not match the design");

    std::vector<long> keep;
    for (long i = 0; i < n; ++i)
        if (y1(i) >= 1.0) keep.push_back(i);
    if (keep.empty()) throw estimation_error("no positive-claim rows: severity unidentifiable");

    const long m = static_cast<long>(keep.size());
    const long p0 = X.cols();
    const long p = include_count ? p0 + 1 : p0;
    Eigen::MatrixXd Xs(m, p);
    Eigen::VectorXd resp(m), w(m);
    for (long k = 0; k < m; ++k) {
        long i = keep[static_cast<size_t>(k)];
        Xs.block(k, 0, 1, p0) = X.row(i);
        if (include_count) Xs(k, p0) = y1(i);
        resp(k) = y2(i) / y1(i); // average claim
        w(k) = y1(i);
    }
    if (include_count) names.push_back("Count");

    // Gamma log link with prior weights: working weight w (mu^2/V(mu) = 1)
    GlmFit fit = irls_log_link(
        Xs, resp, w, [](double, double wi) { return wi; }, std::move(names), opts);

    // scale the covariance by the dispersion
    for (long j = 0; j < fit.se.size(); ++j) {
        fit.se(j) *= std::sqrt(fit.dispersion);
        fit.p_value(j) =
            fit.se(j) > 0.0 ? normal_two_sided_p(fit.coef(j) / fit.se(j)) : 0.0;
    }
    return fit;
}

} // namespace dcrm
