#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dcrm {

struct GlmOptions {
    int max_iter = 100;
    double tol = 1e-10;        // coefficient step tolerance
    double score_tol = 1e-8;   // score-equation residual at the optimum
};

struct GlmFit {
    std::vector<std::string> names;
    Eigen::VectorXd coef;
    Eigen::VectorXd se;
    Eigen::VectorXd p_value;
    double dispersion = 1.0; // Pearson estimate (1 for Poisson)
    int iterations = 0;
    bool converged = false;
    double max_score = 0.0; // largest absolute score component at the optimum
    long n = 0;
};

/// Poisson log-link regression fitted by IRLS.
GlmFit fit_poisson(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                   std::vector<std::string> names, const GlmOptions& opts = {});

/// Gamma log-link regression for the severity part. Only rows with y1 >= 1
/// enter; the response is the average claim y2/y1 with prior weight y1.
/// When include_count is set, the claim count is appended as a covariate and
/// its coefficient is the dependence parameter eta. The dispersion psi is the
/// Pearson estimate on the weighted residuals.
GlmFit fit_gamma_severity(const Eigen::MatrixXd& X, const Eigen::VectorXd& y1,
                          const Eigen::VectorXd& y2, std::vector<std::string> names,
                          bool include_count, const GlmOptions& opts = {});

} // namespace dcrm
