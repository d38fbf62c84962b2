#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dcrm/crm.hpp"

namespace dcrm {

enum class Benchmark { Naive, Dglm, Static, Proposed };

std::string to_string(Benchmark b);
Benchmark benchmark_from_string(const std::string& s);

/// One policyholder's ordered periods (covariates already resolved).
using PolicySeries = std::vector<Period>;

/// Joint log-likelihood over the portfolio for the dynamic model, summed in a
/// fixed block order (thread-count invariant).
double portfolio_loglik(std::span<const PolicySeries> data, const CrmParams& params,
                        int threads = 1);

/// Analytic infinite-prior limit: independent Poisson and gamma likelihoods
/// per period (theta == 1). Used by the Naive and DGLM benchmarks.
double independence_loglik(std::span<const PolicySeries> data, const CrmParams& params,
                           int threads = 1);

struct OptimOptions {
    int max_iter = 4000;
    double tol = 1e-12;            // simplex function-value spread
    double grad_tol = 1e-6;        // quasi-Newton refinement target
    std::vector<std::vector<double>> starts; // optional extra starts in natural scale
};

struct FitResult {
    CrmParams params;
    double loglik = 0.0;
    bool converged = false;
    bool boundary = false; // q within 1e-3 of 1: effectively static
    int evaluations = 0;
    double grad_norm = 0.0; // finite-difference gradient at the optimum
    Benchmark benchmark = Benchmark::Proposed;
};

/// Step-two estimation. `base` carries the step-one results (zetas, eta,
/// psi2, variant); the free dependence parameters depend on the benchmark:
///   Naive    - nothing free; eta forced to 0; analytic infinite-prior limit
///   DGLM     - nothing free; eta kept from the GLM; analytic limit
///   Static   - q's fixed at 1; alpha0's free
///   Proposed - q's and alpha0's free
/// beta0_1 = alpha0_1 and beta0_2 = alpha0_2 - 1 throughout, so the prior
/// random-effect means are one.
FitResult fit_dependence(std::span<const PolicySeries> data, const CrmParams& base,
                         Benchmark benchmark, const OptimOptions& opts = {},
                         int threads = 1);

/// Generic helpers, exposed for tests.
namespace optim {

struct Result {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
    int evaluations = 0;
};

Result nelder_mead(const std::function<double(std::span<const double>)>& f,
                   std::span<const double> x0, double scale, int max_iter, double tol);

Result bfgs_refine(const std::function<double(std::span<const double>)>& f,
                   std::span<const double> x0, double grad_tol, int max_iter);

std::vector<double> fd_gradient(const std::function<double(std::span<const double>)>& f,
                                std::span<const double> x);

} // namespace optim

} // namespace dcrm
