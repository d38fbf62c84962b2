#pragma once

#include <span>
#include <vector>

#include "dcrm/dist.hpp"

namespace dcrm {

// Count model: gamma filtering state, beta-thinning transition with constant
// q, Poisson observation with per-period rate lambda_t * theta_t.

struct GammaState {
    double alpha = 1.0; // shape, >= 0
    double beta = 1.0;  // rate, > 0
    int t = 0;          // period index (number of updates applied)
};

struct FreqParams {
    double q;                   // in (0,1]; q == 1 is the static limit
    double alpha0;              // > 0
    double beta0;               // > 0
    std::vector<double> lambda; // lambda[t-1] is the rate multiplier of period t

    static FreqParams constant_rate(double q, double alpha0, double beta0, double lambda,
                                    int periods);
    double rate(int t) const; // t in 1..lambda.size()
    GammaState initial_state() const { return GammaState{alpha0, beta0, 0}; }
};

/// One-step-ahead law of the random effect: Gamma(q a, q b). Mean preserved,
/// variance inflated by 1/q.
Gamma predict_state(const GammaState& s, double q);

/// One-step-ahead law of the count: NB(lambda a/b, q a).
NegBinomial forecast_obs(const GammaState& s, double q, double lambda);

/// Filtering recursion: alpha' = q a + y, beta' = q b + lambda.
GammaState update(const GammaState& s, double q, double lambda, long long y);

/// Linear representation of the one-step forecast mean:
///   E[y_tau | past] = lambda_tau * (b0 + sum_t b[t-1] * y_t / lambda_t).
struct ForecastWeights {
    double b0 = 0.0;
    std::vector<double> b; // b[t-1] weights period t, t = 1..tau-1
};

ForecastWeights forecast_weights(const FreqParams& params, int tau);

double forecast_mean(const ForecastWeights& w, double lambda_tau,
                     std::span<const double> y, std::span<const double> lambda);

/// Exact log-likelihood: sum of one-step NB log pmfs with the state threaded
/// through the filter.
double loglik(const FreqParams& params, std::span<const long long> counts);

} // namespace dcrm
