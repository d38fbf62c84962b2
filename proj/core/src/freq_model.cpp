#include "dcrm/freq_model.hpp"

#include <cmath>
#include <string>

#include "dcrm/error.hpp"

namespace dcrm {

namespace {

void check_params(const FreqParams& p) {
    if (!(p.q > 0.0) || p.q > 1.0) throw domain_error("q must be in (0,1]");
    if (!(p.alpha0 > 0.0) || !(p.beta0 > 0.0))
        throw domain_error("initial gamma hyperparameters must be positive");
}

} // namespace

FreqParams FreqParams::constant_rate(double q, double alpha0, double beta0, double lambda,
                                     int periods) {
    return FreqParams{q, alpha0, beta0,
                      std::vector<double>(static_cast<size_t>(periods), lambda)};
}

double FreqParams::rate(int t) const {
    if (t < 1 || static_cast<size_t>(t) > lambda.size())
        throw domain_error("period index out of range");
    return lambda[static_cast<size_t>(t) - 1];
}

Gamma predict_state(const GammaState& s, double q) {
    return Gamma{q * s.alpha, q * s.beta};
}

NegBinomial forecast_obs(const GammaState& s, double q, double lambda) {
    return NegBinomial{lambda * s.alpha / s.beta, q * s.alpha};
}

GammaState update(const GammaState& s, double q, double lambda, long long y) {
    if (y < 0) throw domain_error("count must be >= 0");
    if (!(lambda > 0.0)) throw domain_error("lambda must be positive");
    return GammaState{q * s.alpha + static_cast<double>(y), q * s.beta + lambda, s.t + 1};
}

ForecastWeights forecast_weights(const FreqParams& params, int tau) {
    check_params(params);
    if (tau < 1) throw domain_error("tau must be >= 1");
    double denom = std::pow(params.q, tau - 1) * params.beta0;
    for (int t = 1; t <= tau - 1; ++t)
        denom += std::pow(params.q, tau - 1 - t) * params.rate(t);
    ForecastWeights w;
    w.b0 = std::pow(params.q, tau - 1) * params.alpha0 / denom;
    w.b.resize(static_cast<size_t>(tau - 1));
    for (int t = 1; t <= tau - 1; ++t)
        w.b[static_cast<size_t>(t - 1)] = std::pow(params.q, tau - 1 - t) * params.rate(t) / denom;
    return w;
}

double forecast_mean(const ForecastWeights& w, double lambda_tau,
                     std::span<const double> y, std::span<const double> lambda) {
    if (y.size() != w.b.size() || lambda.size() != w.b.size())
        throw domain_error("history length does not match weights");
    double acc = w.b0;
    for (size_t i = 0; i < w.b.size(); ++i) acc += w.b[i] * y[i] / lambda[i];
    return lambda_tau * acc;
}

double loglik(const FreqParams& params, std::span<const long long> counts) {
    check_params(params);
    if (counts.size() > params.lambda.size())
        throw domain_error("more counts than per-period rates");
    GammaState s = params.initial_state();
    double ll = 0.0;
    for (size_t i = 0; i < counts.size(); ++i) {
        double lam = params.lambda[i];
        NegBinomial nb = forecast_obs(s, params.q, lam);
        ll += log_pmf_nb(counts[i], nb.mean, nb.size);
        s = update(s, params.q, lam, counts[i]);
    }
    return ll;
}

} // namespace dcrm
