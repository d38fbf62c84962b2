#pragma once

#include <span>
#include <vector>

#include "dcrm/dist.hpp"
#include "dcrm/freq_model.hpp" // ForecastWeights

namespace dcrm {

// Positive-value model: inverse-gamma filtering state, beta-division
// transition with state-dependent (q_t, q_t*), gamma observation.

struct InvGammaState {
    double alpha = 3.0; // shape, > 1
    double beta = 2.0;  // scale, > 0
    int t = 0;
};

enum class QScheduleKind {
    Standard,        // martingale + exact 1/q variance inflation
    AlternativeEwma, // martingale + exponentially decaying forecast weights
};

struct QSchedule {
    QScheduleKind kind = QScheduleKind::Standard;
    double q = 0.8; // in (0,1]; q == 1 is the static limit
};

struct QStep {
    double q_t;      // shape multiplier
    double q_star;   // scale multiplier
    bool boundary;   // Standard schedule with alpha <= 2: q_t leaves the open
                     // interval (2/alpha, 1), the transition degenerates
};

/// Schedule evaluated at the previous shape parameter. Throws invariant_error
/// when alpha_prev <= 1.
QStep q_step(const QSchedule& schedule, double alpha_prev);

/// One-step-ahead law of the random effect: IG(q_t a, q_t* b).
InverseGamma predict_state(const InvGammaState& s, const QSchedule& schedule);

/// One-step-ahead law of the observation: GB2(1, q_t* b lambda psi, 1/psi, q_t a).
GB2 forecast_obs(const InvGammaState& s, const QSchedule& schedule, double lambda,
                 double psi);

/// Filtering recursion: alpha' = q_t a + 1/psi, beta' = q_t* b + y/(lambda psi).
/// Requires y > 0 (zero severities are resolved at the CRM layer).
InvGammaState update(const InvGammaState& s, const QSchedule& schedule, double lambda,
                     double psi, double y);

struct SevParams {
    QSchedule schedule;
    double alpha0; // > 1
    double beta0;  // > 0
    std::vector<double> lambda;
    double psi; // observation dispersion, > 0

    static SevParams constant_rate(QSchedule schedule, double alpha0, double beta0,
                                   double lambda, double psi, int periods);
    double rate(int t) const;
    InvGammaState initial_state() const { return InvGammaState{alpha0, beta0, 0}; }
};

/// Linear representation of E[y_tau | past]. The weights depend on the
/// realized alpha-path, so the observed history is required. They are built
/// from products of the realized q_k* up to the forecast date and reproduce
/// the state-threaded forecast mean exactly.
ForecastWeights forecast_weights(const SevParams& params, std::span<const double> y,
                                 int tau);

/// Exact log-likelihood: sum of one-step GB2 log densities.
double loglik(const SevParams& params, std::span<const double> ys);

} // namespace dcrm
