#include "dcrm/severity_model.hpp"

#include <cmath>
#include <string>

#include "dcrm/error.hpp"

namespace dcrm {

QStep q_step(const QSchedule& schedule, double alpha_prev) {
    if (!(alpha_prev > 1.0))
        throw invariant_error("severity shape must stay > 1, got " +
                              std::to_string(alpha_prev));
    if (!(schedule.q > 0.0) || schedule.q > 1.0) throw domain_error("q must be in (0,1]");
    double q = schedule.q;
    switch (schedule.kind) {
        case QScheduleKind::Standard: {
            double q_t = (q * (alpha_prev - 2.0) + 2.0) / alpha_prev;
            double q_star = (q * (alpha_prev - 2.0) + 1.0) / (alpha_prev - 1.0);
            return QStep{q_t, q_star, alpha_prev <= 2.0};
        }
        case QScheduleKind::AlternativeEwma: {
            double q_t = (q * (alpha_prev - 1.0) + 1.0) / alpha_prev;
            return QStep{q_t, q, false};
        }
    }
    throw domain_error("unknown schedule kind");
}

InverseGamma predict_state(const InvGammaState& s, const QSchedule& schedule) {
    QStep qs = q_step(schedule, s.alpha);
    return InverseGamma{qs.q_t * s.alpha, qs.q_star * s.beta};
}

GB2 forecast_obs(const InvGammaState& s, const QSchedule& schedule, double lambda,
                 double psi) {
    if (!(lambda > 0.0) || !(psi > 0.0)) throw domain_error("lambda and psi must be positive");
    QStep qs = q_step(schedule, s.alpha);
    return GB2{1.0, qs.q_star * s.beta * lambda * psi, 1.0 / psi, qs.q_t * s.alpha};
}

InvGammaState update(const InvGammaState& s, const QSchedule& schedule, double lambda,
                     double psi, double y) {
    if (!(y > 0.0)) throw domain_error("severity observation must be positive");
    if (!(lambda > 0.0) || !(psi > 0.0)) throw domain_error("lambda and psi must be positive");
    QStep qs = q_step(schedule, s.alpha);
    return InvGammaState{qs.q_t * s.alpha + 1.0 / psi,
                         qs.q_star * s.beta + y / (lambda * psi), s.t + 1};
}

SevParams SevParams::constant_rate(QSchedule schedule, double alpha0, double beta0,
                                   double lambda, double psi, int periods) {
    return SevParams{schedule, alpha0, beta0,
                     std::vector<double>(static_cast<size_t>(periods), lambda), psi};
}

double SevParams::rate(int t) const {
    if (t < 1 || static_cast<size_t>(t) > lambda.size())
        throw domain_error("period index out of range");
    return lambda[static_cast<size_t>(t) - 1];
}

ForecastWeights forecast_weights(const SevParams& params, std::span<const double> y,
                                 int tau) {
    if (tau < 1) throw domain_error("tau must be >= 1");
    if (y.size() + 1 < static_cast<size_t>(tau))
        throw domain_error("history too short for requested forecast date");

    // Thread the filter to collect the realized q_k* path, k = 1..tau-1.
    InvGammaState s = params.initial_state();
    std::vector<double> q_star_path;
    q_star_path.reserve(static_cast<size_t>(tau - 1));
    for (int t = 1; t <= tau - 1; ++t) {
        q_star_path.push_back(q_step(params.schedule, s.alpha).q_star);
        s = update(s, params.schedule, params.rate(t), params.psi,
                   y[static_cast<size_t>(t - 1)]);
    }
    double denom = (s.alpha - 1.0) * params.psi;

    ForecastWeights w;
    w.b.resize(static_cast<size_t>(tau - 1));
    double prod = 1.0; // running product of q_k* for k = t+1..tau-1
    for (int t = tau - 1; t >= 1; --t) {
        w.b[static_cast<size_t>(t - 1)] = prod / denom;
        prod *= q_star_path[static_cast<size_t>(t - 1)];
    }
    w.b0 = params.beta0 * prod / (s.alpha - 1.0);
    return w;
}

double loglik(const SevParams& params, std::span<const double> ys) {
    if (ys.size() > params.lambda.size())
        throw domain_error("more observations than per-period rates");
    InvGammaState s = params.initial_state();
    double ll = 0.0;
    for (size_t i = 0; i < ys.size(); ++i) {
        double lam = params.lambda[i];
        GB2 g = forecast_obs(s, params.schedule, lam, params.psi);
        ll += log_pdf_gb2(ys[i], g.a, g.scale, g.p, g.q);
        s = update(s, params.schedule, lam, params.psi, ys[i]);
    }
    return ll;
}

} // namespace dcrm
