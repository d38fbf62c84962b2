#include "dcrm/crm.hpp"

#include <cmath>

#include "dcrm/error.hpp"

namespace dcrm {

std::string to_string(Variant v) {
    switch (v) {
        case Variant::Plain: return "plain";
        case Variant::EwmaSeverity: return "ewma";
        case Variant::ThreePart: return "three-part";
        case Variant::EwmaThreePart: return "ewma-three-part";
    }
    return "plain";
}

Variant variant_from_string(const std::string& s) {
    if (s == "plain") return Variant::Plain;
    if (s == "ewma") return Variant::EwmaSeverity;
    if (s == "three-part") return Variant::ThreePart;
    if (s == "ewma-three-part") return Variant::EwmaThreePart;
    throw domain_error("unknown variant: " + s);
}

void CrmParams::validate() const {
    if (!(q1 > 0.0) || q1 > 1.0 || !(q2 > 0.0) || q2 > 1.0)
        throw domain_error("q1 and q2 must be in (0,1]");
    if (!(alpha0_1 > 0.0) || !(beta0_1 > 0.0) || !(beta0_2 > 0.0))
        throw domain_error("initial hyperparameters must be positive");
    if (!(alpha0_2 > 1.0)) throw domain_error("alpha0_2 must be > 1");
    if (!(psi2 > 0.0)) throw domain_error("psi2 must be positive");
}

CrmState initial_state(const CrmParams& p) {
    p.validate();
    return CrmState{GammaState{p.alpha0_1, p.beta0_1, 0},
                    InvGammaState{p.alpha0_2, p.beta0_2, 0}, 0};
}

void check_two_part(const Period& p) {
    if (p.y1 < 0) throw domain_error("claim count must be >= 0");
    if (p.y1 == 0 && p.y2 != 0.0)
        throw domain_error("positive severity with zero count violates the two-part structure");
    if (p.y1 >= 1 && !(p.y2 > 0.0))
        throw domain_error("zero severity with positive count violates the two-part structure");
}

Rates rates(const CrmParams& p, std::span<const double> x) {
    if (x.size() != p.zeta1.size() || x.size() != p.zeta2.size())
        throw domain_error("covariate dimension does not match coefficient vectors");
    double e1 = 0.0, e2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        e1 += x[i] * p.zeta1[i];
        e2 += x[i] * p.zeta2[i];
    }
    Rates r{std::exp(e1), std::exp(e2)};
    if (!std::isfinite(r.lambda1) || !std::isfinite(r.lambda2_star))
        throw domain_error("covariates yield non-finite rates");
    return r;
}

double lambda2(const CrmParams& p, double lambda2_star, long long y1) {
    return lambda2_star * std::exp(p.eta * static_cast<double>(y1));
}

Law Forecast::severity_given(long long y1) const {
    if (y1 < 0) throw domain_error("claim count must be >= 0");
    if (y1 == 0) return PointMassZero{};
    double lam2 = lambda2_star * std::exp(eta * static_cast<double>(y1));
    return GB2{1.0, q2_star * beta2 * lam2 * psi, static_cast<double>(y1) / psi,
               q2_t * alpha2};
}

Forecast predict(const CrmState& s, const CrmParams& p, std::span<const double> x) {
    Rates r = rates(p, x);
    QStep qs = q_step(p.severity_schedule(), s.sev.alpha);
    Forecast f;
    f.count = forecast_obs(s.freq, p.q1, r.lambda1);
    f.q2_t = qs.q_t;
    f.q2_star = qs.q_star;
    f.alpha2 = s.sev.alpha;
    f.beta2 = s.sev.beta;
    f.lambda2_star = r.lambda2_star;
    f.psi = p.psi2;
    f.eta = p.eta;
    return f;
}

CrmState update(const CrmState& s, const CrmParams& p, std::span<const double> x,
                const Period& obs) {
    check_two_part(obs);
    Rates r = rates(p, x);
    CrmState out;
    out.freq = dcrm::update(s.freq, p.q1, r.lambda1, obs.y1);
    QSchedule sched = p.severity_schedule();
    if (obs.y1 == 0 && p.freezes_severity_on_zero()) {
        out.sev = s.sev;
        out.sev.t = s.sev.t + 1;
    } else if (obs.y1 == 0) {
        // severity state evolves with no data: pure predict step
        QStep qs = q_step(sched, s.sev.alpha);
        out.sev = InvGammaState{qs.q_t * s.sev.alpha, qs.q_star * s.sev.beta, s.sev.t + 1};
    } else {
        double lam2 = lambda2(p, r.lambda2_star, obs.y1);
        QStep qs = q_step(sched, s.sev.alpha);
        out.sev = InvGammaState{qs.q_t * s.sev.alpha + static_cast<double>(obs.y1) / p.psi2,
                                qs.q_star * s.sev.beta + obs.y2 / (lam2 * p.psi2),
                                s.sev.t + 1};
    }
    out.t = s.t + 1;
    return out;
}

double loglik(std::span<const Period> history, const CrmParams& p) {
    CrmState s = initial_state(p);
    double ll = 0.0;
    for (const Period& obs : history) {
        check_two_part(obs);
        Forecast f = predict(s, p, obs.x);
        ll += log_pmf_nb(obs.y1, f.count.mean, f.count.size);
        if (obs.y1 >= 1) {
            Law sev = f.severity_given(obs.y1);
            const GB2& g = std::get<GB2>(sev);
            ll += log_pdf_gb2(obs.y2, g.a, g.scale, g.p, g.q);
        }
        s = update(s, p, obs.x, obs);
    }
    return ll;
}

double laplace_count_term(const GammaState& freq, double q1, double lambda1, double eta) {
    double bound = std::log((q1 * freq.beta + lambda1) / lambda1);
    if (!(eta < bound)) throw existence_error(eta, bound);
    // differentiate the negative binomial pgf at z = e^eta:
    //   E[y z^y] = a lambda z b^a / (b + lambda - lambda z)^(a+1)
    double a = q1 * freq.alpha;
    double denom = lambda1 + q1 * freq.beta - lambda1 * std::exp(eta);
    return a * lambda1 * std::exp(eta) *
           std::pow(q1 * freq.beta / denom, a) / denom;
}

Premium premium(const CrmState& s, const CrmParams& p, std::span<const double> x_tau) {
    Rates r = rates(p, x_tau);
    double L = laplace_count_term(s.freq, p.q1, r.lambda1, p.eta);
    Premium out;
    out.freq_mean = r.lambda1 * s.freq.alpha / s.freq.beta;
    out.sev_mean = r.lambda2_star / (s.sev.alpha - 1.0) * L * s.sev.beta;
    out.credibility_freq = s.freq.alpha / s.freq.beta;
    out.credibility_sev = s.sev.beta / (s.sev.alpha - 1.0);
    return out;
}

PremiumWeights premium_weights(std::span<const Period> history,
                               std::span<const std::vector<double>> xs, const CrmParams& p,
                               int tau) {
    if (tau < 1 || static_cast<size_t>(tau - 1) > history.size())
        throw domain_error("tau out of range for history");
    if (xs.size() < static_cast<size_t>(tau - 1))
        throw domain_error("covariate path shorter than history");

    // Frequency side: same formula as the count model.
    FreqParams fp{p.q1, p.alpha0_1, p.beta0_1, {}};
    fp.lambda.reserve(static_cast<size_t>(tau - 1));
    for (int t = 1; t <= tau - 1; ++t)
        fp.lambda.push_back(rates(p, xs[static_cast<size_t>(t - 1)]).lambda1);

    PremiumWeights w;
    w.freq = forecast_weights(fp, tau);

    // Severity side: products of the realized q_k* along the variant's path;
    // frozen periods contribute a factor of one.
    CrmState s = initial_state(p);
    std::vector<double> q_star_path(static_cast<size_t>(tau - 1), 1.0);
    QSchedule sched = p.severity_schedule();
    for (int t = 1; t <= tau - 1; ++t) {
        const Period& obs = history[static_cast<size_t>(t - 1)];
        if (!(obs.y1 == 0 && p.freezes_severity_on_zero()))
            q_star_path[static_cast<size_t>(t - 1)] = q_step(sched, s.sev.alpha).q_star;
        s = update(s, p, xs[static_cast<size_t>(t - 1)], obs);
    }
    double denom = (s.sev.alpha - 1.0) * p.psi2;
    w.sev.b.resize(static_cast<size_t>(tau - 1));
    double prod = 1.0;
    for (int t = tau - 1; t >= 1; --t) {
        w.sev.b[static_cast<size_t>(t - 1)] = prod / denom;
        prod *= q_star_path[static_cast<size_t>(t - 1)];
    }
    w.sev.b0 = p.beta0_2 * prod / (s.sev.alpha - 1.0);
    return w;
}

namespace {

// Beta(qa, (1-q)a) degenerates to a point mass at one when q == 1 (the
// static limit).
double sample_thinning_beta(double q, double alpha, Rng& rng) {
    if (q >= 1.0) return 1.0;
    return sample(Beta{q * alpha, (1.0 - q) * alpha}, rng);
}

} // namespace

std::vector<SimStep> simulate(const CrmParams& p,
                              std::span<const std::vector<double>> x_path, int horizon,
                              Rng& rng) {
    if (horizon < 0 || x_path.size() < static_cast<size_t>(horizon))
        throw domain_error("covariate path shorter than horizon");
    CrmState s = initial_state(p);
    double theta1 = sample(Gamma{p.alpha0_1, p.beta0_1}, rng);
    double theta2 = sample(InverseGamma{p.alpha0_2, p.beta0_2}, rng);
    QSchedule sched = p.severity_schedule();

    std::vector<SimStep> out;
    out.reserve(static_cast<size_t>(horizon));
    for (int t = 1; t <= horizon; ++t) {
        Rates r = rates(p, x_path[static_cast<size_t>(t - 1)]);

        // frequency transition + observation
        double b1 = sample_thinning_beta(p.q1, s.freq.alpha, rng);
        theta1 = theta1 * b1 / p.q1;
        std::poisson_distribution<long long> pois(r.lambda1 * theta1);
        long long y1 = pois(rng);

        // severity transition + observation; three-part variants keep the
        // severity effect fixed on zero-claim periods
        double y2 = 0.0;
        bool evolve = !(y1 == 0 && p.freezes_severity_on_zero());
        if (evolve) {
            QStep qs = q_step(sched, s.sev.alpha);
            double b2 = sample_thinning_beta(qs.q_t, s.sev.alpha, rng);
            theta2 = theta2 * qs.q_star / b2;
        }
        if (y1 >= 1) {
            double lam2 = lambda2(p, r.lambda2_star, y1);
            y2 = sample(Gamma{static_cast<double>(y1) / p.psi2,
                              1.0 / (theta2 * lam2 * p.psi2)}, rng);
        }

        Period obs{x_path[static_cast<size_t>(t - 1)], y1, y2};
        s = update(s, p, obs.x, obs);
        out.push_back(SimStep{theta1, theta2, y1, y2});
    }
    return out;
}

} // namespace dcrm
