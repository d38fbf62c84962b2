#pragma once

#include <span>
#include <string>
#include <vector>

#include "dcrm/dist.hpp"
#include "dcrm/freq_model.hpp"
#include "dcrm/severity_model.hpp"

namespace dcrm {

// Bivariate frequency-severity model: independent gamma / inverse-gamma
// filtering states, beta-innovation transitions, Poisson count observation
// and gamma severity observation whose rate multiplier depends on the
// realized count through exp(eta * y1).

enum class Variant {
    Plain,         // severity state evolves every period (Standard schedule)
    EwmaSeverity,  // severity uses the EWMA schedule, evolves every period
    ThreePart,     // Standard schedule; severity state frozen on zero-claim periods
    EwmaThreePart, // EWMA schedule; frozen on zero-claim periods
};

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct CrmParams {
    double q1 = 0.8; // frequency thinning, (0,1]
    double q2 = 0.8; // severity schedule parameter, (0,1]
    double alpha0_1 = 1.0, beta0_1 = 1.0;  // gamma prior for theta1
    double alpha0_2 = 3.0, beta0_2 = 2.0;  // inverse-gamma prior for theta2, alpha0_2 > 1
    std::vector<double> zeta1; // frequency regression coefficients (log link)
    std::vector<double> zeta2; // severity regression coefficients (log link)
    double eta = 0.0;          // claim-count coefficient in the severity rate
    double psi2 = 1.0;         // severity dispersion, > 0
    Variant variant = Variant::Plain;

    QSchedule severity_schedule() const {
        bool ewma = variant == Variant::EwmaSeverity || variant == Variant::EwmaThreePart;
        return QSchedule{ewma ? QScheduleKind::AlternativeEwma : QScheduleKind::Standard, q2};
    }
    bool freezes_severity_on_zero() const {
        return variant == Variant::ThreePart || variant == Variant::EwmaThreePart;
    }
    void validate() const;
};

struct CrmState {
    GammaState freq;
    InvGammaState sev;
    int t = 0;
};

CrmState initial_state(const CrmParams& p);

/// One period of one policyholder's record.
struct Period {
    std::vector<double> x; // covariates (including intercept)
    long long y1 = 0;      // claim count
    double y2 = 0.0;       // aggregate severity; zero iff y1 == 0
};

void check_two_part(const Period& p);

struct Rates {
    double lambda1;      // exp(x . zeta1)
    double lambda2_star; // exp(x . zeta2)
};

Rates rates(const CrmParams& p, std::span<const double> x);

/// Severity rate given the realized count: lambda2_star * exp(eta * y1).
double lambda2(const CrmParams& p, double lambda2_star, long long y1);

/// One-step-ahead predictive laws at the next period.
struct Forecast {
    NegBinomial count;
    // captured severity ingredients
    double q2_t, q2_star, alpha2, beta2;
    double lambda2_star, psi, eta;

    /// Conditional one-step severity law given the count: GB2 for y1 >= 1,
    /// point mass at zero otherwise.
    Law severity_given(long long y1) const;
};

Forecast predict(const CrmState& s, const CrmParams& p, std::span<const double> x);

CrmState update(const CrmState& s, const CrmParams& p, std::span<const double> x,
                const Period& obs);

/// Joint exact log-likelihood of one policyholder's history; zero-count
/// periods contribute the count term only.
double loglik(std::span<const Period> history, const CrmParams& p);

/// E[exp(eta y) y | F] for the next-period count, in closed form. Throws
/// existence_error (carrying the bound) when
/// eta >= log((q1 b1 + lambda1)/lambda1).
double laplace_count_term(const GammaState& freq, double q1, double lambda1, double eta);

struct Premium {
    double freq_mean;        // E[y1_tau | F]
    double sev_mean;         // E[y2_tau | F]
    double credibility_freq; // alpha1/beta1
    double credibility_sev;  // beta2/(alpha2-1)
};

Premium premium(const CrmState& s, const CrmParams& p, std::span<const double> x_tau);

/// Linear-representation weights of the premium:
///   E[y1_tau|F] = lambda1_tau (w1.b0 + sum w1.b[t-1] y1_t / lambda1_t)
///   E[y2_tau|F] = lambda2*_tau L (w2.b0 + sum w2.b[t-1] y2_t / lambda2_t)
/// where L is the Laplace count term. Frozen severity periods (three-part
/// variants) carry an implicit q* factor of one in the products.
struct PremiumWeights {
    ForecastWeights freq;
    ForecastWeights sev;
};

PremiumWeights premium_weights(std::span<const Period> history,
                               std::span<const std::vector<double>> xs, const CrmParams& p,
                               int tau);

/// Simulated trajectory; observation-driven, so the filter is threaded
/// alongside the latent draws.
struct SimStep {
    double theta1, theta2;
    long long y1;
    double y2;
};

std::vector<SimStep> simulate(const CrmParams& p,
                              std::span<const std::vector<double>> x_path, int horizon,
                              Rng& rng);

} // namespace dcrm
