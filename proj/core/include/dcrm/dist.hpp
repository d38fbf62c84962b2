#pragma once

#include <optional>
#include <random>
#include <variant>

namespace dcrm {

using Rng = std::mt19937_64;

// Parameter conventions follow the standard actuarial ones: Gamma is
// shape/rate, InverseGamma is shape/scale, NegBinomial is mean/size (so the
// variance is mean + mean^2/size), GB2 is (a, scale b, p, q).

struct Gamma {
    double shape; // alpha >= 0; shape == 0 only via make_gamma collapse
    double rate;  // beta > 0
};

struct InverseGamma {
    double shape; // alpha
    double scale; // beta
};

struct Beta {
    double a;
    double b;
};

struct NegBinomial {
    double mean; // lambda >= 0
    double size; // Gamma > 0
};

struct GB2 {
    double a;
    double scale; // b
    double p;
    double q;
};

struct PointMassZero {};

using Law = std::variant<Gamma, InverseGamma, Beta, NegBinomial, GB2, PointMassZero>;

/// Gamma law with the degenerate convention: shape == 0 collapses to a point
/// mass at zero.
Law make_gamma(double shape, double rate);

/// GB2 law with the degenerate convention: p == q == 0 collapses to a point
/// mass at zero.
Law make_gb2(double a, double scale, double p, double q);

/// Mean/variance with explicit "does not exist" markers (inverse gamma needs
/// shape > 1 resp. > 2; GB2 with a == 1 needs q > 1 resp. > 2).
struct Moments {
    std::optional<double> mean;
    std::optional<double> variance;
};

Moments moments(const Law& law);

// Negative binomial pmf. Computed in log space; the probability entry point
// exponentiates.
double log_pmf_nb(long long y, double lambda, double size);
double pmf_nb(long long y, double lambda, double size);

// GB2 density at y > 0.
double log_pdf_gb2(double y, double a, double b, double p, double q);
double pdf_gb2(double y, double a, double b, double p, double q);

// Supporting log densities used by the likelihoods and the oracles.
double log_pdf_gamma(double y, double shape, double rate);
double log_pdf_inverse_gamma(double y, double shape, double scale);
double log_pdf_beta(double x, double a, double b);
double log_pmf_poisson(long long y, double mean);

/// One draw from `law`. Deterministic for a fixed rng state.
double sample(const Law& law, Rng& rng);

} // namespace dcrm
