#include "dcrm/dist.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "dcrm/error.hpp"

namespace dcrm {

namespace {

void require_finite_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0)
        throw domain_error(std::string(name) + " must be finite and positive, got " +
                           std::to_string(v));
}

double log_beta_fn(double p, double q) {
    return std::lgamma(p) + std::lgamma(q) - std::lgamma(p + q);
}

} // namespace

Law make_gamma(double shape, double rate) {
    if (!std::isfinite(shape) || shape < 0.0)
        throw domain_error("gamma shape must be finite and >= 0");
    require_finite_positive(rate, "gamma rate");
    if (shape == 0.0) return PointMassZero{};
    return Gamma{shape, rate};
}

Law make_gb2(double a, double scale, double p, double q) {
    if (p == 0.0 && q == 0.0) return PointMassZero{};
    require_finite_positive(scale, "gb2 scale");
    require_finite_positive(p, "gb2 p");
    require_finite_positive(q, "gb2 q");
    if (!std::isfinite(a) || a == 0.0) throw domain_error("gb2 a must be finite and nonzero");
    return GB2{a, scale, p, q};
}

Moments moments(const Law& law) {
    struct Visitor {
        Moments operator()(const Gamma& g) const {
            return {g.shape / g.rate, g.shape / (g.rate * g.rate)};
        }
        Moments operator()(const InverseGamma& ig) const {
            Moments m;
            if (ig.shape > 1.0) m.mean = ig.scale / (ig.shape - 1.0);
            if (ig.shape > 2.0)
                m.variance = ig.scale * ig.scale /
                             ((ig.shape - 1.0) * (ig.shape - 1.0) * (ig.shape - 2.0));
            return m;
        }
        Moments operator()(const Beta& b) const {
            double s = b.a + b.b;
            return {b.a / s, b.a * b.b / (s * s * (s + 1.0))};
        }
        Moments operator()(const NegBinomial& nb) const {
            return {nb.mean, nb.mean + nb.mean * nb.mean / nb.size};
        }
        Moments operator()(const GB2& g) const {
            Moments m;
            if (g.a != 1.0) return m; // closed forms carried for a == 1 only
            if (g.q > 1.0) m.mean = g.scale * g.p / (g.q - 1.0);
            if (g.q > 2.0)
                m.variance = g.scale * g.scale * g.p / (g.q - 1.0) *
                             ((g.p + g.q - 1.0) / ((g.q - 2.0) * (g.q - 1.0)));
            return m;
        }
        Moments operator()(const PointMassZero&) const { return {0.0, 0.0}; }
    };
    return std::visit(Visitor{}, law);
}

double log_pmf_nb(long long y, double lambda, double size) {
    require_finite_positive(lambda, "nb mean");
    require_finite_positive(size, "nb size");
    if (y < 0) throw domain_error("nb count must be >= 0");
    double yy = static_cast<double>(y);
    return std::lgamma(yy + size) - std::lgamma(yy + 1.0) - std::lgamma(size) +
           size * (std::log(size) - std::log(size + lambda)) +
           yy * (std::log(lambda) - std::log(size + lambda));
}

double pmf_nb(long long y, double lambda, double size) {
    return std::exp(log_pmf_nb(y, lambda, size));
}

double log_pdf_gb2(double y, double a, double b, double p, double q) {
    require_finite_positive(b, "gb2 scale");
    require_finite_positive(p, "gb2 p");
    require_finite_positive(q, "gb2 q");
    if (!(y > 0.0)) throw domain_error("gb2 support is y > 0");
    double lr = a * (std::log(y) - std::log(b)); // log (y/b)^a
    double log1p_pow = lr > 0.0 ? lr + std::log1p(std::exp(-lr)) : std::log1p(std::exp(lr));
    return std::log(std::fabs(a)) + (a * p - 1.0) * std::log(y) - a * p * std::log(b) -
           log_beta_fn(p, q) - (p + q) * log1p_pow;
}

double pdf_gb2(double y, double a, double b, double p, double q) {
    return std::exp(log_pdf_gb2(y, a, b, p, q));
}

double log_pdf_gamma(double y, double shape, double rate) {
    require_finite_positive(shape, "gamma shape");
    require_finite_positive(rate, "gamma rate");
    if (!(y > 0.0)) throw domain_error("gamma support is y > 0");
    return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(y) -
           rate * y;
}

double log_pdf_inverse_gamma(double y, double shape, double scale) {
    require_finite_positive(shape, "inverse gamma shape");
    require_finite_positive(scale, "inverse gamma scale");
    if (!(y > 0.0)) throw domain_error("inverse gamma support is y > 0");
    return shape * std::log(scale) - std::lgamma(shape) - (shape + 1.0) * std::log(y) -
           scale / y;
}

double log_pdf_beta(double x, double a, double b) {
    require_finite_positive(a, "beta a");
    require_finite_positive(b, "beta b");
    if (!(x > 0.0) || !(x < 1.0)) throw domain_error("beta support is (0,1)");
    return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_fn(a, b);
}

double log_pmf_poisson(long long y, double mean) {
    require_finite_positive(mean, "poisson mean");
    if (y < 0) throw domain_error("poisson count must be >= 0");
    double yy = static_cast<double>(y);
    return yy * std::log(mean) - mean - std::lgamma(yy + 1.0);
}

namespace {

double sample_gamma(double shape, double rate, Rng& rng) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(rng);
}

} // namespace

double sample(const Law& law, Rng& rng) {
    struct Visitor {
        Rng& rng;
        double operator()(const Gamma& g) const { return sample_gamma(g.shape, g.rate, rng); }
        double operator()(const InverseGamma& ig) const {
            return 1.0 / sample_gamma(ig.shape, ig.scale, rng);
        }
        double operator()(const Beta& b) const {
            // two-gamma construction
            double g1 = sample_gamma(b.a, 1.0, rng);
            double g2 = sample_gamma(b.b, 1.0, rng);
            return g1 / (g1 + g2);
        }
        double operator()(const NegBinomial& nb) const {
            if (nb.mean == 0.0) return 0.0;
            // Poisson mixed over Gamma(size, size/mean)
            double theta = sample_gamma(nb.size, nb.size / nb.mean, rng);
            std::poisson_distribution<long long> pois(theta);
            return static_cast<double>(pois(rng));
        }
        double operator()(const GB2& g) const {
            // (y/b)^a is a ratio of two unit-rate gammas (beta prime)
            double gp = sample_gamma(g.p, 1.0, rng);
            double gq = sample_gamma(g.q, 1.0, rng);
            return g.scale * std::pow(gp / gq, 1.0 / g.a);
        }
        double operator()(const PointMassZero&) const { return 0.0; }
    };
    return std::visit(Visitor{rng}, law);
}

} // namespace dcrm
