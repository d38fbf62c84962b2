#include <doctest.h>

#include <cmath>
#include <random>
#include <variant>

#include "dcrm/crm.hpp"
#include "dcrm/error.hpp"
#include "dcrm/fit.hpp"
#include "dcrm/oracle.hpp"
#include "test_util.hpp"

using namespace dcrm;

namespace {

CrmParams base_params() {
    CrmParams p;
    p.q1 = 0.8;
    p.q2 = 0.8;
    p.alpha0_1 = 1.0;
    p.beta0_1 = 1.0;
    p.alpha0_2 = 3.0;
    p.beta0_2 = 2.0;
    p.zeta1 = {std::log(0.2)};
    p.zeta2 = {std::log(15000.0)};
    p.eta = 0.0;
    p.psi2 = 1.5;
    p.variant = Variant::Plain;
    return p;
}

const std::vector<double> kX{1.0};

} // namespace

TEST_CASE("one-step forecast at the prior state") {
    CrmParams p = base_params();
    CrmState s = initial_state(p);
    Forecast f = predict(s, p, kX);
    CHECK(f.count.mean == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(f.count.size == doctest::Approx(0.8).epsilon(1e-14));

    CHECK(std::holds_alternative<PointMassZero>(f.severity_given(0)));
    Law g = f.severity_given(1);
    Moments m = moments(g);
    CHECK(*m.mean == doctest::Approx(15000.0).epsilon(1e-12));
    CHECK_THROWS_AS((void)f.severity_given(-1), domain_error);
}

TEST_CASE("conditional severity variance closed form") {
    CrmParams p = base_params();
    p.eta = -0.2;
    CrmState s = initial_state(p);
    Forecast f = predict(s, p, kX);
    for (long long y1 : {1LL, 2LL, 4LL}) {
        Law law = f.severity_given(y1);
        const GB2& g = std::get<GB2>(law);
        Moments m = moments(law);
        double n = static_cast<double>(y1);
        double lam2 = 15000.0 * std::exp(p.eta * n);
        double scale = lam2 * p.beta0_2 / (p.alpha0_2 - 1.0);
        double closed =
            n * scale * scale * ((p.psi2 + n) / (p.q2 * (p.alpha0_2 - 2.0)) + p.psi2);
        CHECK(*m.variance == doctest::Approx(closed).epsilon(1e-12));

        double mean_num = testutil::integrate_log(
            [&](double y) { return y * pdf_gb2(y, g.a, g.scale, g.p, g.q); }, 1e-3, 1e15);
        double second_num = testutil::integrate_log(
            [&](double y) { return y * y * pdf_gb2(y, g.a, g.scale, g.p, g.q); }, 1e-3, 1e15);
        CHECK(closed == doctest::Approx(second_num - mean_num * mean_num).epsilon(1e-6));
    }
}

TEST_CASE("joint update arithmetic") {
    CrmParams p = base_params();
    CrmState s = initial_state(p);
    CrmState u = update(s, p, kX, Period{kX, 1, 15000.0});
    CHECK(u.freq.alpha == doctest::Approx(1.8).epsilon(1e-14));
    CHECK(u.freq.beta == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(u.sev.alpha == doctest::Approx(2.8 + 1.0 / 1.5).epsilon(1e-13));
    CHECK(u.sev.beta == doctest::Approx(1.8 + 15000.0 / (15000.0 * 1.5)).epsilon(1e-13));
    CHECK(u.t == 1);
}

TEST_CASE("zero-claim periods: evolving versus frozen severity") {
    CrmParams plain = base_params();
    CrmParams frozen = base_params();
    frozen.variant = Variant::ThreePart;

    Period none{kX, 0, 0.0};
    CrmState sp = update(initial_state(plain), plain, kX, none);
    CHECK(sp.sev.alpha == doctest::Approx(2.8).epsilon(1e-14));
    CHECK(sp.sev.beta == doctest::Approx(1.8).epsilon(1e-14));

    CrmState sf = update(initial_state(frozen), frozen, kX, none);
    CHECK(sf.sev.alpha == 3.0); // bit-identical: the state is untouched
    CHECK(sf.sev.beta == 2.0);
    CHECK(sf.sev.t == 1);
    CHECK(sf.freq.alpha == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("frozen variant agrees with the plain one on claim-only histories") {
    CrmParams plain = base_params();
    CrmParams frozen = base_params();
    frozen.variant = Variant::ThreePart;
    std::vector<Period> hist{{kX, 1, 1.1e4}, {kX, 2, 4.0e4}, {kX, 1, 0.8e4}};
    CrmState a = initial_state(plain), b = initial_state(frozen);
    for (const Period& obs : hist) {
        a = update(a, plain, kX, obs);
        b = update(b, frozen, kX, obs);
    }
    CHECK(a.sev.alpha == b.sev.alpha);
    CHECK(a.sev.beta == b.sev.beta);
    CHECK(loglik(hist, plain) == loglik(hist, frozen));
}

TEST_CASE("two-part consistency is enforced") {
    CHECK_THROWS_AS(check_two_part(Period{kX, 0, 1.0}), domain_error);
    CHECK_THROWS_AS(check_two_part(Period{kX, 2, 0.0}), domain_error);
    CHECK_NOTHROW(check_two_part(Period{kX, 0, 0.0}));
    CHECK_NOTHROW(check_two_part(Period{kX, 2, 5.0}));
}

TEST_CASE("zero-count periods contribute the count factor only") {
    CrmParams p = base_params();
    std::vector<Period> one{{kX, 0, 0.0}};
    CHECK(loglik(one, p) == doctest::Approx(log_pmf_nb(0, 0.2, 0.8)).epsilon(1e-14));
}

TEST_CASE("log-likelihood equals the sequential-quadrature joint density") {
    CrmParams p = base_params();
    p.eta = -0.3;
    std::vector<Period> hist{{kX, 1, 1.2e4}, {kX, 0, 0.0}, {kX, 2, 3.5e4}};
    double closed = loglik(hist, p);
    oracle::CrmGridResult grid = oracle::quadrature_filter(hist, p);
    double numeric = grid.freq.back().log_joint + grid.sev.back().log_joint;
    CHECK(std::fabs(numeric - closed) < 1e-6);
}

TEST_CASE("infinite-prior static limit approaches the independence likelihood") {
    CrmParams p = base_params();
    p.q1 = 1.0;
    p.q2 = 1.0;
    p.alpha0_1 = 1e6;
    p.beta0_1 = 1e6;
    p.alpha0_2 = 1e6;
    p.beta0_2 = 1e6 - 1.0;
    std::vector<PolicySeries> data{{{kX, 1, 1.2e4}, {kX, 0, 0.0}, {kX, 2, 3.5e4}}};
    double dyn = portfolio_loglik(data, p);
    double ind = independence_loglik(data, p);
    CHECK(std::fabs(dyn - ind) < 1e-3);
}

TEST_CASE("count-weighted exponential moment") {
    GammaState s{1.4, 1.1, 3};
    // eta == 0 collapses to the forecast count mean
    CHECK(laplace_count_term(s, 0.8, 0.35, 0.0) ==
          doctest::Approx(0.35 * 1.4 / 1.1).epsilon(1e-12));

    // closed form against direct summation over the predictive pmf
    double q = 0.8, lam = 0.35, eta = -0.3;
    double direct = laplace_count_term(s, q, lam, eta);
    double summed = 0.0;
    for (long long y = 1; y < 400; ++y)
        summed += static_cast<double>(y) * std::exp(eta * static_cast<double>(y)) *
                  pmf_nb(y, lam * s.alpha / s.beta, q * s.alpha);
    CHECK(direct == doctest::Approx(summed).epsilon(1e-12));

    double bound = std::log((q * s.beta + lam) / lam);
    CHECK_THROWS_AS((void)laplace_count_term(s, q, lam, bound), existence_error);
    try {
        (void)laplace_count_term(s, q, lam, bound + 0.5);
    } catch (const existence_error& e) {
        CHECK(e.bound() == doctest::Approx(bound).epsilon(1e-14));
        CHECK(e.eta() == doctest::Approx(bound + 0.5).epsilon(1e-14));
    }
}

TEST_CASE("premium at the prior state with no dependence") {
    CrmParams p = base_params();
    Premium pr = premium(initial_state(p), p, kX);
    CHECK(pr.freq_mean == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(pr.sev_mean == doctest::Approx(3000.0).epsilon(1e-12));
    CHECK(pr.credibility_freq == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pr.credibility_sev == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("premium weights reconstruct the filtered premium") {
    for (Variant v : {Variant::Plain, Variant::EwmaSeverity, Variant::ThreePart,
                      Variant::EwmaThreePart}) {
        CrmParams p = base_params();
        p.variant = v;
        p.eta = -0.25;
        std::vector<Period> hist{{kX, 1, 1.2e4}, {kX, 0, 0.0}, {kX, 3, 5.0e4}, {kX, 1, 0.9e4}};
        std::vector<std::vector<double>> xs(hist.size(), kX);
        int tau = static_cast<int>(hist.size()) + 1;

        CrmState s = initial_state(p);
        for (size_t t = 0; t < hist.size(); ++t) s = update(s, p, xs[t], hist[t]);
        Premium pr = premium(s, p, kX);

        PremiumWeights w = premium_weights(hist, xs, p, tau);
        Rates r = rates(p, kX);
        double L = laplace_count_term(s.freq, p.q1, r.lambda1, p.eta);

        double freq_lin = w.freq.b0;
        double sev_lin = w.sev.b0;
        for (size_t t = 0; t < hist.size(); ++t) {
            freq_lin += w.freq.b[t] * static_cast<double>(hist[t].y1) / r.lambda1;
            double lam2_t = lambda2(p, r.lambda2_star, hist[t].y1);
            if (hist[t].y1 >= 1) sev_lin += w.sev.b[t] * hist[t].y2 / lam2_t;
        }
        freq_lin *= r.lambda1;
        sev_lin *= r.lambda2_star * L;

        CHECK(std::fabs(freq_lin - pr.freq_mean) < 1e-12 * pr.freq_mean);
        CHECK(std::fabs(sev_lin - pr.sev_mean) < 1e-12 * pr.sev_mean);

        // recency ordering of the severity weights
        for (size_t t = 0; t + 1 < w.sev.b.size(); ++t) CHECK(w.sev.b[t] <= w.sev.b[t + 1]);
    }
}

TEST_CASE("past severities move the severity premium only") {
    CrmParams p = base_params();
    p.eta = -0.25;
    std::vector<Period> hist{{kX, 1, 1.2e4}, {kX, 2, 3.0e4}};
    std::vector<Period> bumped = hist;
    bumped[0].y2 *= 1.5;
    std::vector<std::vector<double>> xs(hist.size(), kX);

    auto price = [&](const std::vector<Period>& h) {
        CrmState s = initial_state(p);
        for (size_t t = 0; t < h.size(); ++t) s = update(s, p, xs[t], h[t]);
        return premium(s, p, kX);
    };
    Premium a = price(hist), b = price(bumped);
    CHECK(a.freq_mean == b.freq_mean);
    CHECK(b.sev_mean > a.sev_mean);

    // a past count moves both parts
    std::vector<Period> more = hist;
    more[0].y1 = 3;
    Premium c = price(more);
    CHECK(c.freq_mean > a.freq_mean);
    CHECK(c.sev_mean != a.sev_mean);
}

TEST_CASE("simulation is deterministic and respects the two-part structure") {
    CrmParams p = base_params();
    p.eta = -0.2;
    std::vector<std::vector<double>> xs(6, kX);
    Rng r1(404), r2(404);
    auto a = simulate(p, xs, 6, r1);
    auto b = simulate(p, xs, 6, r2);
    REQUIRE(a.size() == 6);
    for (size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].y1 == b[t].y1);
        CHECK(a[t].y2 == b[t].y2);
        CHECK(a[t].theta2 == b[t].theta2);
        CHECK((a[t].y1 == 0) == (a[t].y2 == 0.0));
        CHECK(a[t].theta1 > 0.0);
        CHECK(a[t].theta2 > 0.0);
    }
}

TEST_CASE("simulated first-period count matches the prior predictive mean") {
    CrmParams p = base_params();
    std::vector<std::vector<double>> xs(1, kX);
    Rng rng(777);
    const int n = 40000;
    double s1 = 0.0;
    for (int i = 0; i < n; ++i) {
        auto path = simulate(p, xs, 1, rng);
        s1 += static_cast<double>(path[0].y1);
    }
    double mean = s1 / n;
    // first-period count is NB(0.2, 0.8): variance 0.25
    double se = std::sqrt(0.25 / n);
    CHECK(std::fabs(mean - 0.2) < 4.0 * se);
}
