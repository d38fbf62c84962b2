#include <doctest.h>

#include <cmath>
#include <random>

#include "dcrm/error.hpp"
#include "dcrm/freq_model.hpp"
#include "dcrm/oracle.hpp"

using namespace dcrm;

TEST_CASE("state prediction scales both gamma parameters") {
    Gamma g = predict_state(GammaState{1.0, 1.0, 0}, 0.8);
    CHECK(g.shape == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(g.rate == doctest::Approx(0.8).epsilon(1e-15));
    // mean preserved, variance inflated by 1/q
    CHECK(g.shape / g.rate == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(g.shape / (g.rate * g.rate) == doctest::Approx(1.25).epsilon(1e-15));
}

TEST_CASE("prediction is a mean-preserving variance-inflating step") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 5.0), uq(0.05, 0.999);
    for (int i = 0; i < 500; ++i) {
        GammaState s{u(rng), u(rng), 0};
        double q = uq(rng);
        Gamma g = predict_state(s, q);
        CHECK(std::fabs(g.shape / g.rate - s.alpha / s.beta) < 1e-12);
        double v0 = s.alpha / (s.beta * s.beta);
        double v1 = g.shape / (g.rate * g.rate);
        CHECK(std::fabs(v1 / v0 - 1.0 / q) < 1e-12);
    }
}

TEST_CASE("count forecast law") {
    NegBinomial nb = forecast_obs(GammaState{1.0, 1.0, 0}, 0.8, 0.2);
    CHECK(nb.mean == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(nb.size == doctest::Approx(0.8).epsilon(1e-15));

    // forecast mean depends on alpha/beta only
    NegBinomial scaled = forecast_obs(GammaState{3.0, 3.0, 0}, 0.8, 0.2);
    CHECK(scaled.mean == doctest::Approx(nb.mean).epsilon(1e-15));
}

TEST_CASE("filtering recursion arithmetic") {
    GammaState s{1.0, 1.0, 0};
    GammaState one = update(s, 0.8, 0.2, 1);
    CHECK(one.alpha == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(one.beta == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(one.t == 1);

    GammaState zero = update(s, 0.8, 0.2, 0);
    CHECK(zero.alpha == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(zero.beta == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS((void)update(s, 0.8, 0.2, -1), domain_error);
}

TEST_CASE("four-year path with one late claim") {
    GammaState s{1.0, 1.0, 0};
    long long ys[4] = {0, 0, 0, 1};
    for (long long y : ys) s = update(s, 0.8, 0.2, y);
    CHECK(s.alpha == doctest::Approx(1.4096).epsilon(1e-12));
    CHECK(s.beta == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.alpha / s.beta == doctest::Approx(1.4096).epsilon(1e-12));
}

TEST_CASE("forecast weights reproduce the worked example") {
    FreqParams p = FreqParams::constant_rate(0.8, 1.0, 1.0, 0.2, 5);
    ForecastWeights w = forecast_weights(p, 5);
    CHECK(w.b0 == doctest::Approx(0.4096).epsilon(1e-12));
    REQUIRE(w.b.size() == 4);
    CHECK(w.b[0] == doctest::Approx(0.1024).epsilon(1e-12));
    CHECK(w.b[1] == doctest::Approx(0.128).epsilon(1e-12));
    CHECK(w.b[2] == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(w.b[3] == doctest::Approx(0.2).epsilon(1e-12));
    // recency ordering under equal rates
    for (size_t i = 0; i + 1 < w.b.size(); ++i) CHECK(w.b[i] < w.b[i + 1]);
}

TEST_CASE("one-period-ahead weights collapse to the prior mean") {
    FreqParams p = FreqParams::constant_rate(0.8, 2.0, 3.0, 0.2, 1);
    ForecastWeights w = forecast_weights(p, 1);
    CHECK(w.b.empty());
    CHECK(w.b0 == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("weights reproduce the state-threaded forecast mean") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uq(0.05, 0.999), ua(0.2, 4.0), ul(0.05, 2.0);
    std::poisson_distribution<long long> pois(0.7);
    for (int rep = 0; rep < 100; ++rep) {
        int tau = 2 + static_cast<int>(rng() % 6);
        FreqParams p{uq(rng), ua(rng), ua(rng), {}};
        std::vector<double> lam, yv;
        std::vector<long long> ys;
        for (int t = 0; t < tau; ++t) p.lambda.push_back(ul(rng));
        GammaState s = p.initial_state();
        for (int t = 1; t <= tau - 1; ++t) {
            long long y = pois(rng);
            ys.push_back(y);
            yv.push_back(static_cast<double>(y));
            lam.push_back(p.rate(t));
            s = update(s, p.q, p.rate(t), y);
        }
        double threaded = p.rate(tau) * s.alpha / s.beta;
        ForecastWeights w = forecast_weights(p, tau);
        double linear = forecast_mean(w, p.rate(tau), yv, lam);
        CHECK(std::fabs(linear - threaded) < 1e-12 * std::max(1.0, std::fabs(threaded)));
    }
}

TEST_CASE("log-likelihood matches the single-period pmf") {
    for (double q : {0.3, 0.8, 1.0}) {
        FreqParams p = FreqParams::constant_rate(q, 1.0, 1.0, 1.0, 1);
        std::vector<long long> y{0};
        CHECK(loglik(p, y) == doctest::Approx(log_pmf_nb(0, 1.0, q)).epsilon(1e-14));
    }
    // q = 1 gives the geometric value
    FreqParams p = FreqParams::constant_rate(1.0, 1.0, 1.0, 1.0, 1);
    std::vector<long long> y{0};
    CHECK(loglik(p, y) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("log-likelihood equals the sequential-quadrature joint density") {
    FreqParams p = FreqParams::constant_rate(0.8, 1.3, 0.9, 0.4, 3);
    std::vector<long long> ys{1, 0, 2};
    double closed = loglik(p, ys);
    auto grid = oracle::quadrature_filter_freq(p, ys);
    CHECK(std::fabs(grid.back().log_joint - closed) < 1e-8);
}

TEST_CASE("appending a period always lowers the joint log-likelihood") {
    FreqParams p3 = FreqParams::constant_rate(0.8, 1.0, 1.0, 0.2, 3);
    FreqParams p4 = FreqParams::constant_rate(0.8, 1.0, 1.0, 0.2, 4);
    std::vector<long long> ys{1, 0, 2};
    std::vector<long long> longer{1, 0, 2, 0};
    CHECK(loglik(p4, longer) < loglik(p3, ys)); // each factor is < 1
}

TEST_CASE("closed-form filter matches the quadrature oracle") {
    FreqParams p = FreqParams::constant_rate(0.75, 0.9, 1.1, 0.5, 4);
    std::vector<long long> ys{0, 2, 1, 0};
    auto grid = oracle::quadrature_filter_freq(p, ys);
    GammaState s = p.initial_state();
    for (size_t t = 0; t < ys.size(); ++t) {
        s = update(s, p.q, p.rate(static_cast<int>(t) + 1), ys[t]);
        double mean = s.alpha / s.beta;
        double var = s.alpha / (s.beta * s.beta);
        CHECK(std::fabs(grid[t].mean - mean) < 1e-6 * mean);
        CHECK(std::fabs(grid[t].variance - var) < 1e-6 * var);
    }
}
