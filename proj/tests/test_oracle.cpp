#include <doctest.h>

#include <cmath>

#include "dcrm/crm.hpp"
#include "dcrm/error.hpp"
#include "dcrm/oracle.hpp"

using namespace dcrm;
using namespace dcrm::oracle;

namespace {

const std::vector<double> kX{1.0};

CrmParams base_params() {
    CrmParams p;
    p.q1 = 0.8;
    p.q2 = 0.8;
    p.alpha0_1 = 1.0;
    p.beta0_1 = 1.0;
    p.alpha0_2 = 3.0;
    p.beta0_2 = 2.0;
    p.zeta1 = {std::log(0.3)};
    p.zeta2 = {std::log(1.0)};
    p.eta = -0.2;
    p.psi2 = 1.2;
    p.variant = Variant::Plain;
    return p;
}

} // namespace

TEST_CASE("grid filter on a single count observation") {
    FreqParams p = FreqParams::constant_rate(0.8, 1.0, 1.0, 0.2, 1);
    std::vector<long long> ys{1};
    auto grid = quadrature_filter_freq(p, ys);
    REQUIRE(grid.size() == 1);
    // closed-form posterior: Gamma(1.8, 1.0)
    CHECK(std::fabs(grid[0].mean - 1.8) < 1e-6 * 1.8);
    CHECK(std::fabs(grid[0].variance - 1.8) < 1e-5 * 1.8);
    double mass = 0.0;
    for (double w : grid[0].weight) mass += w;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("grid filter tracks the static limit") {
    // q == 1: the transition is the identity, so the filter is plain conjugate
    // Bayes updating
    FreqParams p = FreqParams::constant_rate(1.0, 1.3, 0.9, 0.5, 3);
    std::vector<long long> ys{2, 0, 1};
    auto grid = quadrature_filter_freq(p, ys);
    GammaState s = p.initial_state();
    for (size_t t = 0; t < ys.size(); ++t) {
        s = update(s, 1.0, 0.5, ys[t]);
        CHECK(std::fabs(grid[t].mean - s.alpha / s.beta) < 1e-7 * (s.alpha / s.beta));
    }
}

TEST_CASE("grid filter handles the ewma severity schedule") {
    SevParams p = SevParams::constant_rate(QSchedule{QScheduleKind::AlternativeEwma, 0.8},
                                           3.5, 2.5, 1.0, 1.2, 3);
    std::vector<double> ys{0.8, 1.9, 1.1};
    auto grid = quadrature_filter_sev(p, ys);
    InvGammaState s = p.initial_state();
    for (size_t t = 0; t < ys.size(); ++t) {
        s = update(s, p.schedule, 1.0, p.psi, ys[t]);
        double mean = s.beta / (s.alpha - 1.0);
        CHECK(std::fabs(grid[t].mean - mean) < 1e-5 * mean);
    }
}

TEST_CASE("joint grid filter freezes the severity chain on zero-claim periods") {
    CrmParams p = base_params();
    p.variant = Variant::ThreePart;
    std::vector<Period> hist{{kX, 1, 1.4}, {kX, 0, 0.0}, {kX, 2, 3.1}};
    CrmGridResult grid = quadrature_filter(hist, p);
    REQUIRE(grid.sev.size() == 3);

    CrmState s = initial_state(p);
    for (size_t t = 0; t < hist.size(); ++t) {
        s = update(s, p, kX, hist[t]);
        double fmean = s.freq.alpha / s.freq.beta;
        double smean = s.sev.beta / (s.sev.alpha - 1.0);
        CHECK(std::fabs(grid.freq[t].mean - fmean) < 1e-5 * fmean);
        CHECK(std::fabs(grid.sev[t].mean - smean) < 1e-4 * smean);
    }
    // the frozen period leaves the severity posterior untouched
    CHECK(std::fabs(grid.sev[1].mean - grid.sev[0].mean) < 1e-9);
}

TEST_CASE("particle filter agrees with the quadrature filter") {
    CrmParams p = base_params();
    std::vector<Period> hist{{kX, 1, 1.4}, {kX, 0, 0.0}, {kX, 2, 3.1}, {kX, 1, 0.6}};
    CrmGridResult grid = quadrature_filter(hist, p);
    Rng rng(2024);
    PfResult pf = particle_filter(hist, p, 100000, rng);
    REQUIRE(pf.freq.size() == hist.size());
    for (size_t t = 0; t < hist.size(); ++t) {
        CHECK(std::fabs(pf.freq[t].mean - grid.freq[t].mean) < 3.0 * pf.freq[t].mean_se);
        CHECK(std::fabs(pf.sev[t].mean - grid.sev[t].mean) < 3.0 * pf.sev[t].mean_se);
        CHECK(pf.freq[t].ess > 1000.0);
    }
}

TEST_CASE("particle filter is deterministic per seed") {
    CrmParams p = base_params();
    std::vector<Period> hist{{kX, 1, 1.4}, {kX, 0, 0.0}};
    Rng r1(7), r2(7), r3(8);
    PfResult a = particle_filter(hist, p, 5000, r1);
    PfResult b = particle_filter(hist, p, 5000, r2);
    PfResult c = particle_filter(hist, p, 5000, r3);
    CHECK(a.freq[1].mean == b.freq[1].mean);
    CHECK(a.sev[1].mean == b.sev[1].mean);
    CHECK(a.freq[1].mean != c.freq[1].mean);
}

TEST_CASE("transition sampling matches the predicted moments") {
    Rng rng(99);
    const int n = 200000;

    // count chain: mean preserved, variance inflated by 1/q
    Gamma g{2.0, 2.0};
    TransitionCheck tc = transition_check_gamma(g, 0.5, n, rng);
    CHECK(std::fabs(tc.mean - 1.0) < 4.0 * tc.mean_se);
    CHECK(std::fabs(tc.variance - 1.0) < 4.0 * tc.variance_se);

    // severity chain, Standard schedule: variance inflated by 1/q. The shape
    // is kept high so the one-step law has a finite fourth moment and the
    // empirical variance has a meaningful standard error.
    InverseGamma ig{9.0, 8.0};
    TransitionCheck ts = transition_check_ig(ig, QSchedule{QScheduleKind::Standard, 0.8}, n, rng);
    double m0 = 8.0 / 8.0;
    double v0 = 64.0 / (64.0 * 7.0);
    CHECK(std::fabs(ts.mean - m0) < 4.0 * ts.mean_se);
    CHECK(std::fabs(ts.variance - v0 / 0.8) < 4.0 * ts.variance_se);

    // EWMA schedule: variance ratio (alpha-2)/(q(alpha-1)-1)
    TransitionCheck te =
        transition_check_ig(ig, QSchedule{QScheduleKind::AlternativeEwma, 0.8}, n, rng);
    double ratio = (9.0 - 2.0) / (0.8 * 8.0 - 1.0);
    CHECK(std::fabs(te.mean - m0) < 4.0 * te.mean_se);
    CHECK(std::fabs(te.variance - v0 * ratio) < 4.0 * te.variance_se);
}

TEST_CASE("oracle preconditions") {
    CrmParams p = base_params();
    std::vector<Period> hist{{kX, 1, 1.4}};
    Rng rng(1);
    CHECK_THROWS_AS((void)particle_filter(hist, p, 500, rng), domain_error);
    CHECK_THROWS_AS((void)transition_check_gamma(Gamma{1.0, 1.0}, 0.5, 100, rng),
                    domain_error);

    // an empty history yields the priors themselves
    std::vector<Period> empty;
    CrmGridResult grid = quadrature_filter(empty, p);
    REQUIRE(grid.freq.size() == 1);
    REQUIRE(grid.sev.size() == 1);
    // the exponential prior keeps ~1e-4 of its mass left of the default grid
    CHECK(std::fabs(grid.freq[0].mean - 1.0) < 5e-4);
    CHECK(std::fabs(grid.sev[0].mean - 1.0) < 1e-5);
}
