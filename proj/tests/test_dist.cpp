#include <doctest.h>

#include <cmath>

#include "dcrm/dist.hpp"
#include "dcrm/error.hpp"
#include "test_util.hpp"

using namespace dcrm;

TEST_CASE("negative binomial pmf geometric cases") {
    CHECK(pmf_nb(0, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(pmf_nb(1, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("negative binomial pmf equals Poisson-gamma mixture") {
    // NB(mean lam*a/b, size a) is Poisson(lam*theta) mixed over Gamma(a, b)
    double a = 0.8, b = 0.8, lam = 0.2;
    double direct = pmf_nb(3, lam * a / b, a);
    CHECK(direct == doctest::Approx(0.0044970865877845485).epsilon(1e-12));
    double mixed = testutil::poisson_gamma_mixture(3, lam, a, b);
    CHECK(std::fabs(direct - mixed) < 1e-10);
}

TEST_CASE("negative binomial pmf sums to one") {
    double total = 0.0;
    for (long long y = 0; y < 400; ++y) total += pmf_nb(y, 2.5, 0.7);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("negative binomial pmf rejects bad parameters") {
    CHECK_THROWS_AS((void)pmf_nb(0, -1.0, 1.0), domain_error);
    CHECK_THROWS_AS((void)pmf_nb(0, 1.0, 0.0), domain_error);
    CHECK_THROWS_AS((void)pmf_nb(-1, 1.0, 1.0), domain_error);
}

TEST_CASE("GB2 density closed cases") {
    CHECK(pdf_gb2(1.0, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK_THROWS_AS((void)pdf_gb2(0.0, 1.0, 1.0, 1.0, 1.0), domain_error);
    CHECK_THROWS_AS((void)pdf_gb2(-1.0, 1.0, 1.0, 1.0, 1.0), domain_error);
}

TEST_CASE("GB2 density equals gamma mixed over inverse gamma") {
    // GB2(1, b2*lam*psi, 1/psi, a2) is Gamma(1/psi, 1/(theta lam psi)) mixed
    // over theta ~ IG(a2, b2)
    double a2 = 2.8, b2 = 1.8, lam = 1e4, psi = 1.5;
    double y = 1.5e4;
    double direct = pdf_gb2(y, 1.0, b2 * lam * psi, 1.0 / psi, a2);
    double mixed = testutil::gamma_invgamma_mixture(y, 1.0 / psi, lam, psi, a2, b2);
    CHECK(std::fabs(direct - mixed) < 1e-10 * direct);

    // the frozen reference point
    CHECK(pdf_gb2(1.5e4, 1.0, 1.8e4, 0.6667, 2.8) ==
          doctest::Approx(1.0190679204201531e-05).epsilon(1e-12));
}

TEST_CASE("GB2 density integrates to one") {
    double total = testutil::integrate_log(
        [](double y) { return pdf_gb2(y, 1.0, 2.0, 3.0, 4.0); }, 1e-9, 1e9);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("moments closed forms") {
    Moments ig = moments(InverseGamma{3.0, 2.0});
    CHECK(*ig.mean == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(*ig.variance == doctest::Approx(1.0).epsilon(1e-14));

    Moments nb = moments(NegBinomial{0.2, 0.8});
    CHECK(*nb.mean == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(*nb.variance == doctest::Approx(0.25).epsilon(1e-14));

    Moments heavy = moments(InverseGamma{1.5, 2.0});
    CHECK(*heavy.mean == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(!heavy.variance.has_value());

    Moments gb2 = moments(GB2{1.0, 2.0, 3.0, 4.0});
    CHECK(*gb2.mean == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("GB2 moments match numeric integrals when they exist") {
    GB2 g{1.0, 2.0, 3.0, 4.0};
    Moments m = moments(Law{g});
    double mean = testutil::integrate_log(
        [&](double y) { return y * pdf_gb2(y, g.a, g.scale, g.p, g.q); }, 1e-9, 1e9);
    double second = testutil::integrate_log(
        [&](double y) { return y * y * pdf_gb2(y, g.a, g.scale, g.p, g.q); }, 1e-9, 1e9);
    CHECK(*m.mean == doctest::Approx(mean).epsilon(1e-8));
    CHECK(*m.variance == doctest::Approx(second - mean * mean).epsilon(1e-6));

    CHECK(!moments(Law{GB2{1.0, 2.0, 3.0, 1.5}}).variance.has_value());
    CHECK(!moments(Law{GB2{1.0, 2.0, 3.0, 0.5}}).mean.has_value());
}

TEST_CASE("degenerate conventions collapse to a point mass at zero") {
    CHECK(std::holds_alternative<PointMassZero>(make_gamma(0.0, 1.0)));
    CHECK(std::holds_alternative<Gamma>(make_gamma(2.0, 1.0)));
    CHECK(std::holds_alternative<PointMassZero>(make_gb2(1.0, 2.0, 0.0, 0.0)));
    CHECK(std::holds_alternative<GB2>(make_gb2(1.0, 2.0, 1.0, 3.0)));
    Moments m = moments(Law{PointMassZero{}});
    CHECK(*m.mean == 0.0);
    CHECK(*m.variance == 0.0);
}

TEST_CASE("sampling is deterministic per seed") {
    Rng r1(7), r2(7);
    CHECK(sample(Gamma{1.0, 1.0}, r1) == sample(Gamma{1.0, 1.0}, r2));
    CHECK(sample(Law{PointMassZero{}}, r1) == 0.0);
}

TEST_CASE("sampling moments match closed forms") {
    Rng rng(20240817);
    const int n = 1000000;

    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += sample(Beta{2.0, 2.0}, rng);
    CHECK(std::fabs(acc / n - 0.5) < 0.002);

    auto check_law = [&](const Law& law) {
        Moments m = moments(law);
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < n; ++i) {
            double v = sample(law, rng);
            s1 += v;
            s2 += v * v;
        }
        double mean = s1 / n;
        double var = s2 / n - mean * mean;
        double se = std::sqrt(*m.variance / n);
        CHECK(std::fabs(mean - *m.mean) < 4.0 * se);
        (void)var;
    };
    check_law(Gamma{2.0, 3.0});
    check_law(InverseGamma{4.0, 3.0});
    check_law(NegBinomial{0.5, 0.8});
    check_law(GB2{1.0, 2.0, 3.0, 5.0});
}
