#include <doctest.h>

#include <cmath>
#include <vector>

#include "latrd/sources.hpp"

using namespace latrd;

TEST_SUITE_BEGIN("sources");

TEST_CASE("regularity certificates per family") {
    CHECK(v_bound(ContinuousSource::uniform(0.0, 1.0)).c1 == 0.0);
    CHECK(v_bound(ContinuousSource::uniform(0.0, 1.0)).c0 == 0.0);

    RegularityCertificate g = v_bound(ContinuousSource::gaussian(1.0));
    CHECK(g.c1 == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g.c0 == 0.0);

    RegularityCertificate l = v_bound(ContinuousSource::laplace(1.0));
    CHECK(l.c0 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(l.c1 == 0.0);
}

TEST_CASE("product regularity combines per-letter certificates") {
    std::vector<RegularityCertificate> flat(8, RegularityCertificate{0.0, 0.0, 1});
    RegularityCertificate c = product_regularity(flat);
    CHECK(c.c1 == 0.0);
    CHECK(c.c0 == 0.0);
    CHECK(c.dimension == 8);

    std::vector<RegularityCertificate> gauss(8, RegularityCertificate{2.0, 0.0, 1});
    c = product_regularity(gauss);
    CHECK(c.c1 == doctest::Approx(2.0));

    std::vector<RegularityCertificate> lap(9, RegularityCertificate{0.0, 1.0, 1});
    c = product_regularity(lap);
    CHECK(c.c0 == doctest::Approx(1.0));
    // evaluation applies the sqrt(n) scale
    CHECK(c.value(0.0) == doctest::Approx(3.0).epsilon(1e-14));
}

TEST_CASE("varentropy closed forms vs Monte-Carlo") {
    CHECK(varentropy(ContinuousSource::gaussian(3.7)) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(varentropy(ContinuousSource::uniform(-1.0, 4.0)) == 0.0);
    CHECK(varentropy(ContinuousSource::laplace(1.0)) == doctest::Approx(1.0).epsilon(1e-15));

    for (auto src : {ContinuousSource::gaussian(1.0), ContinuousSource::laplace(1.0)}) {
        McEstimate mc = varentropy_mc(src, 2000000, 99);
        CHECK(std::abs(mc.value - varentropy(src)) <= 4.0 * mc.standard_error);
    }
}

TEST_CASE("density normalization by quadrature") {
    for (auto src : {ContinuousSource::gaussian(0.7), ContinuousSource::laplace(1.3),
                     ContinuousSource::uniform(-0.5, 2.0)}) {
        auto f = [&src](double x) { return std::exp(src.letter_log_density(x)); };
        double mass = integrate(f, -60.0, 60.0, 1e-10);
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("entropy matches Monte-Carlo information mean") {
    for (auto letter : {ContinuousSource::gaussian(2.0), ContinuousSource::laplace(0.5),
                        ContinuousSource::uniform(0.0, 3.0)}) {
        ContinuousSource src = ContinuousSource::product(letter, 4);
        Rng rng = Rng::stream(7, 0);
        const int n = 1000000;
        double s1 = 0.0, s2 = 0.0;
        std::vector<double> x(4);
        for (int i = 0; i < n; ++i) {
            src.sample(rng, x);
            double info = -src.log_density(x);
            s1 += info;
            s2 += info * info;
        }
        double mean = s1 / n;
        double se = std::sqrt(std::max(1e-30, s2 / n - mean * mean) / n);
        CHECK(std::abs(mean - src.diff_entropy()) <= 4.0 * se + 1e-9);
    }
}

TEST_CASE("analytic gradient of log density vs central differences") {
    Rng rng(5);
    for (auto src : {ContinuousSource::gaussian(1.3), ContinuousSource::laplace(0.8)}) {
        for (int i = 0; i < 1000; ++i) {
            double x = 6.0 * rng.uniform01() - 3.0;
            if (std::abs(x) < 1e-3) continue;  // Laplace kink
            double h = 1e-5;
            double fd = (src.letter_log_density(x + h) - src.letter_log_density(x - h)) / (2 * h);
            double an = src.letter_grad_log_density(x);
            CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
            // the certificate dominates the gradient norm
            RegularityCertificate c = src.v_bound();
            CHECK(std::abs(an) <= c.c1 * std::abs(x) + c.c0 + 1e-12);
        }
    }
}

TEST_CASE("sampler determinism and moments") {
    ContinuousSource src = ContinuousSource::product(ContinuousSource::gaussian(1.0), 3);
    Rng a = Rng::stream(123, 4), b = Rng::stream(123, 4);
    std::vector<double> xa(3), xb(3);
    for (int i = 0; i < 100; ++i) {
        src.sample(a, xa);
        src.sample(b, xb);
        CHECK(xa == xb);
    }

    for (auto letter : {ContinuousSource::gaussian(2.0), ContinuousSource::laplace(1.5),
                        ContinuousSource::uniform(-1.0, 2.0)}) {
        Rng rng(17);
        const int n = 400000;
        double s2 = 0.0, s4 = 0.0;
        std::vector<double> x(1);
        for (int i = 0; i < n; ++i) {
            letter.sample(rng, x);
            s2 += x[0] * x[0];
            s4 += x[0] * x[0] * x[0] * x[0];
        }
        CHECK(s2 / n == doctest::Approx(letter.second_moment()).epsilon(0.02));
        CHECK(s4 / n == doctest::Approx(letter.fourth_moment()).epsilon(0.05));
    }
}

TEST_CASE("log-concave letters keep per-letter varentropy within the n bound") {
    for (auto letter : {ContinuousSource::gaussian(1.0), ContinuousSource::laplace(2.0),
                        ContinuousSource::uniform(0.0, 1.0)}) {
        CHECK(letter.letter_varentropy() <= 1.0);
        for (int n : {1, 7, 64}) {
            ContinuousSource prod = ContinuousSource::product(letter, n);
            CHECK(prod.varentropy() <= static_cast<double>(n));
        }
    }
}

TEST_CASE("expected norm: exact chi mean for Gaussian, Jensen elsewhere") {
    ContinuousSource g1 = ContinuousSource::gaussian(1.0);
    CHECK(g1.expected_norm() == doctest::Approx(std::sqrt(2.0 / kPi)).epsilon(1e-12));
    ContinuousSource g3 = ContinuousSource::product(g1, 3);
    // chi_3 mean = 2 sqrt(2/pi)
    CHECK(g3.expected_norm() == doctest::Approx(2.0 * std::sqrt(2.0 / kPi)).epsilon(1e-12));
    ContinuousSource l4 = ContinuousSource::product(ContinuousSource::laplace(1.0), 4);
    CHECK(l4.expected_norm() == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
}

TEST_SUITE_END();
