#include <doctest.h>

#include <cmath>
#include <vector>

#include "latrd/rd_finite.hpp"

using namespace latrd;

namespace {

FiniteSource binary_source(double p) {
    return FiniteSource({1.0 - p, p}, DistortionMeasure::hamming());
}

// Brute-force minimum of I(X;Y) over conditional pmfs on a simplex grid with
// E[d] <= d. Exact oracle up to grid resolution; feasible points only.
double grid_min_rate(const FiniteSource& src, double d, int steps) {
    int m = src.alphabet();
    int my = src.reproduction_alphabet();
    // enumerate compositions of `steps` into my parts per row
    std::vector<std::vector<std::vector<double>>> rows(m);
    std::vector<int> comp(my, 0);
    auto enumerate_rows = [&](auto&& self, int pos, int left, std::vector<double>& row,
                              std::vector<std::vector<double>>& out) -> void {
        if (pos == my - 1) {
            row[pos] = static_cast<double>(left) / steps;
            out.push_back(row);
            return;
        }
        for (int k = 0; k <= left; ++k) {
            row[pos] = static_cast<double>(k) / steps;
            self(self, pos + 1, left - k, row, out);
        }
    };
    std::vector<double> row(my);
    std::vector<std::vector<double>> choices;
    enumerate_rows(enumerate_rows, 0, steps, row, choices);
    for (int x = 0; x < m; ++x) rows[x] = choices;

    double best = kInf;
    std::vector<int> pick(m, 0);
    for (;;) {
        // E[d] and output marginal
        double dist = 0.0;
        std::vector<double> q(my, 0.0);
        for (int x = 0; x < m; ++x)
            for (int y = 0; y < my; ++y) {
                double pxy = src.pmf[x] * choices[pick[x]][y];
                dist += pxy * src.distortion.entry(x, y);
                q[y] += pxy;
            }
        if (dist <= d) {
            double mi = 0.0;
            for (int x = 0; x < m; ++x)
                for (int y = 0; y < my; ++y) {
                    double pyx = choices[pick[x]][y];
                    if (pyx > 0.0 && q[y] > 0.0)
                        mi += src.pmf[x] * pyx * std::log(pyx / q[y]);
                }
            best = std::min(best, mi);
        }
        int k = 0;
        while (k < m && pick[k] + 1 == static_cast<int>(choices.size())) pick[k++] = 0;
        if (k == m) break;
        ++pick[k];
    }
    return best;
}

}  // namespace

TEST_SUITE_BEGIN("rd_finite");

TEST_CASE("blahut_arimoto matches the binary closed form") {
    FiniteSource src = binary_source(0.11);
    for (double d : {0.01, 0.03, 0.05, 0.08, 0.10}) {
        FiniteRdSolution sol = blahut_arimoto(src, d, 1e-11);
        double oracle = binary_entropy(0.11) - binary_entropy(d);
        CHECK(sol.converged);
        CHECK(std::abs(sol.rate_nats - oracle) <= 1e-7);
        CHECK(sol.lambda_star > 0.0);
    }
}

TEST_CASE("blahut_arimoto zero-rate region") {
    FiniteSource src = binary_source(0.5);
    FiniteRdSolution sol = blahut_arimoto(src, 0.5, 1e-10);
    CHECK(sol.zero_rate);
    CHECK(sol.rate_nats == 0.0);
    for (double j : sol.tilted_info) CHECK(std::abs(j) <= 1e-12);
}

TEST_CASE("blahut_arimoto dual certificate invariants") {
    FiniteSource ternary({0.5, 0.3, 0.2}, DistortionMeasure::symbol_error(3));
    for (double d : {0.05, 0.1, 0.3}) {
        FiniteRdSolution sol = blahut_arimoto(ternary, d, 1e-10);
        REQUIRE(sol.converged);
        CHECK(std::abs(sol.distortion - d) <= 1e-9);
        // dual feasibility at every reproduction letter
        for (int y = 0; y < ternary.reproduction_alphabet(); ++y) {
            double s = 0.0;
            for (int x = 0; x < ternary.alphabet(); ++x)
                s += ternary.pmf[x] * std::exp(-sol.lambda_star * ternary.distortion.entry(x, y)) /
                     sol.dual_g[x];
            CHECK(s <= 1.0 + 1e-9);
            // equality on the support of the output distribution
            if (sol.output_pmf[y] > 1e-8) CHECK(s == doctest::Approx(1.0).epsilon(1e-6));
        }
        // E[j] = rate within the dual gap, gap within tolerance
        double mean_j = 0.0;
        for (int x = 0; x < ternary.alphabet(); ++x)
            mean_j += ternary.pmf[x] * d_tilted_information(sol, x);
        CHECK(sol.dual_gap >= -1e-12);
        CHECK(sol.dual_gap <= 1e-9);
        CHECK(std::abs(mean_j - sol.rate_nats) <= 1e-9);
    }
}

TEST_CASE("blahut_arimoto vs brute-force grid") {
    // binary at 1/60 resolution
    FiniteSource bin = binary_source(0.11);
    double d = 0.05;
    FiniteRdSolution sol = blahut_arimoto(bin, d, 1e-10);
    double grid = grid_min_rate(bin, d, 60);
    double margin = sol.lambda_star / 60.0 + 2.0 / 60.0;
    CHECK(grid >= sol.rate_nats - 1e-9);
    CHECK(grid - sol.rate_nats <= margin);

    // ternary at the coarse resolution the m = 3 confirmation uses
    FiniteSource tern({0.5, 0.3, 0.2}, DistortionMeasure::symbol_error(3));
    d = 0.1;
    sol = blahut_arimoto(tern, d, 1e-10);
    double oracle = tern.entropy() - binary_entropy(d) - d * std::log(2.0);
    CHECK(std::abs(sol.rate_nats - oracle) <= 1e-7);
    grid = grid_min_rate(tern, d, 12);
    margin = sol.lambda_star / 12.0 + 2.0 / 12.0;
    CHECK(grid >= sol.rate_nats - 1e-9);
    CHECK(grid - sol.rate_nats <= margin);
}

TEST_CASE("rate curve is nonincreasing and convex on a grid") {
    FiniteSource src = binary_source(0.2);
    std::vector<double> ds, rates;
    for (double d = 0.02; d <= 0.18; d += 0.02) {
        ds.push_back(d);
        rates.push_back(blahut_arimoto(src, d, 1e-10).rate_nats);
    }
    for (size_t i = 1; i < rates.size(); ++i) CHECK(rates[i] <= rates[i - 1] + 1e-10);
    for (size_t i = 1; i + 1 < rates.size(); ++i)
        CHECK(0.5 * (rates[i - 1] + rates[i + 1]) >= rates[i] - 1e-9);
}

TEST_CASE("d-tilted information closed values") {
    // equiprobable binary: j = ln 2 - h_b(d) for both symbols
    FiniteSource src = binary_source(0.5);
    FiniteRdSolution sol = blahut_arimoto(src, 0.1, 1e-11);
    double oracle = kLn2 - binary_entropy(0.1);
    CHECK(d_tilted_information(sol, 0) == doctest::Approx(oracle).epsilon(1e-7));
    CHECK(d_tilted_information(sol, 1) == doctest::Approx(oracle).epsilon(1e-7));

    // low-distortion regime: j(x) = log(1/P(x)) - phi(d)
    FiniteSource biased = binary_source(0.11);
    sol = blahut_arimoto(biased, 0.05, 1e-11);
    TiltedDistribution z = solve_lambda(biased.distortion, 0.05);
    double phi = phi_of_d(z, 0.05);
    CHECK(d_tilted_information(sol, 1) ==
          doctest::Approx(std::log(1.0 / 0.11) - phi).epsilon(1e-6));
    CHECK(d_tilted_information(sol, 0) ==
          doctest::Approx(std::log(1.0 / 0.89) - phi).epsilon(1e-6));
}

TEST_CASE("slb equality test: additive decomposition over the group") {
    // equiprobable source on Z_m: equality holds at every solvable d
    FiniteSource eq({0.25, 0.25, 0.25, 0.25}, DistortionMeasure::symbol_error(4));
    for (double d : {0.1, 0.4, 0.7}) {
        SlbEqualityResult r = slb_equality_test(eq, d);
        CHECK(r.holds);
        for (double q : r.y_star_pmf) CHECK(q == doctest::Approx(0.25).epsilon(1e-9));
    }

    // binary: holds iff d <= p, with the bias q solving q(1-d) + (1-q)d = p
    FiniteSource bin = binary_source(0.11);
    SlbEqualityResult r = slb_equality_test(bin, 0.05);
    CHECK(r.holds);
    double q = (0.11 - 0.05) / (1.0 - 2.0 * 0.05);
    CHECK(r.y_star_pmf[1] == doctest::Approx(q).epsilon(1e-9));
    r = slb_equality_test(bin, 0.2);
    CHECK_FALSE(r.holds);
    CHECK(r.most_negative < 0.0);
}

TEST_CASE("critical distortion") {
    FiniteSource tern({0.5, 0.3, 0.2}, DistortionMeasure::symbol_error(3));
    CriticalDistortion dc = critical_distortion(tern);
    CHECK(dc.d_c == doctest::Approx(0.4).epsilon(1e-3));
    CHECK(dc.verified);

    CriticalDistortion bin = critical_distortion(binary_source(0.11));
    CHECK(bin.d_c == doctest::Approx(0.11).epsilon(1e-4));

    CriticalDistortion eq4 = critical_distortion(
        FiniteSource({0.25, 0.25, 0.25, 0.25}, DistortionMeasure::symbol_error(4)));
    CHECK(eq4.d_c == doctest::Approx(0.75).epsilon(1e-3));

    CHECK_THROWS_AS(
        critical_distortion(FiniteSource({0.5, 0.5},
                                         DistortionMeasure::finite_matrix({{0, 1}, {2, 0}}))),
        std::invalid_argument);
}

TEST_CASE("solver meets the lower bound everywhere below d_c") {
    // binary p = 0.11 and ternary symbol error: rate == entropy - phi(d) and
    // the tilted information takes the log(1/P) - phi form, for all d <= d_c
    FiniteSource bin = binary_source(0.11);
    FiniteSource tern({0.5, 0.3, 0.2}, DistortionMeasure::symbol_error(3));
    struct Case { FiniteSource src; double d_c; };
    Case cases[] = {{bin, 0.11}, {tern, 0.4}};
    for (const Case& c : cases) {
        for (int k = 1; k <= 8; ++k) {
            double d = c.d_c * k / 9.0;
            FiniteRdSolution sol = blahut_arimoto(c.src, d, 1e-11);
            TiltedDistribution z = solve_lambda(c.src.distortion, d);
            double slb = c.src.entropy() - phi_of_d(z, d);
            CHECK(std::abs(sol.rate_nats - slb) <= 1e-6);
            for (int x = 0; x < c.src.alphabet(); ++x) {
                double closed = std::log(1.0 / c.src.pmf[x]) - phi_of_d(z, d);
                CHECK(std::abs(d_tilted_information(sol, x) - closed) <= 1e-6);
            }
        }
    }
}

TEST_CASE("iid sum spectrum: exact binomial check") {
    // two atoms a, b: the n-fold sum law is binomial
    std::vector<double> vals{0.0, 1.0}, probs{0.7, 0.3};
    DiscreteSpectrum s = iid_sum_spectrum(vals, probs, 10);
    REQUIRE(s.value.size() == 11);
    // P[S >= 3] via binomial tail
    double tail = 0.0;
    for (int k = 3; k <= 10; ++k) {
        double c = 1.0;
        for (int i = 0; i < k; ++i) c = c * (10 - i) / (i + 1);
        tail += c * std::pow(0.3, k) * std::pow(0.7, 10 - k);
    }
    CHECK(s.ccdf(3.0) == doctest::Approx(tail).epsilon(1e-12));
    CHECK(s.ccdf(-1.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(s.upper_quantile(1.0) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("converse_cj: vacuous cases and a live bound") {
    // deterministic tilted information: bound reduces to -e^{-gamma} < 0
    FiniteSource sym = binary_source(0.5);
    FiniteRdSolution sol = blahut_arimoto(sym, 0.1, 1e-11);
    int n = 10;
    double log_m = n * (kLn2 - binary_entropy(0.1));
    CHECK(converse_cj(sym, sol, n, log_m) <= 0.0);

    // huge codebook: perfect codes exist, every bound is vacuous
    CHECK(converse_cj(sym, sol, 4, 4.0 * kLn2 + 1e-9) <= 0.0);

    // biased binary at the dispersion-approximation codebook size: the bound
    // lands in (0, eps]
    FiniteSource biased = binary_source(0.11);
    sol = blahut_arimoto(biased, 0.05, 1e-11);
    n = 20;
    double slb = binary_entropy(0.11) - binary_entropy(0.05);
    double v = biased.varentropy();
    double eps = 0.1;
    double log_m_gauss = n * slb + std::sqrt(n * v) * q_inv(eps);
    double bound = converse_cj(biased, sol, n, log_m_gauss);
    CHECK(bound > 0.0);
    CHECK(bound <= eps);
}

TEST_SUITE_END();
