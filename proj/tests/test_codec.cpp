#include <doctest.h>

#include <cmath>
#include <numeric>

#include "latrd/codec.hpp"

using namespace latrd;

TEST_SUITE_BEGIN("codec");

TEST_CASE("huffman lengths: dyadic, skewed, degenerate") {
    // eight equal weights: a perfect 3-bit code
    std::vector<double> w(8, 1.0);
    std::vector<int> len = huffman_lengths(w);
    for (int l : len) CHECK(l == 3);

    // Kraft equality for an optimal code
    std::vector<double> skew{0.5, 0.25, 0.125, 0.125};
    len = huffman_lengths(skew);
    double kraft = 0.0;
    for (int l : len) kraft += std::pow(2.0, -l);
    CHECK(kraft == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(len[0] == 1);

    // single symbol: empty codeword
    CHECK(huffman_lengths({1.0}) == std::vector<int>{0});

    // average length within one bit of the entropy for a random pmf
    Rng rng(8);
    std::vector<double> pmf(37);
    double s = 0.0;
    for (double& p : pmf) {
        p = rng.uniform01();
        s += p;
    }
    for (double& p : pmf) p /= s;
    len = huffman_lengths(pmf);
    double avg = 0.0, h = 0.0;
    for (size_t i = 0; i < pmf.size(); ++i) {
        avg += pmf[i] * len[i];
        h += nlogn(pmf[i]) / kLn2;
    }
    CHECK(avg >= h - 1e-9);
    CHECK(avg <= h + 1.0);
}

TEST_CASE("variable length: dyadic uniform costs exactly 3 bits") {
    const int K = 8;
    ContinuousSource src = ContinuousSource::uniform(-0.5 / K, 1.0 - 0.5 / K);
    Lattice lat = Lattice::zn(1).with_scale(1.0 / K);
    CodecStats st = simulate_variable_length(src, lat, 1.0 / (4.0 * K * K), 200000, 99);
    CHECK(st.distinct_cells == K);
    CHECK(st.escape_count == 0);
    CHECK(st.avg_length_bits_per_letter == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(st.distortion_violations == 0);
}

TEST_CASE("variable length: single giant cell costs zero bits") {
    ContinuousSource src = ContinuousSource::gaussian(1.0);
    Lattice lat = Lattice::zn(1).with_scale(1e6);
    CodecStats st = simulate_variable_length(src, lat, 1e12 / 4.0, 50000, 5);
    CHECK(st.distinct_cells == 1);
    CHECK(st.avg_length_bits_per_letter == 0.0);
    CHECK(st.escape_count == 0);
}

TEST_CASE("variable length: Gaussian bracket around the entropy estimate") {
    ContinuousSource src = ContinuousSource::gaussian(1.0);
    double d = 1e-4;
    Lattice lat = scale_to_distortion(Lattice::zn(1), DistortionMeasure::mse(1), d);
    CodecStats st = simulate_variable_length(src, lat, d, 400000, 2024);
    CHECK(st.distortion_violations == 0);
    CHECK(st.escape_count <= st.samples / 100);
    double h = st.entropy_estimate_bits_per_letter;
    double se = st.entropy_se_bits_per_letter;
    CHECK(st.avg_length_bits_per_letter >= h - 3.0 * se);
    CHECK(st.avg_length_bits_per_letter <= h + 1.0 + 3.0 * se);
}

TEST_CASE("variable length: determinism and per-cell dump") {
    ContinuousSource src = ContinuousSource::gaussian(1.0);
    double d = 1e-2;
    Lattice lat = scale_to_distortion(Lattice::zn(1), DistortionMeasure::mse(1), d);
    std::vector<CellRecord> cells_a, cells_b;
    CodecStats a = simulate_variable_length(src, lat, d, 50000, 7, &cells_a);
    CodecStats b = simulate_variable_length(src, lat, d, 50000, 7, &cells_b);
    CHECK(a.avg_length_bits_per_letter == b.avg_length_bits_per_letter);
    CHECK(a.entropy_estimate_bits_per_letter == b.entropy_estimate_bits_per_letter);
    REQUIRE(cells_a.size() == cells_b.size());
    for (size_t i = 0; i < cells_a.size(); ++i) {
        CHECK(cells_a[i].index_hash == cells_b[i].index_hash);
        CHECK(cells_a[i].count == cells_b[i].count);
        CHECK(cells_a[i].codeword_length == cells_b[i].codeword_length);
    }
    // counts in the dump sum to the training budget
    std::uint64_t total = 0;
    for (const CellRecord& c : cells_a) total += c.count;
    CHECK(total == 50000);
}

TEST_CASE("fixed length: full coverage, symmetric split, spectrum consistency") {
    const int K = 8;
    ContinuousSource src = ContinuousSource::uniform(-0.5 / K, 1.0 - 0.5 / K);
    Lattice lat = Lattice::zn(1).with_scale(1.0 / K);
    double d = 1.0 / (4.0 * K * K);
    CodecStats st = simulate_fixed_length(src, lat, d, 8, 100000, 3);
    CHECK(st.eps_hat == 0.0);
    CHECK(st.flags.find("M_exceeds_observed_cells") == std::string::npos);
    st = simulate_fixed_length(src, lat, d, 64, 100000, 3);
    CHECK(st.eps_hat == 0.0);
    CHECK(st.flags.find("M_exceeds_observed_cells") != std::string::npos);

    ContinuousSource g = ContinuousSource::gaussian(1.0);
    CodecStats sym = simulate_fixed_length(g, Lattice::zn(1).with_scale(8.0), 16.0, 1, 200000, 17);
    // cells are [-4, 4), [4, 12), ...: center cell holds nearly all mass
    CHECK(sym.eps_hat <= 1e-3);

    Lattice split = Lattice::zn(1).with_scale(2.0);  // boundaries at +-1, cells centered 0, +-2
    CodecStats tri = simulate_fixed_length(g, split, 1.0, 1, 200000, 17);
    // keeping only the center cell: eps = P[|X| > 1] = 2 Q(1)
    double expect = 2.0 * q_function(1.0);
    CHECK(tri.eps_hat == doctest::Approx(expect).epsilon(0.02));
    CHECK(tri.wilson_lo <= expect);
    CHECK(tri.wilson_hi >= expect);
    // Wilson interval consistent with the training-spectrum bound
    CHECK(tri.wilson_lo <= tri.spectrum_eps_bound);

    // distortion never exceeded: covering radius is honored
    CHECK(tri.distortion_violations == 0);
}

TEST_SUITE_END();
