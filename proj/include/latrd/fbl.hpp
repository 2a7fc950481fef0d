#pragma once

// Finite-blocklength converse and achievability bounds for lossy compression
// at excess-distortion probability eps, plus the Gaussian (dispersion-style)
// approximations built on the Shannon lower bound.
//
// Conventions: all rates are nats per letter; bounds that come out
// nonpositive are clamped to 0 and flagged "vacuous".

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latrd/distortion.hpp"
#include "latrd/lattice.hpp"
#include "latrd/math.hpp"
#include "latrd/rd_finite.hpp"
#include "latrd/rng.hpp"
#include "latrd/sources.hpp"
#include "latrd/tilted.hpp"

namespace latrd {

enum class BoundLabel {
    ConverseCa,
    ConverseC,
    AchievabilityLattice,
    GaussianCont,
    GaussianDisc,
    Slb,
    MemoryConverse,
    MemoryAchievability,
};

inline const char* to_string(BoundLabel l) {
    switch (l) {
        case BoundLabel::ConverseCa: return "converse_ca";
        case BoundLabel::ConverseC: return "converse_c";
        case BoundLabel::AchievabilityLattice: return "achievability_lattice";
        case BoundLabel::GaussianCont: return "gaussian_cont";
        case BoundLabel::GaussianDisc: return "gaussian_disc";
        case BoundLabel::Slb: return "slb";
        case BoundLabel::MemoryConverse: return "memory_converse";
        case BoundLabel::MemoryAchievability: return "memory_achievability";
    }
    return "?";
}

struct BoundPoint {
    int n = 0;
    double d = 0.0;
    double eps = 0.0;
    double rate_nats_per_letter = 0.0;
    BoundLabel label = BoundLabel::Slb;
    double gamma = 0.0;   // gamma achieving the sup/inf, when applicable
    double mc_se = 0.0;   // Monte-Carlo standard error of the rate, when applicable
    std::string flags;
};

namespace detail {

inline BoundPoint clamp_rate(BoundPoint p) {
    if (p.rate_nats_per_letter <= 0.0) {
        p.rate_nats_per_letter = 0.0;
        append_flag(p.flags, "vacuous");
    }
    return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Law of the n-letter information S = -log f_{X^n}(X^n). For the stock
// families this is exact: an offset Gamma for Gaussian (chi-square energy)
// and Laplace (L1 energy), a point mass for Uniform.

struct InfoSpectrum {
    enum class Kind { Deterministic, GammaShifted, Discrete } kind = Kind::Deterministic;
    double value = 0.0;   // Deterministic
    double offset = 0.0;  // GammaShifted: S = offset + Gamma(shape, 1)
    double shape = 1.0;
    DiscreteSpectrum atoms;

    double ccdf(double t) const {
        switch (kind) {
            case Kind::Deterministic: return t <= value ? 1.0 : 0.0;
            case Kind::GammaShifted: return t <= offset ? 1.0 : gamma_q(shape, t - offset);
            case Kind::Discrete: return atoms.ccdf(t);
        }
        return 0.0;
    }

    // sup{t : P[S >= t] >= p} for p in (0, 1].
    double upper_quantile(double p) const {
        switch (kind) {
            case Kind::Deterministic: return value;
            case Kind::GammaShifted:
                if (p >= 1.0) return offset;
                return offset + gamma_upper_quantile(shape, p);
            case Kind::Discrete: return atoms.upper_quantile(p);
        }
        return 0.0;
    }
};

inline InfoSpectrum info_spectrum(const ContinuousSource& letter, int n) {
    if (letter.dimension() != 1) throw std::invalid_argument("info_spectrum: letter source required");
    InfoSpectrum s;
    switch (letter.family()) {
        case SourceFamily::Gaussian:
            // -log f = (n/2) log(2 pi var) + ||x||^2 / (2 var), energy ~ Gamma(n/2).
            s.kind = InfoSpectrum::Kind::GammaShifted;
            s.offset = 0.5 * n * std::log(2.0 * kPi * letter.gaussian_variance());
            s.shape = 0.5 * n;
            return s;
        case SourceFamily::Uniform:
            s.kind = InfoSpectrum::Kind::Deterministic;
            s.value = n * letter.letter_entropy();
            return s;
        case SourceFamily::Laplace:
            // -log f = n log(2b) + sum |x_i| / b, L1 energy ~ Gamma(n).
            s.kind = InfoSpectrum::Kind::GammaShifted;
            s.offset = n * std::log(2.0 * letter.laplace_scale());
            s.shape = static_cast<double>(n);
            return s;
    }
    throw std::logic_error("info_spectrum: unreachable");
}

// Exact convolution when the atom budget allows; Monte-Carlo atoms beyond it.
inline InfoSpectrum info_spectrum(const FiniteSource& src, int n,
                                  std::uint64_t mc_seed = 0x5bec) {
    std::vector<double> vals(src.alphabet());
    for (int x = 0; x < src.alphabet(); ++x)
        vals[x] = src.pmf[x] > 0.0 ? -std::log(src.pmf[x]) : kInf;
    InfoSpectrum s;
    s.kind = InfoSpectrum::Kind::Discrete;
    try {
        s.atoms = iid_sum_spectrum(vals, src.pmf, n);
        return s;
    } catch (const std::runtime_error&) {
        // budget exceeded: empirical law from 1e6 sampled sums
    }
    Rng rng = Rng::stream(mc_seed, 0);
    const std::size_t draws = 1000000;
    std::vector<double> cdf(src.pmf.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
        acc += src.pmf[i];
        cdf[i] = acc;
    }
    std::vector<double> sums(draws);
    for (std::size_t i = 0; i < draws; ++i) {
        double total = 0.0;
        for (int k = 0; k < n; ++k) {
            double u = rng.uniform01();
            std::size_t idx = std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin();
            total += vals[std::min(idx, cdf.size() - 1)];
        }
        sums[i] = total;
    }
    std::sort(sums.begin(), sums.end());
    DiscreteSpectrum emp;
    emp.value = std::move(sums);
    emp.tail.resize(emp.value.size());
    for (std::size_t i = 0; i < emp.tail.size(); ++i)
        emp.tail[i] = static_cast<double>(emp.tail.size() - i) / emp.tail.size();
    s.atoms = std::move(emp);
    return s;
}

namespace detail {

// Largest log M excluded by eps >= sup_gamma { P[S - phi >= log M + gamma] - e^-gamma }.
struct GammaSweep {
    double log_m = -kInf;
    double gamma = 0.0;
};

inline GammaSweep sweep_gamma(const InfoSpectrum& spec, double phi_n, double eps, int n) {
    GammaSweep out;
    for (double gamma : log_grid(1e-6, std::max(2.0, static_cast<double>(n)))) {
        double p = eps + std::exp(-gamma);
        if (p >= 1.0) continue;
        double cand = spec.upper_quantile(p) - phi_n - gamma;
        if (cand > out.log_m) {
            out.log_m = cand;
            out.gamma = gamma;
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Converse from the information spectrum (weak form of the hypothesis-testing
// converse): each (M, d, eps) code obeys
//   eps >= sup_{gamma > 0} { P[S - phi_n(d) >= log M + gamma] - e^{-gamma} }.

inline BoundPoint converse_ca(const ContinuousSource& letter, const DistortionMeasure& dist,
                              int n, double d, double eps) {
    InfoSpectrum spec = info_spectrum(letter, n);
    TiltedDistribution z = solve_lambda(dist.extended(n), d);
    detail::GammaSweep sw = detail::sweep_gamma(spec, phi_of_d(z, d), eps, n);
    BoundPoint p{n, d, eps, sw.log_m / n, BoundLabel::ConverseCa, sw.gamma};
    return detail::clamp_rate(p);
}

inline BoundPoint converse_ca(const FiniteSource& src, int n, double d, double eps) {
    InfoSpectrum spec = info_spectrum(src, n);
    TiltedDistribution z = solve_lambda(src.distortion, d);
    detail::GammaSweep sw = detail::sweep_gamma(spec, n * phi_of_d(z, d), eps, n);
    BoundPoint p{n, d, eps, sw.log_m / n, BoundLabel::ConverseCa, sw.gamma};
    return detail::clamp_rate(p);
}

// ---------------------------------------------------------------------------
// Hypothesis-testing converse: M >= beta_{1-eps}(P_X, Leb) / Vol(d-ball).
// The optimal test region is a sublevel set of the information, so beta is
// an exact set volume for the stock families.

inline double log_beta_lebesgue(const ContinuousSource& letter, int n, double eps) {
    switch (letter.family()) {
        case SourceFamily::Gaussian: {
            // region: ||x||^2 / (2 var) <= g*, Q(n/2, g*) = eps
            double g = gamma_upper_quantile(0.5 * n, eps);
            return log_ball_volume(n) +
                   0.5 * n * std::log(2.0 * letter.gaussian_variance() * g);
        }
        case SourceFamily::Uniform: {
            // constant likelihood ratio: randomized test of power 1 - eps
            return std::log(1.0 - eps) +
                   n * std::log(letter.uniform_b() - letter.uniform_a());
        }
        case SourceFamily::Laplace: {
            // region: sum |x_i| <= b g*, an L1 ball
            double g = gamma_upper_quantile(static_cast<double>(n), eps);
            return log_lp_ball_volume(n, 1.0) + n * std::log(letter.laplace_scale() * g);
        }
    }
    throw std::logic_error("log_beta_lebesgue: unreachable");
}

inline BoundPoint converse_c_beta(const ContinuousSource& letter, const DistortionMeasure& dist,
                                  int n, double d, double eps) {
    double log_beta = log_beta_lebesgue(letter, n, eps);
    double log_ball = ball_log_volume(dist, n, d);
    BoundPoint p{n, d, eps, (log_beta - log_ball) / n, BoundLabel::ConverseC};
    return detail::clamp_rate(p);
}

// Two-term expansion of log beta: n h + sqrt(n V) Qinv(eps) - (1/2) log n.
inline BoundPoint converse_c_beta_expansion(const ContinuousSource& letter,
                                            const DistortionMeasure& dist, int n, double d,
                                            double eps) {
    double log_beta = n * letter.letter_entropy() +
                      std::sqrt(n * letter.letter_varentropy()) * q_inv(eps) -
                      0.5 * std::log(static_cast<double>(n));
    double log_ball = ball_log_volume(dist, n, d);
    BoundPoint p{n, d, eps, (log_beta - log_ball) / n, BoundLabel::ConverseC};
    append_flag(p.flags, "expansion");
    return detail::clamp_rate(p);
}

// ---------------------------------------------------------------------------
// Lattice achievability under mean-square distortion. A lattice scaled to
// covering radius sqrt(nd) followed by a lossless coder gives an (M, d, eps)
// code whenever
//   P[ -log f(X) - log V_C + gamma > log M ] + P[ 2 r_C v_C(X) > gamma ] <= eps.
// Two evaluations are returned: the analytic Berry-Esseen/Chebyshev pipeline
// (when its slack leaves eps' > 0) and a Monte-Carlo estimate with the gamma
// split optimized over the sampled statistics.

struct AchievabilityResult {
    BoundPoint mc;
    std::optional<BoundPoint> analytic;
    double log_cell_volume = 0.0;
    double covering_radius = 0.0;
};

namespace detail {

// Samples (info, norm) of the n-fold product through its sufficient
// statistic; every stock family admits one (norm is unused when c1 = 0).
inline void sample_info_norm(const ContinuousSource& letter, int n, Rng& rng, double& info,
                             double& norm) {
    switch (letter.family()) {
        case SourceFamily::Gaussian: {
            double var = letter.gaussian_variance();
            double w = rng.gamma(0.5 * n);  // ||x||^2 / (2 var)
            info = 0.5 * n * std::log(2.0 * kPi * var) + w;
            norm = std::sqrt(2.0 * var * w);
            return;
        }
        case SourceFamily::Laplace: {
            double b = letter.laplace_scale();
            double g = rng.gamma(static_cast<double>(n));  // sum |x_i| / b
            info = n * std::log(2.0 * b) + g;
            norm = 0.0;  // unused: Laplace certificates have c1 = 0
            return;
        }
        case SourceFamily::Uniform: {
            info = n * letter.letter_entropy();
            norm = 0.0;
            return;
        }
    }
    throw std::logic_error("sample_info_norm: unreachable");
}

}  // namespace detail

inline AchievabilityResult achievability_lattice(const ContinuousSource& letter,
                                                 const RegularityCertificate& cert,
                                                 const DistortionMeasure& dist,
                                                 LatticeFamily family, int n, double d,
                                                 double eps, std::size_t samples = 1000000,
                                                 std::uint64_t seed = 0x5eed) {
    if (dist.kind() != DistortionKind::Mse)
        throw std::invalid_argument("achievability_lattice: mean-square distortion required");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("achievability_lattice: eps must be in (0,1)");

    Lattice lat = [&] {
        switch (family) {
            case LatticeFamily::Zn: return Lattice::zn(n);
            case LatticeFamily::Dn: return Lattice::dn(n);
            case LatticeFamily::AnStar: return Lattice::an_star(n);
            default: throw std::invalid_argument("achievability_lattice: named family required");
        }
    }();
    lat = scale_to_distortion(lat, DistortionMeasure::mse(n), d);

    AchievabilityResult out;
    out.log_cell_volume = lat.log_cell_volume();
    out.covering_radius = lat.covering_radius();
    double r = out.covering_radius;
    double log_v = out.log_cell_volume;
    double h1 = letter.letter_entropy();
    double var_info = letter.letter_varentropy();
    double root_n = std::sqrt(static_cast<double>(n));

    if (var_info == 0.0) {
        // Flat density: the information is deterministic, every cell mass is
        // the cell volume over the support volume, and eps = 0 is achieved.
        BoundPoint p{n, d, eps, (n * h1 - log_v) / n, BoundLabel::AchievabilityLattice};
        append_flag(p.flags, "exact_eps0");
        out.mc = p;
        out.analytic = p;
        return out;
    }

    // Analytic pipeline: Chebyshev on the norm term, Berry-Esseen on the sum.
    double alpha = letter.second_moment();
    double gamma_a = 2.0 * n * std::sqrt(d) *
                     (cert.c1 * std::sqrt(alpha) + cert.c1 * std::sqrt(d) + cert.c0);
    double m3 = letter.letter_third_abs_central_info_moment();
    double be = 6.0 * m3 / std::pow(var_info, 1.5);
    double eps_prime = eps - be / root_n - 1.0 / n;
    if (eps_prime > 0.0 && eps_prime < 1.0) {
        double log_m = n * h1 - log_v + std::sqrt(n * var_info) * q_inv(eps_prime) + gamma_a;
        BoundPoint p{n, d, eps, log_m / n, BoundLabel::AchievabilityLattice, gamma_a};
        append_flag(p.flags, "analytic");
        out.analytic = p;
    }

    // Monte-Carlo pipeline: optimize the split over the sampled statistics.
    Rng rng = Rng::stream(seed, 7);
    std::vector<double> info(samples), vstat(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        double t, norm;
        detail::sample_info_norm(letter, n, rng, t, norm);
        info[i] = t;
        vstat[i] = 2.0 * r * (cert.c1 * norm + cert.c1 * r + cert.c0 * root_n);
    }
    std::sort(info.begin(), info.end());
    std::sort(vstat.begin(), vstat.end());

    double best_log_m = kInf, best_gamma = 0.0, best_eps1 = eps;
    auto consider = [&](std::size_t k) {
        // q2 = k / samples of the v-statistic mass may exceed gamma
        double gamma = (k == 0) ? vstat.back() * (1.0 + 1e-12) + 1e-300
                                : vstat[samples - k];
        double eps1 = eps - static_cast<double>(k) / samples;
        if (eps1 <= 0.0) return;
        // smallest t with empirical P[info > t] <= eps1
        std::size_t allowed = static_cast<std::size_t>(std::floor(eps1 * samples));
        double t = info[samples - 1 - allowed];
        double log_m = t - log_v + gamma;
        if (log_m < best_log_m) {
            best_log_m = log_m;
            best_gamma = gamma;
            best_eps1 = eps1;
        }
    };
    consider(0);
    std::size_t max_k = static_cast<std::size_t>(0.9 * eps * samples);
    std::size_t k = 1;
    while (k <= max_k) {
        consider(k);
        k = std::max(k + 1, k + k / 8);
    }

    // Quantile standard error via the density around the threshold.
    double p_tail = std::max(best_eps1, 1.0 / samples);
    std::size_t lo_i = static_cast<std::size_t>((1.0 - std::min(0.999, p_tail * 1.5)) * samples);
    std::size_t hi_i = static_cast<std::size_t>((1.0 - p_tail * 0.5) * samples);
    hi_i = std::min(hi_i, samples - 1);
    double slope = (info[hi_i] - info[lo_i]) / std::max(1e-300, p_tail);
    double se = std::sqrt(p_tail * (1.0 - p_tail) / samples) * std::abs(slope) / n;

    BoundPoint p{n, d, eps, best_log_m / n, BoundLabel::AchievabilityLattice, best_gamma};
    p.mc_se = se;
    append_flag(p.flags, "mc");
    out.mc = p;
    return out;
}

// ---------------------------------------------------------------------------
// Gaussian approximation R ~ R_slb(d) + sqrt(V/n) Qinv(eps) with explicit
// correction bands. The continuous variant carries a [0, kappa sqrt(d)]
// cell-variation band; the discrete variant requires d <= d_c, where the
// lower bound is exact and the sqrt(d) band disappears.

enum class ApproxMode { Continuous, Discrete };

struct ApproximationTerms {
    double slb_rate = 0.0;
    double varentropy = 0.0;
    double qinv_eps = 0.0;
    double o1_low = 0.0, o1_high = 0.0;  // cell-variation band, nats/letter
    double o2_low = 0.0, o2_high = 0.0;  // blocklength band, nats/letter
};

struct GaussianApprox {
    BoundPoint point;
    double rate_low = 0.0;
    double rate_high = 0.0;
    ApproximationTerms terms;
};

inline GaussianApprox gaussian_approx_from_stats(double entropy_nats, double varentropy,
                                                 const DistortionMeasure& dist, int n, double d,
                                                 double eps, ApproxMode mode, double kappa,
                                                 std::optional<double> d_c = {}) {
    if (mode == ApproxMode::Discrete) {
        if (!d_c) throw std::invalid_argument("gaussian_approx: discrete mode needs d_c");
        if (d > *d_c)
            throw std::invalid_argument("gaussian_approx: d above d_c, approximation unproven");
    }
    SlbResult slb = classical_slb_from_stats(entropy_nats, varentropy, dist, d);
    GaussianApprox out;
    out.terms.slb_rate = slb.slb_rate;
    out.terms.varentropy = varentropy;
    BoundPoint p{n, d, eps, 0.0,
                 mode == ApproxMode::Continuous ? BoundLabel::GaussianCont
                                                : BoundLabel::GaussianDisc};
    if (varentropy == 0.0) {
        out.terms.qinv_eps = 0.0;
        append_flag(p.flags, "zero_varentropy");
        p.rate_nats_per_letter = slb.slb_rate;
    } else {
        out.terms.qinv_eps = q_inv(eps);
        p.rate_nats_per_letter =
            slb.slb_rate + std::sqrt(varentropy / n) * out.terms.qinv_eps;
    }
    if (mode == ApproxMode::Continuous) {
        out.terms.o1_low = 0.0;
        out.terms.o1_high = kappa * std::sqrt(d);
    }
    double log2_2sqrtpie = 1.0 + 0.5 * std::log2(kPi * std::exp(1.0));
    out.terms.o2_low = 0.0;
    out.terms.o2_high = log2_2sqrtpie * std::log(static_cast<double>(n)) / n;
    out.rate_low = p.rate_nats_per_letter + out.terms.o1_low + out.terms.o2_low;
    out.rate_high = p.rate_nats_per_letter + out.terms.o1_high + out.terms.o2_high;
    out.point = p;
    return out;
}

// Continuous sources: the band constant defaults to the certificate-driven
// coefficient 2 (c1 sqrt(E X^2) + c0), matching the divergence slack.
inline GaussianApprox gaussian_approx(const ContinuousSource& letter,
                                      const DistortionMeasure& dist, int n, double d,
                                      double eps, std::optional<double> kappa = {}) {
    RegularityCertificate cert = letter.v_bound();
    double k = kappa.value_or(2.0 * (cert.c1 * std::sqrt(letter.second_moment()) + cert.c0));
    return gaussian_approx_from_stats(letter.letter_entropy(), letter.letter_varentropy(), dist,
                                      n, d, eps, ApproxMode::Continuous, k);
}

inline GaussianApprox gaussian_approx(const FiniteSource& src, int n, double d, double eps,
                                      double d_c) {
    return gaussian_approx_from_stats(src.entropy(), src.varentropy(), src.distortion, n, d,
                                      eps, ApproxMode::Discrete, 0.0, d_c);
}

// ---------------------------------------------------------------------------
// Bounds for log-concave sources with memory, stated through the per-letter
// entropy rate. Log-concavity caps the information variance at n, which
// replaces the Berry-Esseen step by Chebyshev on both sides.

struct ProcessDescriptor {
    double entropy_rate_nats = 0.0;  // h(X^n) / n
    bool log_concave = false;
    RegularityCertificate cert;
    double alpha = 0.0;  // bound on E||X^n|| / sqrt(n), squared-moment scale
};

struct MemoryBounds {
    BoundPoint converse;
    BoundPoint achievability;
    double q_low = 0.0, q_high = 0.0;  // the [-sqrt(1/(1-eps)), sqrt(1/eps)] bracket
};

inline MemoryBounds memory_bounds(const ProcessDescriptor& proc, int n, double d, double eps) {
    if (!proc.log_concave)
        throw std::invalid_argument("memory_bounds: log-concave certificate required");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("memory_bounds: eps must be in (0,1)");
    double root_n = std::sqrt(static_cast<double>(n));
    double phi1 = 0.5 * std::log(2.0 * kPi * std::exp(1.0) * d);  // per-letter MSE term
    double slb = proc.entropy_rate_nats - phi1;

    MemoryBounds out;
    out.q_low = -std::sqrt(1.0 / (1.0 - eps));
    out.q_high = std::sqrt(1.0 / eps);

    double denom = 1.0 - eps - 1.0 / root_n;
    BoundPoint conv{n, d, eps, 0.0, BoundLabel::MemoryConverse};
    if (denom <= 0.0) {
        append_flag(conv.flags, "blocklength_too_small");
        conv.rate_nats_per_letter = 0.0;
    } else {
        conv.rate_nats_per_letter =
            slb - std::sqrt(1.0 / (n * denom)) - std::log(static_cast<double>(n)) / (2.0 * n);
    }
    out.converse = detail::clamp_rate(conv);

    double eps_prime = eps - 1.0 / n;
    BoundPoint ach{n, d, eps, 0.0, BoundLabel::MemoryAchievability};
    if (eps_prime <= 0.0) {
        append_flag(ach.flags, "blocklength_too_small");
        ach.rate_nats_per_letter = kInf;
    } else {
        double gamma = 2.0 * n * std::sqrt(d) *
                       (proc.cert.c1 * std::sqrt(proc.alpha) + proc.cert.c1 * std::sqrt(d) +
                        proc.cert.c0);
        Lattice lat = scale_to_distortion(Lattice::an_star(n), DistortionMeasure::mse(n), d);
        double log_v = lat.log_cell_volume();
        ach.gamma = gamma;
        ach.rate_nats_per_letter =
            proc.entropy_rate_nats - log_v / n + std::sqrt(1.0 / (n * eps_prime)) + gamma / n;
    }
    out.achievability = ach;
    return out;
}

}  // namespace latrd
