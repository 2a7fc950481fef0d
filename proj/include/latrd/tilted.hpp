#pragma once

// The tilted distribution Z_lambda with density proportional to
// exp(-lambda d(z)), the tilt equation E[d(Z_lambda)] = d, the distortion
// term phi(d) = log Sigma + lambda d = H(Z_lambda), and the classical
// Shannon lower bound R(d) >= h(X) - phi(d) with its varentropy.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "latrd/distortion.hpp"
#include "latrd/math.hpp"

namespace latrd {

struct TiltedDistribution {
    double lambda = 0.0;           // tilt, per nat
    double mean_distortion = 0.0;  // E[d(Z_lambda)], equals the solved d
    double log_sigma = 0.0;        // log of the normalizer Sigma
    double entropy = 0.0;          // H(Z_lambda) or h(Z_lambda) = log Sigma + lambda d
    bool discrete = false;
    int dimension = 1;
    std::vector<double> pmf;       // discrete case: pmf over the group Z_m
};

// phi evaluated from a solved tilt: log Sigma + lambda d.
inline double phi_of_d(const TiltedDistribution& z, double d) {
    return z.log_sigma + z.lambda * d;
}

namespace detail {

// Discrete tilt over a group profile: Sigma(lambda), mean distortion and pmf.
inline TiltedDistribution tilt_discrete(const std::vector<double>& profile, double lambda) {
    TiltedDistribution z;
    z.discrete = true;
    z.lambda = lambda;
    int m = static_cast<int>(profile.size());
    z.pmf.resize(m);
    // Shift exponents by the max for stability.
    double mx = -kInf;
    for (double v : profile) mx = std::max(mx, -lambda * v);
    double sum = 0.0;
    for (int i = 0; i < m; ++i) {
        z.pmf[i] = std::exp(-lambda * profile[i] - mx);
        sum += z.pmf[i];
    }
    double mean = 0.0;
    for (int i = 0; i < m; ++i) {
        z.pmf[i] /= sum;
        mean += z.pmf[i] * profile[i];
    }
    z.log_sigma = std::log(sum) + mx;
    z.mean_distortion = mean;
    z.entropy = z.log_sigma + lambda * mean;
    return z;
}

// Radial moments of exp(-lambda d(r)) r^{n-1} on (0, inf) for a continuous
// profile; returns {log integral, mean distortion under the tilt}.
struct RadialTilt {
    double log_integral;
    double mean_distortion;
};

inline RadialTilt tilt_radial(const std::function<double(double)>& profile, double lambda,
                              int n) {
    // Find the scale where the integrand peaks to normalize the quadrature.
    auto g = [&](double r) { return std::exp(-lambda * profile(r)) * std::pow(r, n - 1); };
    double z0 = integrate(g, 0.0, 1.0, 1e-14) + integrate_to_infinity(g, 1.0, 1e-11);
    auto gd = [&](double r) { return profile(r) * g(r); };
    double z1 = integrate(gd, 0.0, 1.0, 1e-14) + integrate_to_infinity(gd, 1.0, 1e-11);
    return {std::log(z0), z1 / z0};
}

}  // namespace detail

// Solves E[d(Z_lambda)] = d. Closed forms cover the power profiles r^s
// (hence MSE and all scaled L^p powers) and the symbol-error family;
// everything else falls back to monotone bisection on log lambda.
inline TiltedDistribution solve_lambda(const DistortionMeasure& m, double d) {
    if (!(d > 0.0)) throw std::invalid_argument("solve_lambda: d must be > 0");

    if (m.is_finite()) {
        auto prof_opt = m.group_profile();
        if (!prof_opt)
            throw std::invalid_argument("solve_lambda: finite kind without group structure");
        const std::vector<double>& prof = *prof_opt;
        int malpha = static_cast<int>(prof.size());
        double d_max = 0.0;
        for (double v : prof) d_max += v;
        d_max /= malpha;  // E[d(Z_0)], the lambda -> 0 limit
        if (d > d_max + 1e-15)
            throw std::invalid_argument("solve_lambda: d above E[d(Z_0)] = " + std::to_string(d_max));
        // Symbol-error closed form: profile 1{z != 0}.
        bool symbol_error = true;
        for (int i = 1; i < malpha; ++i) symbol_error = symbol_error && prof[i] == 1.0;
        if (symbol_error && prof[0] == 0.0) {
            double lambda = std::log((malpha - 1) * (1.0 - d) / d);
            TiltedDistribution z = detail::tilt_discrete(prof, lambda);
            z.dimension = 1;
            return z;
        }
        // Monotone bisection on lambda (mean distortion decreases in lambda).
        double lo = 0.0, hi = 1.0;
        while (detail::tilt_discrete(prof, hi).mean_distortion > d && hi < 1e18) hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            if (detail::tilt_discrete(prof, mid).mean_distortion > d) lo = mid; else hi = mid;
            if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
        }
        TiltedDistribution z = detail::tilt_discrete(prof, 0.5 * (lo + hi));
        z.dimension = 1;
        return z;
    }

    // Continuous power profile d(r) = r^s with the L^p geometry:
    //   Sigma = b_{n,p} n^{n/p} Gamma(n/s + 1) lambda^{-n/s},
    //   E[d(Z_lambda)] = (n/s) / lambda  =>  lambda = n / (s d).
    int n = m.dimension();
    double p = m.norm_order();
    double s = m.exponent();
    TiltedDistribution z;
    z.discrete = false;
    z.dimension = n;
    z.lambda = n / (s * d);
    z.mean_distortion = d;
    double log_np = std::isinf(p) ? 0.0 : (n / p) * std::log(static_cast<double>(n));
    z.log_sigma = log_lp_ball_volume(n, p) + log_np + std::lgamma(n / s + 1.0) -
                  (n / s) * std::log(z.lambda);
    if (m.kind() == DistortionKind::WeightedMse) z.log_sigma -= m.log_abs_det_weight();
    z.entropy = z.log_sigma + z.lambda * d;
    return z;
}

// Quadrature route for arbitrary monotone radial profiles, kept separate so
// the closed forms above can be validated against it.
inline TiltedDistribution solve_lambda_radial(const std::function<double(double)>& profile,
                                              int n, double p, double d) {
    if (!(d > 0.0)) throw std::invalid_argument("solve_lambda_radial: d must be > 0");
    double log_area = std::log(static_cast<double>(n)) + log_lp_ball_volume(n, p) +
                      (std::isinf(p) ? 0.0 : (n / p) * std::log(static_cast<double>(n)));
    double llo = -40.0, lhi = 40.0;
    auto mean_at = [&](double ll) {
        return detail::tilt_radial(profile, std::exp(ll), n).mean_distortion;
    };
    if (mean_at(llo) < d || mean_at(lhi) > d)
        throw std::invalid_argument("solve_lambda_radial: d outside bracket");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (llo + lhi);
        if (mean_at(mid) > d) llo = mid; else lhi = mid;
        if (lhi - llo < 1e-13) break;
    }
    double lambda = std::exp(0.5 * (llo + lhi));
    detail::RadialTilt t = detail::tilt_radial(profile, lambda, n);
    TiltedDistribution z;
    z.discrete = false;
    z.dimension = n;
    z.lambda = lambda;
    z.mean_distortion = t.mean_distortion;
    // surface factor: Vol{||x||_p <= u} = b_{n,p} u^n => dV = n b_{n,p} u^{n-1} du,
    // and u = n^{1/p} r folds in the n^{n/p} scale.
    z.log_sigma = t.log_integral + log_area;
    z.entropy = z.log_sigma + lambda * t.mean_distortion;
    return z;
}

// ---------------------------------------------------------------------------

struct SlbResult {
    double lambda_star = 0.0;
    double phi_d = 0.0;
    double slb_rate = 0.0;         // h(X) - phi(d); negative values flagged, not clamped
    double slb_varentropy = 0.0;   // Var[-log f(X)]
    bool vacuous = false;
};

// Classical Shannon lower bound from source statistics (entropy in nats and
// varentropy in nats^2) and a difference distortion measure.
inline SlbResult classical_slb_from_stats(double entropy_nats, double varentropy_nats2,
                                          const DistortionMeasure& m, double d) {
    TiltedDistribution z = solve_lambda(m, d);
    SlbResult r;
    r.lambda_star = z.lambda;
    r.phi_d = phi_of_d(z, d);
    r.slb_rate = entropy_nats - r.phi_d;
    r.slb_varentropy = varentropy_nats2;
    r.vacuous = r.slb_rate < 0.0;
    return r;
}

// Overloads over any source exposing per-letter entropy/varentropy (the
// continuous families) or plain entropy/varentropy (finite sources).
template <typename Source>
SlbResult classical_slb(const Source& src, const DistortionMeasure& m, double d) {
    if constexpr (requires { src.letter_entropy(); })
        return classical_slb_from_stats(src.letter_entropy(), src.letter_varentropy(), m, d);
    else
        return classical_slb_from_stats(src.entropy(), src.varentropy(), m, d);
}

// Tilted information of a realization: j(x, d) = -log density(x) - phi(d).
// Zero-density points map to +inf.
inline double tilted_information(double log_density_x, double phi_d) {
    if (log_density_x == -kInf) return kInf;
    return -log_density_x - phi_d;
}

template <typename Source>
double tilted_information(const Source& src, const DistortionMeasure& m, double d, double x) {
    TiltedDistribution z = solve_lambda(m, d);
    if constexpr (requires { src.letter_log_density(x); })
        return tilted_information(src.letter_log_density(x), phi_of_d(z, d));
    else
        return tilted_information(std::log(src.pmf.at(static_cast<size_t>(x))), phi_of_d(z, d));
}

// ---------------------------------------------------------------------------
// Regularity screen for scalar profiles d(r): the conditions under which the
// tilt equation has solutions at every small d.

struct LinkovReport {
    bool zero_only_at_zero = false;   // d(r) = 0 only at r = 0, nondecreasing
    bool small_r_power_bound = false; // d(r) = O(r^nu) near 0 for some nu > 0
    bool tail_integrable = false;     // int d^2(r) exp(-d(r)) dr < inf
    double tail_integral = 0.0;
};

inline LinkovReport check_linkov_conditions(const std::function<double(double)>& profile) {
    LinkovReport rep;

    // (i) positivity away from 0 and monotonicity on a log grid.
    bool positive = profile(0.0) == 0.0;
    bool monotone = true;
    double prev = 0.0;
    for (double r = 1e-9; r <= 1e4; r *= 1.6) {
        double v = profile(r);
        if (!(v > 0.0)) positive = false;
        if (v < prev - 1e-15 * std::max(1.0, prev)) monotone = false;
        prev = v;
    }
    rep.zero_only_at_zero = positive && monotone;

    // (ii) power bound near 0: require d(r) -> 0 with a finite positive
    // log-log slope, so that r^{-nu} d(r) stays bounded for nu = slope.
    double d1 = profile(1e-6), d2 = profile(1e-9);
    if (d1 > 0.0 && d2 > 0.0 && d2 < d1) {
        double slope = (std::log(d1) - std::log(d2)) / (std::log(1e-6) - std::log(1e-9));
        rep.small_r_power_bound = slope > 1e-9 && std::isfinite(slope) && d2 < 1e-3;
    } else {
        rep.small_r_power_bound = false;
    }

    // (iii) quadrature of d^2(r) e^{-d(r)} with a divergence screen on the
    // far tail: the integrand sampled at r = 1e2 .. 1e6 must keep shrinking
    // fast enough that the remaining mass is summable.
    auto integrand = [&](double r) {
        double v = profile(r);
        return v * v * std::exp(-v);
    };
    bool tail_ok = true;
    double prev_mass = kInf;
    for (double r = 1e2; r <= 1e6; r *= 10.0) {
        double mass = integrand(r) * r;  // local scale contribution ~ f(r) * r per decade
        if (mass > prev_mass * 0.9 && mass > 1e-12) { tail_ok = false; break; }
        prev_mass = mass;
    }
    if (tail_ok) {
        rep.tail_integral = integrate(integrand, 0.0, 100.0, 1e-10) +
                            integrate_to_infinity(integrand, 100.0, 1e-9);
        rep.tail_integrable = std::isfinite(rep.tail_integral);
    }
    return rep;
}

inline LinkovReport check_linkov_conditions(const DistortionMeasure& m) {
    if (!m.is_continuous_difference())
        throw std::invalid_argument("check_linkov_conditions: scalar profile required");
    return check_linkov_conditions([&m](double r) { return m.profile(r); });
}

}  // namespace latrd
