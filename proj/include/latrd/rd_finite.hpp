#pragma once

// Finite-alphabet rate-distortion: Blahut-Arimoto with a Csiszar-style dual
// certificate, d-tilted information, the additive-decomposition test for
// Shannon-lower-bound equality, the critical distortion d_c, and the exact
// tilted-information converse for blocklength n.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "latrd/distortion.hpp"
#include "latrd/math.hpp"
#include "latrd/tilted.hpp"

namespace latrd {

struct FiniteSource {
    std::vector<double> pmf;
    DistortionMeasure distortion;

    FiniteSource(std::vector<double> p, DistortionMeasure d)
        : pmf(std::move(p)), distortion(std::move(d)) {
        if (!distortion.is_finite())
            throw std::invalid_argument("FiniteSource: finite distortion kind required");
        if (static_cast<int>(pmf.size()) != distortion.alphabet())
            throw std::invalid_argument("FiniteSource: pmf size must match alphabet");
        double s = 0.0;
        for (double v : pmf) {
            if (v < 0.0) throw std::invalid_argument("FiniteSource: negative probability");
            s += v;
        }
        if (std::abs(s - 1.0) > 1e-12)
            throw std::invalid_argument("FiniteSource: pmf must sum to 1");
    }

    int alphabet() const { return static_cast<int>(pmf.size()); }
    int reproduction_alphabet() const { return distortion.reproduction_alphabet(); }

    double entropy() const {
        double h = 0.0;
        for (double v : pmf) h += nlogn(v);
        return h;
    }

    double varentropy() const {
        double h = entropy();
        double m2 = 0.0;
        for (double v : pmf)
            if (v > 0.0) m2 += v * std::log(v) * std::log(v);
        return m2 - h * h;
    }

    // Smallest expected distortion achievable with a single reproduction
    // letter; the rate-distortion function is 0 from here on.
    double max_useful_distortion() const {
        double best = kInf;
        for (int y = 0; y < reproduction_alphabet(); ++y) {
            double e = 0.0;
            for (int x = 0; x < alphabet(); ++x) e += pmf[x] * distortion.entry(x, y);
            best = std::min(best, e);
        }
        return best;
    }
};

struct FiniteRdSolution {
    double rate_nats = 0.0;      // primal mutual information at the solution
    double lambda_star = 0.0;    // -R'(d)
    double distortion = 0.0;     // achieved E[d(X, Y*)]
    std::vector<double> output_pmf;
    std::vector<double> dual_g;      // feasible dual certificate g(x)
    std::vector<double> tilted_info; // j(x, d) = -log g(x) - lambda* d
    int iterations = 0;
    double dual_gap = 0.0;
    bool zero_rate = false;
    bool converged = false;
};

namespace detail {

struct BaFixedSlope {
    std::vector<double> q;       // output distribution
    std::vector<double> c;       // c(x) = sum_y q(y) exp(-lambda d(x,y))
    double log_t = 0.0;          // log max_y sum_x p(x) A(x,y) / c(x)
    double distortion = 0.0;
    double rate = 0.0;           // I(X; Y) of the current transition kernel
    int iterations = 0;
};

// Alternating minimization at a fixed Lagrange slope lambda. Stops when the
// dual slack log t drops below tol (t -> 1 certifies optimality).
inline BaFixedSlope ba_fixed_slope(const FiniteSource& src, double lambda,
                                   std::vector<double> q0, double tol, int max_iter) {
    int m = src.alphabet();
    int my = src.reproduction_alphabet();
    std::vector<double> A(static_cast<size_t>(m) * my);
    for (int x = 0; x < m; ++x)
        for (int y = 0; y < my; ++y)
            A[static_cast<size_t>(x) * my + y] = std::exp(-lambda * src.distortion.entry(x, y));

    BaFixedSlope st;
    st.q = std::move(q0);
    st.c.assign(m, 0.0);
    std::vector<double> u(my, 0.0);
    for (st.iterations = 1; st.iterations <= max_iter; ++st.iterations) {
        for (int x = 0; x < m; ++x) {
            double s = 0.0;
            for (int y = 0; y < my; ++y) s += st.q[y] * A[static_cast<size_t>(x) * my + y];
            st.c[x] = s;
        }
        double t = 0.0;
        for (int y = 0; y < my; ++y) {
            double s = 0.0;
            for (int x = 0; x < m; ++x)
                s += src.pmf[x] * A[static_cast<size_t>(x) * my + y] / st.c[x];
            u[y] = s;
            t = std::max(t, s);
        }
        st.log_t = std::log(t);
        for (int y = 0; y < my; ++y) st.q[y] *= u[y];
        // q stays normalized up to rounding: sum_y q u = sum_x p sum_y qA/c = 1.
        if (st.log_t < tol) break;
    }
    // Final statistics from the converged kernel P(y|x) = q(y) A(x,y)/c(x).
    for (int x = 0; x < m; ++x) {
        double s = 0.0;
        for (int y = 0; y < my; ++y) s += st.q[y] * A[static_cast<size_t>(x) * my + y];
        st.c[x] = s;
    }
    double dist = 0.0, rate = 0.0;
    for (int x = 0; x < m; ++x) {
        for (int y = 0; y < my; ++y) {
            double pxy = src.pmf[x] * st.q[y] * A[static_cast<size_t>(x) * my + y] / st.c[x];
            if (pxy <= 0.0) continue;
            dist += pxy * src.distortion.entry(x, y);
            rate += pxy * std::log(A[static_cast<size_t>(x) * my + y] / st.c[x]);
        }
    }
    // I = sum p(x,y) log(P(y|x)/q(y)) = sum p(x,y) log(A/c).
    st.distortion = dist;
    st.rate = rate;
    return st;
}

}  // namespace detail

// Solves the distortion-constrained problem by bisecting the slope lambda
// until the fixed-slope solution achieves E[d] = d, then certifies it with a
// feasible dual pair (g, lambda).
inline FiniteRdSolution blahut_arimoto(const FiniteSource& src, double d, double tol = 1e-10) {
    if (!(d > 0.0)) throw std::invalid_argument("blahut_arimoto: d must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("blahut_arimoto: tol must be > 0");
    int m = src.alphabet();
    int my = src.reproduction_alphabet();

    FiniteRdSolution sol;
    double d_max = src.max_useful_distortion();
    if (d >= d_max - 1e-14) {
        sol.zero_rate = true;
        sol.converged = true;
        sol.rate_nats = 0.0;
        sol.lambda_star = 0.0;
        sol.distortion = d_max;
        sol.output_pmf.assign(my, 0.0);
        int best_y = 0;
        double best = kInf;
        for (int y = 0; y < my; ++y) {
            double e = 0.0;
            for (int x = 0; x < m; ++x) e += src.pmf[x] * src.distortion.entry(x, y);
            if (e < best) { best = e; best_y = y; }
        }
        sol.output_pmf[best_y] = 1.0;
        sol.dual_g.assign(m, 1.0);
        sol.tilted_info.assign(m, 0.0);
        return sol;
    }

    double inner_tol = std::min(tol * 0.1, 1e-11);
    int max_inner = 500000;
    std::vector<double> q(my, 1.0 / my);

    auto dist_at = [&](double lambda) {
        detail::BaFixedSlope st = detail::ba_fixed_slope(src, lambda, q, inner_tol, max_inner);
        q = st.q;  // warm start across the bisection
        sol.iterations += st.iterations;
        return st;
    };

    double lo = 0.0, hi = 1.0;
    detail::BaFixedSlope st = dist_at(hi);
    while (st.distortion > d && hi < 1e15) {
        lo = hi;
        hi *= 2.0;
        st = dist_at(hi);
    }
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        st = dist_at(mid);
        if (st.distortion > d) lo = mid; else hi = mid;
        if (std::abs(st.distortion - d) <= 1e-13 || hi - lo <= 1e-15 * std::max(1.0, hi)) break;
    }
    double lambda = 0.5 * (lo + hi);
    st = dist_at(lambda);

    // Feasible dual certificate: scale c(x) by t = max_y sum_x p A / c so
    // that sum_x p(x) exp(-lambda d(x,y)) / g(x) <= 1 for every y.
    double t = std::exp(st.log_t);
    sol.output_pmf = st.q;
    for (double& v : sol.output_pmf)
        if (v < 1e-12) v = 0.0;
    double qs = 0.0;
    for (double v : sol.output_pmf) qs += v;
    for (double& v : sol.output_pmf) v /= qs;

    sol.lambda_star = lambda;
    sol.distortion = st.distortion;
    sol.rate_nats = std::max(0.0, st.rate);
    sol.dual_g.resize(m);
    sol.tilted_info.resize(m);
    double dual_value = 0.0;
    for (int x = 0; x < m; ++x) {
        sol.dual_g[x] = st.c[x] * t;
        sol.tilted_info[x] = -std::log(sol.dual_g[x]) - lambda * st.distortion;
        dual_value += src.pmf[x] * sol.tilted_info[x];
    }
    sol.dual_gap = sol.rate_nats - dual_value;
    sol.converged = st.log_t < inner_tol * 10.0 && sol.dual_gap < 10.0 * tol;
    return sol;
}

inline double d_tilted_information(const FiniteRdSolution& sol, int x) {
    if (x < 0 || x >= static_cast<int>(sol.tilted_info.size()))
        throw std::invalid_argument("d_tilted_information: symbol out of range");
    return sol.tilted_info[x];
}

// ---------------------------------------------------------------------------
// Equality test: the lower bound is met at d iff the source splits as
// X = Y* + Z_lambda on the group Z_m with independent parts, i.e. iff the
// circular deconvolution of the pmf by the tilted pmf is a distribution.

struct SlbEqualityResult {
    bool holds = false;
    std::vector<double> y_star_pmf;
    double most_negative = 0.0;  // witness when the test fails
};

inline SlbEqualityResult slb_equality_test(const FiniteSource& src, double d) {
    auto prof = src.distortion.group_profile();
    if (!prof)
        throw std::invalid_argument("slb_equality_test: distortion is not group-structured");
    int m = src.alphabet();
    TiltedDistribution z = solve_lambda(src.distortion, d);

    Matrix conv(m, m);
    for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y)
            conv.at(x, y) = z.pmf[((x - y) % m + m) % m];
    std::vector<double> sol = lu_solve(lu_decompose(conv), src.pmf);

    SlbEqualityResult out;
    out.most_negative = 0.0;
    for (double v : sol) out.most_negative = std::min(out.most_negative, v);
    out.holds = out.most_negative >= -1e-10;
    if (out.holds) {
        double s = 0.0;
        for (double& v : sol) {
            v = std::max(v, 0.0);
            s += v;
        }
        for (double& v : sol) v /= s;
        out.y_star_pmf = std::move(sol);
    }
    return out;
}

// Largest d below which the equality test keeps succeeding, located by
// bisection at 1e-6 resolution and cross-checked against the solver at d_c/2.
struct CriticalDistortion {
    double d_c = 0.0;
    bool verified = false;       // solver rate == entropy - phi at d_c/2 within 1e-6
    double ba_slb_gap = 0.0;
};

inline CriticalDistortion critical_distortion(const FiniteSource& src) {
    if (!is_balanced(src.distortion))
        throw std::invalid_argument("critical_distortion: balanced distortion required");
    auto prof = *src.distortion.group_profile();
    double d_hi = 0.0;
    for (double v : prof) d_hi += v;
    d_hi /= prof.size();  // E[d(Z_0)], upper end of the solvable range

    auto holds = [&](double d) { return slb_equality_test(src, d).holds; };

    CriticalDistortion out;
    double lo = 1e-9;
    if (!holds(lo)) {
        out.d_c = 0.0;
        return out;
    }
    double hi = d_hi - 1e-9;
    if (holds(hi)) {
        out.d_c = d_hi;
    } else {
        while (hi - lo > 1e-6) {
            double mid = 0.5 * (lo + hi);
            if (holds(mid)) lo = mid; else hi = mid;
        }
        out.d_c = 0.5 * (lo + hi);
    }

    double d_check = 0.5 * out.d_c;
    FiniteRdSolution ba = blahut_arimoto(src, d_check, 1e-11);
    TiltedDistribution z = solve_lambda(src.distortion, d_check);
    double slb = src.entropy() - phi_of_d(z, d_check);
    out.ba_slb_gap = std::abs(ba.rate_nats - slb);
    out.verified = out.ba_slb_gap <= 1e-6;
    return out;
}

// ---------------------------------------------------------------------------
// Exact law of a sum of n i.i.d. copies of a finitely supported variable,
// kept as sorted atoms. Values closer than 1e-11 merge; the atom budget caps
// the convolution, beyond which the construction refuses.

struct DiscreteSpectrum {
    std::vector<double> value;  // ascending
    std::vector<double> tail;   // tail[i] = P[S >= value[i]]

    double ccdf(double t) const {
        // first atom >= t
        auto it = std::lower_bound(value.begin(), value.end(), t);
        if (it == value.end()) return 0.0;
        return tail[static_cast<size_t>(it - value.begin())];
    }

    // sup{t : P[S >= t] >= p}, i.e. the largest atom whose tail mass reaches p.
    double upper_quantile(double p) const {
        for (size_t i = value.size(); i-- > 0;)
            if (tail[i] >= p) return value[i];
        return value.empty() ? 0.0 : value.front();
    }
};

inline DiscreteSpectrum iid_sum_spectrum(std::span<const double> values,
                                         std::span<const double> probs, int n,
                                         std::size_t max_atoms = 1000000) {
    if (values.size() != probs.size() || values.empty())
        throw std::invalid_argument("iid_sum_spectrum: bad atom list");
    std::vector<std::pair<double, double>> acc{{0.0, 1.0}};
    for (int step = 0; step < n; ++step) {
        std::vector<std::pair<double, double>> next;
        next.reserve(acc.size() * values.size());
        for (const auto& [v, pr] : acc)
            for (size_t k = 0; k < values.size(); ++k)
                if (probs[k] > 0.0) next.emplace_back(v + values[k], pr * probs[k]);
        std::sort(next.begin(), next.end());
        std::vector<std::pair<double, double>> merged;
        merged.reserve(next.size());
        for (const auto& [v, pr] : next) {
            if (!merged.empty() && v - merged.back().first <= 1e-11)
                merged.back().second += pr;
            else
                merged.emplace_back(v, pr);
        }
        if (merged.size() > max_atoms)
            throw std::runtime_error("iid_sum_spectrum: atom budget exceeded");
        acc = std::move(merged);
    }
    DiscreteSpectrum s;
    s.value.reserve(acc.size());
    s.tail.resize(acc.size());
    for (const auto& [v, pr] : acc) s.value.push_back(v);
    double run = 0.0;
    for (size_t i = acc.size(); i-- > 0;) {
        run += acc[i].second;
        s.tail[i] = std::min(1.0, run);
    }
    return s;
}

// Excess-probability lower bound for an (M, d, eps) code at blocklength n:
// eps >= sup_{gamma>0} { P[ sum_i j(X_i, d) >= log M + gamma ] - e^{-gamma} },
// with the per-letter tilted information taken from a converged solution.
inline double converse_cj(const FiniteSource& src, const FiniteRdSolution& sol, int n,
                          double log_M) {
    if (n < 1) throw std::invalid_argument("converse_cj: n must be >= 1");
    DiscreteSpectrum spec = iid_sum_spectrum(sol.tilted_info, src.pmf, n);
    double best = -kInf;
    for (double gamma : log_grid(1e-6, std::max(2.0, static_cast<double>(n)))) {
        double cand = spec.ccdf(log_M + gamma) - std::exp(-gamma);
        best = std::max(best, cand);
    }
    return best;
}

// Rate form of the same bound: the largest log M / n still ruled out at
// excess probability eps.
struct ConverseRate {
    double rate_nats_per_letter = 0.0;
    double gamma = 0.0;
    bool vacuous = false;
};

inline ConverseRate converse_cj_rate(const FiniteSource& src, const FiniteRdSolution& sol,
                                     int n, double eps) {
    DiscreteSpectrum spec = iid_sum_spectrum(sol.tilted_info, src.pmf, n);
    double best = -kInf, best_gamma = 0.0;
    for (double gamma : log_grid(1e-6, std::max(2.0, static_cast<double>(n)))) {
        double p = eps + std::exp(-gamma);
        if (p >= 1.0) continue;
        double cand = spec.upper_quantile(p) - gamma;
        if (cand > best) { best = cand; best_gamma = gamma; }
    }
    ConverseRate out;
    out.gamma = best_gamma;
    if (!(best > 0.0)) {
        out.vacuous = true;
        out.rate_nats_per_letter = 0.0;
    } else {
        out.rate_nats_per_letter = best / n;
    }
    return out;
}

}  // namespace latrd
