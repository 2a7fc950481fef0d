#pragma once

// Shared numeric kernels: log-gamma based ball volumes, Gaussian tail
// function and its inverse, regularized incomplete gamma, adaptive
// quadrature, a small dense LU, and binomial interval helpers.
//
// Everything works in nats unless a name says otherwise.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace latrd {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kLn2 = std::numbers::ln2;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double nats_to_bits(double x) { return x / kLn2; }
inline double bits_to_nats(double x) { return x * kLn2; }

// -ln p with the 0 ln 0 = 0 convention used by entropy sums.
inline double nlogn(double p) { return p > 0.0 ? -p * std::log(p) : 0.0; }

inline double binary_entropy(double p) { return nlogn(p) + nlogn(1.0 - p); }

// log volume of the unit Euclidean ball in dimension n.
// Closed forms for n = 1, 2 keep the low-dimensional covering identities
// (rho(Z^1) = 1) exact in floating point.
inline double log_ball_volume(int n) {
    if (n < 1) throw std::invalid_argument("log_ball_volume: n must be >= 1");
    if (n == 1) return kLn2;
    if (n == 2) return std::log(kPi);
    return 0.5 * n * std::log(kPi) - std::lgamma(0.5 * n + 1.0);
}

// log volume of the unit L^p ball, b_{n,p} = (2 Gamma(1/p + 1))^n / Gamma(n/p + 1).
// p = infinity gives the cube, 2^n.
inline double log_lp_ball_volume(int n, double p) {
    if (n < 1) throw std::invalid_argument("log_lp_ball_volume: n must be >= 1");
    if (!(p >= 1.0)) throw std::invalid_argument("log_lp_ball_volume: p must be >= 1");
    if (std::isinf(p)) return n * kLn2;
    if (p == 2.0) return log_ball_volume(n);
    return n * (kLn2 + std::lgamma(1.0 / p + 1.0)) - std::lgamma(n / p + 1.0);
}

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// Complementary Gaussian cdf.
inline double q_function(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

namespace detail {

// Acklam's rational approximation to the inverse standard normal cdf.
inline double norm_inv_approx(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double plow = 0.02425;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace detail

// Inverse of q_function, Newton-polished until Q(Q^{-1}(eps)) matches eps to
// ~1e-15 relative.
inline double q_inv(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("q_inv: eps must be in (0,1)");
    if (eps == 0.5) return 0.0;
    double x = -detail::norm_inv_approx(eps);
    for (int it = 0; it < 6; ++it) {
        double f = q_function(x) - eps;
        double df = normal_pdf(x);
        if (df <= 0.0) break;
        double step = f / df;
        x += step;
        if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

namespace detail {

// Lower regularized incomplete gamma by series, valid for x < a + 1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 10000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Upper regularized incomplete gamma by continued fraction (modified Lentz),
// valid for x >= a + 1.
inline double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 10000; ++i) {
        double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-17) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace detail

// Lower regularized incomplete gamma P(a, x) = gamma(a,x)/Gamma(a).
inline double gamma_p(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("gamma_p: a must be > 0");
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_cf(a, x);
}

// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0)) throw std::invalid_argument("gamma_q: a must be > 0");
    if (x <= 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_cf(a, x);
}

// Solves Q(a, x) = q for x. Wilson-Hilferty start, safeguarded Newton.
inline double gamma_upper_quantile(double a, double q) {
    if (!(a > 0.0)) throw std::invalid_argument("gamma_upper_quantile: a must be > 0");
    if (!(q > 0.0 && q < 1.0))
        throw std::invalid_argument("gamma_upper_quantile: q must be in (0,1)");
    double t = q_inv(q);
    double x = a * std::pow(std::max(1e-12, 1.0 - 1.0 / (9.0 * a) + t * std::sqrt(1.0 / (9.0 * a))), 3.0);
    if (!(x > 0.0) || !std::isfinite(x)) x = a;
    // bracket
    double lo = x, hi = x;
    if (gamma_q(a, x) > q) {
        while (gamma_q(a, hi) > q) { lo = hi; hi *= 2.0; if (hi > 1e300) break; }
    } else {
        while (gamma_q(a, lo) < q) { hi = lo; lo *= 0.5; if (lo < 1e-300) break; }
    }
    double lg = std::lgamma(a);
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double f = gamma_q(a, mid) - q;
        if (f > 0.0) lo = mid; else hi = mid;
        // Newton step from mid, kept if it stays in the bracket
        double pdf = std::exp(-mid + (a - 1.0) * std::log(mid) - lg);
        if (pdf > 0.0) {
            double xn = mid + f / pdf;
            if (xn > lo && xn < hi) {
                double fn = gamma_q(a, xn) - q;
                if (fn > 0.0) lo = xn; else hi = xn;
            }
        }
        if (hi - lo <= 1e-14 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Adaptive Simpson quadrature.

namespace detail {

inline double simpson_step(const std::function<double(double)>& f, double a, double b,
                           double fa, double fm, double fb, double whole, double tol,
                           int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace detail

// Pre-splits into fixed panels before adapting, so integrands concentrated
// far from the interval midpoint are not missed by the first coarse pass.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double abs_tol = 1e-12, int depth = 52, int panels = 24) {
    if (a == b) return 0.0;
    double total = 0.0;
    double width = (b - a) / panels;
    double panel_tol = abs_tol / panels;
    for (int k = 0; k < panels; ++k) {
        double lo = a + k * width;
        double hi = (k == panels - 1) ? b : lo + width;
        double m = 0.5 * (lo + hi);
        double fa = f(lo), fm = f(m), fb = f(hi);
        double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += detail::simpson_step(f, lo, hi, fa, fm, fb, whole, panel_tol, depth);
    }
    return total;
}

// Integral over [a, inf): panels of doubling width until the tail stops
// contributing relative to the running total.
inline double integrate_to_infinity(const std::function<double(double)>& f, double a,
                                    double rel_tol = 1e-11) {
    double total = 0.0;
    double left = a;
    double width = 1.0;
    int quiet = 0;
    for (int k = 0; k < 80; ++k) {
        double piece = integrate(f, left, left + width, rel_tol * 1e-3 * std::max(1.0, std::abs(total)) + 1e-300);
        total += piece;
        left += width;
        width *= 2.0;
        if (std::abs(piece) <= rel_tol * std::max(std::abs(total), 1e-30)) {
            if (++quiet >= 2) break;
        } else {
            quiet = 0;
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Small dense matrices (row major), just enough for lattice generators and
// the circulant/deconvolution solves.

struct Matrix {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }
};

inline std::vector<double> mat_vec(const Matrix& m, std::span<const double> x) {
    if (static_cast<int>(x.size()) != m.cols) throw std::invalid_argument("mat_vec: size mismatch");
    std::vector<double> y(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += m.at(r, c) * x[c];
        y[r] = s;
    }
    return y;
}

struct LuDecomposition {
    Matrix lu;
    std::vector<int> perm;
    double log_abs_det = -kInf;
    int det_sign = 0;  // 0 marks a singular matrix
};

inline LuDecomposition lu_decompose(Matrix m) {
    if (m.rows != m.cols) throw std::invalid_argument("lu_decompose: square matrix required");
    int n = m.rows;
    LuDecomposition out;
    out.perm.resize(n);
    for (int i = 0; i < n; ++i) out.perm[i] = i;
    int sign = 1;
    double log_det = 0.0;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(m.at(k, k));
        for (int r = k + 1; r < n; ++r) {
            double v = std::abs(m.at(r, k));
            if (v > best) { best = v; piv = r; }
        }
        if (best == 0.0) { out.lu = std::move(m); out.det_sign = 0; return out; }
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(m.at(piv, c), m.at(k, c));
            std::swap(out.perm[piv], out.perm[k]);
            sign = -sign;
        }
        double d = m.at(k, k);
        if (d < 0.0) sign = -sign;
        log_det += std::log(std::abs(d));
        for (int r = k + 1; r < n; ++r) {
            double f = m.at(r, k) / d;
            m.at(r, k) = f;
            for (int c = k + 1; c < n; ++c) m.at(r, c) -= f * m.at(k, c);
        }
    }
    out.lu = std::move(m);
    out.log_abs_det = log_det;
    out.det_sign = sign;
    return out;
}

inline std::vector<double> lu_solve(const LuDecomposition& d, std::span<const double> b) {
    int n = d.lu.rows;
    if (d.det_sign == 0) throw std::runtime_error("lu_solve: singular matrix");
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("lu_solve: size mismatch");
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = b[d.perm[i]];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) x[i] -= d.lu.at(i, j) * x[j];
    for (int i = n - 1; i >= 0; --i) {
        for (int j = i + 1; j < n; ++j) x[i] -= d.lu.at(i, j) * x[j];
        x[i] /= d.lu.at(i, i);
    }
    return x;
}

inline Matrix inverse(const Matrix& m) {
    LuDecomposition d = lu_decompose(m);
    int n = m.rows;
    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (int c = 0; c < n; ++c) {
        e.assign(n, 0.0);
        e[c] = 1.0;
        std::vector<double> col = lu_solve(d, e);
        for (int r = 0; r < n; ++r) inv.at(r, c) = col[r];
    }
    return inv;
}

// ---------------------------------------------------------------------------

// Wilson score interval for a binomial proportion.
struct WilsonInterval {
    double lo = 0.0, hi = 1.0;
};

inline WilsonInterval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                      double z = 1.959963984540054) {
    if (trials == 0) return {0.0, 1.0};
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Appends a '|'-separated flag token to a result's flag string.
inline void append_flag(std::string& flags, const char* flag) {
    if (!flags.empty()) flags += '|';
    flags += flag;
}

// 200-point log-spaced grid used by the gamma sweeps in the converse bounds.
inline std::vector<double> log_grid(double lo, double hi, int points = 200) {
    if (!(lo > 0.0) || !(hi > lo)) throw std::invalid_argument("log_grid: need 0 < lo < hi");
    std::vector<double> g(points);
    double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[i] = std::exp(llo + (lhi - llo) * i / (points - 1));
    return g;
}

}  // namespace latrd
