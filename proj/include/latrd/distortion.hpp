#pragma once

// Distortion measures and their geometry: single-point evaluation, the
// radius-of-distortion map r(d), and log volumes of distortion balls.
//
// Supported kinds:
//   Mse           d(x,y) = (1/n) ||x - y||_2^2
//   Hamming       d(x,y) = 1{x != y} on {0,1}
//   SymbolError   d(x,y) = 1{x != y} on {0,...,m-1}
//   ScaledLpPow   d(x,y) = n^{-s/p} ||x - y||_p^s,  p in [1,inf], s > 0
//   WeightedMse   d(x,y) = (1/n) ||W (x - y)||_2^2,  W invertible
//   FiniteMatrix  arbitrary nonnegative matrix with a zero in every row
//
// All difference kinds reduce to a scalar profile d(r) of the normalized
// weighted L^p distance r = n^{-1/p} ||W (x-y)||_p.

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "latrd/math.hpp"

namespace latrd {

enum class DistortionKind { Mse, Hamming, SymbolError, ScaledLpPow, WeightedMse, FiniteMatrix };

class DistortionMeasure {
  public:
    static DistortionMeasure mse(int n = 1) {
        DistortionMeasure m;
        m.kind_ = DistortionKind::Mse;
        m.dim_ = check_dim(n);
        m.p_ = 2.0;
        m.s_ = 2.0;
        return m;
    }

    static DistortionMeasure hamming() {
        DistortionMeasure m;
        m.kind_ = DistortionKind::Hamming;
        m.alphabet_ = 2;
        return m;
    }

    static DistortionMeasure symbol_error(int alphabet) {
        if (alphabet < 2) throw std::invalid_argument("symbol_error: alphabet size must be >= 2");
        DistortionMeasure m;
        m.kind_ = DistortionKind::SymbolError;
        m.alphabet_ = alphabet;
        return m;
    }

    static DistortionMeasure scaled_lp_pow(double p, double s, int n = 1) {
        if (!(p >= 1.0)) throw std::invalid_argument("scaled_lp_pow: p must be >= 1");
        if (!(s > 0.0)) throw std::invalid_argument("scaled_lp_pow: s must be > 0");
        DistortionMeasure m;
        m.kind_ = DistortionKind::ScaledLpPow;
        m.dim_ = check_dim(n);
        m.p_ = p;
        m.s_ = s;
        return m;
    }

    static DistortionMeasure weighted_mse(Matrix w) {
        if (w.rows != w.cols || w.rows < 1)
            throw std::invalid_argument("weighted_mse: W must be square");
        LuDecomposition lu = lu_decompose(w);
        if (lu.det_sign == 0) throw std::invalid_argument("weighted_mse: W must be invertible");
        DistortionMeasure m;
        m.kind_ = DistortionKind::WeightedMse;
        m.dim_ = w.rows;
        m.p_ = 2.0;
        m.s_ = 2.0;
        m.w_ = std::move(w);
        m.log_abs_det_w_ = lu.log_abs_det;
        return m;
    }

    static DistortionMeasure finite_matrix(std::vector<std::vector<double>> rows) {
        if (rows.empty()) throw std::invalid_argument("finite_matrix: empty matrix");
        size_t cols = rows[0].size();
        if (cols == 0) throw std::invalid_argument("finite_matrix: empty row");
        for (const auto& r : rows) {
            if (r.size() != cols) throw std::invalid_argument("finite_matrix: ragged rows");
            bool has_zero = false;
            for (double v : r) {
                if (v < 0.0) throw std::invalid_argument("finite_matrix: negative entry");
                if (v == 0.0) has_zero = true;
            }
            if (!has_zero) throw std::invalid_argument("finite_matrix: each row needs a zero entry");
        }
        DistortionMeasure m;
        m.kind_ = DistortionKind::FiniteMatrix;
        m.alphabet_ = static_cast<int>(rows.size());
        m.cols_ = static_cast<int>(cols);
        m.matrix_ = std::move(rows);
        return m;
    }

    DistortionKind kind() const { return kind_; }
    int dimension() const { return dim_; }
    double norm_order() const { return p_; }
    double exponent() const { return s_; }
    int alphabet() const { return alphabet_; }
    int reproduction_alphabet() const { return is_finite() ? (kind_ == DistortionKind::FiniteMatrix ? cols_ : alphabet_) : 0; }
    const Matrix& weight() const { return w_; }
    double log_abs_det_weight() const { return log_abs_det_w_; }
    const std::vector<std::vector<double>>& matrix() const { return matrix_; }

    bool is_finite() const {
        return kind_ == DistortionKind::Hamming || kind_ == DistortionKind::SymbolError ||
               kind_ == DistortionKind::FiniteMatrix;
    }
    bool is_continuous_difference() const { return !is_finite(); }

    // Same kind lifted to dimension n (i.i.d. extension of a per-letter rule).
    DistortionMeasure extended(int n) const {
        switch (kind_) {
            case DistortionKind::Mse: return mse(n);
            case DistortionKind::ScaledLpPow: return scaled_lp_pow(p_, s_, n);
            default:
                throw std::invalid_argument("extended: only continuous difference kinds extend");
        }
    }

    // Scalar distortion profile d(r), r = n^{-1/p} ||W z||_p.
    double profile(double r) const {
        if (!is_continuous_difference())
            throw std::invalid_argument("profile: finite kinds have no scalar profile");
        return std::pow(r, s_);
    }

    // Matrix entry for finite kinds.
    double entry(int x, int y) const {
        switch (kind_) {
            case DistortionKind::Hamming:
            case DistortionKind::SymbolError:
                if (x < 0 || x >= alphabet_ || y < 0 || y >= alphabet_)
                    throw std::invalid_argument("entry: symbol out of alphabet");
                return x == y ? 0.0 : 1.0;
            case DistortionKind::FiniteMatrix:
                if (x < 0 || x >= alphabet_ || y < 0 || y >= cols_)
                    throw std::invalid_argument("entry: symbol out of alphabet");
                return matrix_[x][y];
            default:
                throw std::invalid_argument("entry: not a finite kind");
        }
    }

    // d(x, 0) as a function of the group element x - y on Z_m, when the matrix
    // has that structure. Empty when it does not.
    std::optional<std::vector<double>> group_profile() const {
        switch (kind_) {
            case DistortionKind::Hamming:
            case DistortionKind::SymbolError: {
                std::vector<double> prof(alphabet_, 1.0);
                prof[0] = 0.0;
                return prof;
            }
            case DistortionKind::FiniteMatrix: {
                if (cols_ != alphabet_) return std::nullopt;
                int m = alphabet_;
                std::vector<double> prof(m);
                for (int z = 0; z < m; ++z) prof[z] = matrix_[z][0];
                for (int x = 0; x < m; ++x)
                    for (int y = 0; y < m; ++y)
                        if (std::abs(matrix_[x][y] - prof[((x - y) % m + m) % m]) > 1e-12)
                            return std::nullopt;
                return prof;
            }
            default:
                return std::nullopt;
        }
    }

  private:
    static int check_dim(int n) {
        if (n < 1) throw std::invalid_argument("distortion: dimension must be >= 1");
        return n;
    }

    DistortionKind kind_ = DistortionKind::Mse;
    int dim_ = 1;
    double p_ = 2.0;
    double s_ = 2.0;
    int alphabet_ = 0;
    int cols_ = 0;
    Matrix w_;
    double log_abs_det_w_ = 0.0;
    std::vector<std::vector<double>> matrix_;
};

namespace detail {

inline double lp_norm(std::span<const double> z, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : z) m = std::max(m, std::abs(v));
        return m;
    }
    if (p == 2.0) {
        double s = 0.0;
        for (double v : z) s += v * v;
        return std::sqrt(s);
    }
    if (p == 1.0) {
        double s = 0.0;
        for (double v : z) s += std::abs(v);
        return s;
    }
    double s = 0.0;
    for (double v : z) s += std::pow(std::abs(v), p);
    return std::pow(s, 1.0 / p);
}

}  // namespace detail

// Normalized distance r = n^{-1/p} ||W (x - y)||_p for continuous kinds.
inline double normalized_distance(const DistortionMeasure& m, std::span<const double> x,
                                  std::span<const double> y) {
    if (!m.is_continuous_difference())
        throw std::invalid_argument("normalized_distance: finite kind");
    int n = m.dimension();
    if (static_cast<int>(x.size()) != n || static_cast<int>(y.size()) != n)
        throw std::invalid_argument("normalized_distance: dimension mismatch");
    std::vector<double> z(n);
    for (int i = 0; i < n; ++i) z[i] = x[i] - y[i];
    if (m.kind() == DistortionKind::WeightedMse) z = mat_vec(m.weight(), z);
    double p = m.norm_order();
    double scale = std::isinf(p) ? 1.0 : std::pow(static_cast<double>(n), -1.0 / p);
    return scale * detail::lp_norm(z, p);
}

inline double evaluate(const DistortionMeasure& m, std::span<const double> x,
                       std::span<const double> y) {
    return m.profile(normalized_distance(m, x, y));
}

inline double evaluate(const DistortionMeasure& m, int x, int y) { return m.entry(x, y); }

// ---------------------------------------------------------------------------
// Radius of distortion r(d): the smallest normalized radius whose profile
// reaches d. Covering a source with balls of radius r(d) then guarantees
// per-letter distortion at most d.

struct RadiusMap {
    std::function<double(double)> r_of_d;
    // Local behavior of the profile at 0: smallest order s with nonzero
    // s-th derivative, and that derivative, when known.
    double exponent = 0.0;
    double derivative_at_zero = 0.0;
};

inline double radius_of_distortion(const DistortionMeasure& m, double d) {
    if (!(d > 0.0)) throw std::invalid_argument("radius_of_distortion: d must be > 0");
    if (!m.is_continuous_difference())
        throw std::invalid_argument("radius_of_distortion: no scalar radius for finite kinds");
    return std::pow(d, 1.0 / m.exponent());
}

inline RadiusMap radius_map(const DistortionMeasure& m) {
    if (!m.is_continuous_difference())
        throw std::invalid_argument("radius_map: no scalar radius for finite kinds");
    RadiusMap out;
    double s = m.exponent();
    out.exponent = s;
    // s-th derivative of r^s at 0 is s!
    out.derivative_at_zero = std::tgamma(s + 1.0);
    out.r_of_d = [s](double d) { return std::pow(d, 1.0 / s); };
    return out;
}

// Generic inversion for monotone profiles: the left edge of the level set,
// inf{r in [0, r_max] : profile(r) >= d}, by bisection to 1e-12.
inline RadiusMap radius_map_from_profile(std::function<double(double)> profile, double r_max) {
    if (!(r_max > 0.0)) throw std::invalid_argument("radius_map_from_profile: r_max must be > 0");
    RadiusMap out;
    out.r_of_d = [profile = std::move(profile), r_max](double d) {
        if (!(d > 0.0)) throw std::invalid_argument("r_of_d: d must be > 0");
        if (profile(r_max) < d) return r_max;
        double lo = 0.0, hi = r_max;
        while (hi - lo > 1e-12 * std::max(1.0, hi)) {
            double mid = 0.5 * (lo + hi);
            if (profile(mid) >= d) hi = mid; else lo = mid;
        }
        return hi;
    };
    return out;
}

// ---------------------------------------------------------------------------
// log of the reference-measure volume of a distortion ball
// {x : d(x, y) <= threshold} in dimension n. For the supported kinds this is
// b_{n,p} (n^{1/p} r(d))^n / |det W|.

inline double ball_log_volume(const DistortionMeasure& m, int n, double threshold) {
    if (n < 1) throw std::invalid_argument("ball_log_volume: n must be >= 1");
    if (!(threshold > 0.0)) throw std::invalid_argument("ball_log_volume: threshold must be > 0");
    if (!m.is_continuous_difference())
        throw std::invalid_argument("ball_log_volume: finite kinds have no Lebesgue ball");
    double p = m.norm_order();
    double r = std::pow(threshold, 1.0 / m.exponent());
    double radius_log = std::isinf(p) ? std::log(r)
                                      : std::log(r) + std::log(static_cast<double>(n)) / p;
    double det_term = (m.kind() == DistortionKind::WeightedMse) ? m.log_abs_det_weight() : 0.0;
    return log_lp_ball_volume(n, p) + n * radius_log - det_term;
}

// ---------------------------------------------------------------------------
// Balanced finite measures: square, zero diagonal, positive off diagonal,
// and every column holding the same multiset of entries. This is the class
// for which the finite-alphabet Shannon lower bound is tight at low d.

inline bool is_balanced(const DistortionMeasure& m) {
    if (!m.is_finite()) throw std::invalid_argument("is_balanced: finite kind required");
    int rows = m.alphabet();
    int cols = m.reproduction_alphabet();
    if (rows != cols) return false;
    std::vector<double> ref;
    for (int y = 0; y < cols; ++y) {
        std::vector<double> col(rows);
        for (int x = 0; x < rows; ++x) col[x] = m.entry(x, y);
        std::sort(col.begin(), col.end());
        if (y == 0) ref = col;
        else if (col != ref) return false;
    }
    for (int x = 0; x < rows; ++x) {
        if (m.entry(x, x) != 0.0) return false;
        for (int y = 0; y < cols; ++y)
            if (x != y && !(m.entry(x, y) > 0.0)) return false;
    }
    return true;
}

}  // namespace latrd
