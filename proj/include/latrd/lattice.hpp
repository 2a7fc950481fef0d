#pragma once

// Lattices with exact nearest-point decoders (Z^n, D_n, A_n*), covering
// geometry, scaling to a target distortion, Monte-Carlo output entropy and
// information spectrum, the smoothness-based upper bound on the quantizer
// output entropy, and two-sided bounds on the lattice d-entropy.
//
// Decoders: Z^n rounds per coordinate; D_n rounds and fixes parity via the
// worst coordinate (Conway-Sloane); A_n* is decoded in its zero-sum
// embedding, where the lattice is the projection of Z^{n+1} onto the
// hyperplane sum = 0, by the sorting sweep of McKilliam et al. Ties round
// toward the lexicographically smaller index vector.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "latrd/distortion.hpp"
#include "latrd/math.hpp"
#include "latrd/rng.hpp"
#include "latrd/sources.hpp"

namespace latrd {

enum class LatticeFamily { Zn, Dn, AnStar, Custom };

namespace detail {

inline double round_half_down(double v) { return std::ceil(v - 0.5); }

// Orthonormal basis of the zero-sum hyperplane in R^{n+1} (Helmert columns):
// column k has k entries 1/sqrt(k(k+1)) followed by -k/sqrt(k(k+1)).
inline double helmert_entry(int row, int col_1based) {
    int k = col_1based;
    double denom = std::sqrt(static_cast<double>(k) * (k + 1));
    if (row < k) return 1.0 / denom;
    if (row == k) return -static_cast<double>(k) / denom;
    return 0.0;
}

}  // namespace detail

class Lattice {
  public:
    static Lattice zn(int n) { return Lattice(LatticeFamily::Zn, n); }

    static Lattice dn(int n) {
        if (n < 2) throw std::invalid_argument("dn: n must be >= 2");
        return Lattice(LatticeFamily::Dn, n);
    }

    static Lattice an_star(int n) { return Lattice(LatticeFamily::AnStar, n); }

    static Lattice custom(Matrix generator, std::optional<double> covering_radius = {}) {
        if (generator.rows != generator.cols || generator.rows < 1)
            throw std::invalid_argument("custom: square generator required");
        Lattice lat(LatticeFamily::Custom, generator.rows);
        LuDecomposition lu = lu_decompose(generator);
        if (lu.det_sign == 0) throw std::invalid_argument("custom: singular generator");
        lat.gen_ = std::move(generator);
        lat.log_abs_det_ = lu.log_abs_det;
        lat.custom_radius_ = covering_radius;
        return lat;
    }

    LatticeFamily family() const { return family_; }
    int dimension() const { return n_; }
    double scale() const { return scale_; }

    Lattice with_scale(double s) const {
        if (!(s > 0.0)) throw std::invalid_argument("with_scale: scale must be > 0");
        Lattice out = *this;
        out.scale_ = s;
        return out;
    }

    // Generator matrix G of the unit-scale lattice; points are scale * G i.
    Matrix generator() const {
        switch (family_) {
            case LatticeFamily::Zn:
                return Matrix::identity(n_);
            case LatticeFamily::Dn: {
                Matrix g(n_, n_);
                // columns: (-1,-1,0,...), (1,-1,0,...), then e_{k-1} - e_k chains
                g.at(0, 0) = -1.0;
                g.at(1, 0) = -1.0;
                if (n_ >= 2) { g.at(0, 1) = 1.0; g.at(1, 1) = -1.0; }
                for (int c = 2; c < n_; ++c) {
                    g.at(c - 1, c) = 1.0;
                    g.at(c, c) = -1.0;
                }
                return g;
            }
            case LatticeFamily::AnStar: {
                // G(j, k) = Helmert(k, j+1): projections of the first n unit
                // vectors of R^{n+1} expressed in hyperplane coordinates.
                Matrix g(n_, n_);
                for (int j = 0; j < n_; ++j)
                    for (int k = 0; k < n_; ++k)
                        g.at(j, k) = detail::helmert_entry(k, j + 1);
                return g;
            }
            case LatticeFamily::Custom:
                return gen_;
        }
        throw std::logic_error("generator: unreachable");
    }

    double log_abs_det_generator() const {
        switch (family_) {
            case LatticeFamily::Zn: return 0.0;
            case LatticeFamily::Dn: return kLn2;
            case LatticeFamily::AnStar: return -0.5 * std::log(static_cast<double>(n_) + 1.0);
            case LatticeFamily::Custom: return log_abs_det_;
        }
        throw std::logic_error("log_abs_det_generator: unreachable");
    }

    // log cell volume: n log scale + log |det G|.
    double log_cell_volume() const { return n_ * std::log(scale_) + log_abs_det_generator(); }

    bool covering_radius_estimated() const {
        return family_ == LatticeFamily::Custom && !custom_radius_.has_value();
    }

    // Covering radius under the L^p norm. Closed forms: Z^n has the cube
    // half-diagonal n^{1/p}/2 for every p; D_n and A_n* are Euclidean-only
    // (D_n: max(1, sqrt(n)/2); A_n*: sqrt(n(n+2)/(12(n+1)))).
    double covering_radius(double p = 2.0) const {
        switch (family_) {
            case LatticeFamily::Zn: {
                double half = 0.5;
                double factor = std::isinf(p) ? 1.0 : std::pow(static_cast<double>(n_), 1.0 / p);
                return scale_ * half * factor;
            }
            case LatticeFamily::Dn:
                require_euclidean(p);
                return scale_ * std::max(1.0, 0.5 * std::sqrt(static_cast<double>(n_)));
            case LatticeFamily::AnStar: {
                require_euclidean(p);
                double n = static_cast<double>(n_);
                return scale_ * std::sqrt(n * (n + 2.0) / (12.0 * (n + 1.0)));
            }
            case LatticeFamily::Custom:
                require_euclidean(p);
                if (custom_radius_) return scale_ * *custom_radius_;
                return scale_ * estimate_custom_radius();
        }
        throw std::logic_error("covering_radius: unreachable");
    }

    // Normalized ball-to-cell ratio rho = r_C b_{n,p}^{1/n} / V_C^{1/n} >= 1.
    // Invariant under scaling.
    double covering_efficiency(double p = 2.0) const {
        double log_r = std::log(covering_radius(p));
        return std::exp(log_r + (log_lp_ball_volume(n_, p) - log_cell_volume()) / n_);
    }

    // ---- decoding ----------------------------------------------------------

    std::vector<long long> nearest_index(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != n_)
            throw std::invalid_argument("nearest_index: dimension mismatch");
        switch (family_) {
            case LatticeFamily::Zn: return decode_zn(x);
            case LatticeFamily::Dn: return decode_dn(x);
            case LatticeFamily::AnStar: return decode_an_star(x);
            case LatticeFamily::Custom: return decode_custom(x);
        }
        throw std::logic_error("nearest_index: unreachable");
    }

    void index_to_point(std::span<const long long> idx, std::span<double> out) const {
        if (static_cast<int>(idx.size()) != n_ || static_cast<int>(out.size()) != n_)
            throw std::invalid_argument("index_to_point: dimension mismatch");
        switch (family_) {
            case LatticeFamily::Zn:
                for (int i = 0; i < n_; ++i) out[i] = scale_ * static_cast<double>(idx[i]);
                return;
            default: {
                Matrix g = generator();
                for (int r = 0; r < n_; ++r) {
                    double s = 0.0;
                    for (int c = 0; c < n_; ++c) s += g.at(r, c) * static_cast<double>(idx[c]);
                    out[r] = scale_ * s;
                }
                return;
            }
        }
    }

    std::vector<double> nearest_point(std::span<const double> x) const {
        std::vector<long long> idx = nearest_index(x);
        std::vector<double> pt(n_);
        index_to_point(idx, pt);
        return pt;
    }

  private:
    Lattice(LatticeFamily f, int n) : family_(f), n_(n) {
        if (n < 1) throw std::invalid_argument("lattice: dimension must be >= 1");
    }

    static void require_euclidean(double p) {
        if (p != 2.0)
            throw std::invalid_argument("covering geometry: only Z^n supports p != 2");
    }

    std::vector<long long> decode_zn(std::span<const double> x) const {
        std::vector<long long> idx(n_);
        for (int i = 0; i < n_; ++i)
            idx[i] = static_cast<long long>(detail::round_half_down(x[i] / scale_));
        return idx;
    }

    // D_n: round, then if the coordinate sum is odd re-round the coordinate
    // with the largest rounding error in the other direction.
    std::vector<long long> decode_dn(std::span<const double> x) const {
        std::vector<long long> f(n_);
        long long parity = 0;
        int worst = 0;
        double worst_err = -1.0;
        std::vector<double> err(n_);
        for (int i = 0; i < n_; ++i) {
            double y = x[i] / scale_;
            f[i] = static_cast<long long>(detail::round_half_down(y));
            err[i] = y - static_cast<double>(f[i]);
            parity += f[i];
            if (std::abs(err[i]) > worst_err) {
                worst_err = std::abs(err[i]);
                worst = i;
            }
        }
        if (parity % 2 != 0) f[worst] += err[worst] >= 0.0 ? 1 : -1;
        // map to generator coordinates: solve G i = f (integer entries)
        Matrix g = generator();
        std::vector<double> fd(n_);
        for (int i = 0; i < n_; ++i) fd[i] = static_cast<double>(f[i]);
        std::vector<double> id = lu_solve(lu_decompose(g), fd);
        std::vector<long long> idx(n_);
        for (int i = 0; i < n_; ++i) idx[i] = std::llround(id[i]);
        return idx;
    }

    // A_n*: lift x to the zero-sum hyperplane, then minimize
    // || proj(y - z) ||^2 over z in Z^{n+1}. Candidates are the rounded point
    // plus the k components of largest positive residual incremented, for
    // k = 0..n; costs update in O(1) per step after one sort.
    std::vector<long long> decode_an_star(std::span<const double> x) const {
        int np1 = n_ + 1;
        std::vector<double> y(np1, 0.0);
        for (int k = 1; k <= n_; ++k) {
            double u = x[k - 1] / scale_;
            double denom = std::sqrt(static_cast<double>(k) * (k + 1));
            for (int r = 0; r < k; ++r) y[r] += u / denom;
            y[k] -= u * static_cast<double>(k) / denom;
        }
        std::vector<long long> z(np1);
        std::vector<double> w(np1);
        double s1 = 0.0, s2 = 0.0;
        for (int i = 0; i < np1; ++i) {
            z[i] = static_cast<long long>(detail::round_half_down(y[i]));
            w[i] = y[i] - static_cast<double>(z[i]);
            s1 += w[i];
            s2 += w[i] * w[i];
        }
        std::vector<int> order(np1);
        std::iota(order.begin(), order.end(), 0);
        // increment order: largest residual first (earliest crossing)
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (w[a] != w[b]) return w[a] > w[b];
            return a < b;
        });
        double best_cost = s2 - s1 * s1 / np1;
        int best_k = 0;
        double cs1 = s1, cs2 = s2;
        for (int k = 1; k <= np1; ++k) {
            int j = order[k - 1];
            cs2 += -2.0 * w[j] + 1.0;
            cs1 -= 1.0;
            double cost = cs2 - cs1 * cs1 / np1;
            if (k <= n_ && cost < best_cost - 1e-15) {
                best_cost = cost;
                best_k = k;
            }
        }
        for (int k = 0; k < best_k; ++k) z[order[k]] += 1;
        std::vector<long long> idx(n_);
        for (int i = 0; i < n_; ++i) idx[i] = z[i] - z[n_];
        return idx;
    }

    // Babai rounding plus a +-1 offset search; exact for mildly skewed bases,
    // and the only decoder offered for user-supplied generators.
    std::vector<long long> decode_custom(std::span<const double> x) const {
        if (n_ > 12) throw std::invalid_argument("custom decode: dimension limit 12");
        Matrix g = generator();
        LuDecomposition lu = lu_decompose(g);
        std::vector<double> xs(x.begin(), x.end());
        for (double& v : xs) v /= scale_;
        std::vector<double> t = lu_solve(lu, xs);
        std::vector<long long> base(n_), best(n_), cur(n_);
        for (int i = 0; i < n_; ++i) base[i] = static_cast<long long>(detail::round_half_down(t[i]));
        double best_d = kInf;
        std::vector<int> off(n_, -1);
        for (;;) {
            for (int i = 0; i < n_; ++i) cur[i] = base[i] + off[i];
            double dist = 0.0;
            for (int r = 0; r < n_; ++r) {
                double s = 0.0;
                for (int c = 0; c < n_; ++c) s += g.at(r, c) * static_cast<double>(cur[c]);
                double diff = xs[r] - s;
                dist += diff * diff;
            }
            if (dist < best_d) { best_d = dist; best = cur; }
            int k = 0;
            while (k < n_ && off[k] == 1) { off[k] = -1; ++k; }
            if (k == n_) break;
            ++off[k];
        }
        return best;
    }

    // Probes for an unknown covering radius: random points in the unit cell
    // plus cell corners. Marked as an estimate by covering_radius_estimated().
    double estimate_custom_radius() const {
        Matrix g = generator();
        Rng rng(0x1a77c0de);
        double worst = 0.0;
        std::vector<double> u(n_), x(n_);
        Lattice unit = *this;
        unit.scale_ = 1.0;
        auto probe = [&](std::span<const double> pt) {
            std::vector<double> q = unit.nearest_point(pt);
            double dist = 0.0;
            for (int i = 0; i < n_; ++i) dist += (pt[i] - q[i]) * (pt[i] - q[i]);
            worst = std::max(worst, std::sqrt(dist));
        };
        int corners = 1 << std::min(n_, 16);
        for (int mask = 0; mask < corners; ++mask) {
            for (int i = 0; i < n_; ++i) u[i] = (mask >> i & 1) ? 0.5 : -0.5;
            x = mat_vec(g, u);
            probe(x);
        }
        std::size_t budget = 1000000 / std::max(1, n_);
        for (std::size_t it = 0; it < budget; ++it) {
            for (int i = 0; i < n_; ++i) u[i] = rng.uniform01() - 0.5;
            x = mat_vec(g, u);
            probe(x);
        }
        return worst;
    }

    LatticeFamily family_;
    int n_;
    double scale_ = 1.0;
    Matrix gen_;
    double log_abs_det_ = 0.0;
    std::optional<double> custom_radius_;
};

struct LatticeGeometry {
    double log_cell_volume = 0.0;
    double covering_radius = 0.0;
    double covering_efficiency = 1.0;
    bool radius_estimated = false;
};

inline LatticeGeometry covering_geometry(const Lattice& lat, double p = 2.0) {
    LatticeGeometry g;
    g.log_cell_volume = lat.log_cell_volume();
    g.covering_radius = lat.covering_radius(p);
    g.covering_efficiency = lat.covering_efficiency(p);
    g.radius_estimated = lat.covering_radius_estimated();
    return g;
}

// Rescales so that the covering radius equals n^{1/p} r(d): every input then
// lands within per-letter distortion d of its quantized point.
inline Lattice scale_to_distortion(const Lattice& lat, const DistortionMeasure& m, double d) {
    if (!(d > 0.0)) throw std::invalid_argument("scale_to_distortion: d must be > 0");
    double p = m.norm_order();
    int n = lat.dimension();
    double r = radius_of_distortion(m, d);
    double target = (std::isinf(p) ? 1.0 : std::pow(static_cast<double>(n), 1.0 / p)) * r;
    double unit_radius = lat.with_scale(1.0).covering_radius(p);
    return lat.with_scale(target / unit_radius);
}

// ---------------------------------------------------------------------------
// Monte-Carlo output entropy and information spectrum.

struct SpectrumEstimate {
    double entropy_nats = 0.0;        // Miller-Madow corrected plug-in
    double plugin_entropy_nats = 0.0;
    double standard_error = 0.0;
    std::size_t distinct_cells = 0;
    std::size_t samples = 0;
    bool low_sample_flag = false;
    // Empirical complementary cdf of the cell information -log(count/N):
    // ascending info values with P[info >= value].
    std::vector<std::pair<double, double>> info_ccdf;
};

namespace detail {

struct IndexHash {
    std::size_t operator()(const std::vector<long long>& v) const {
        std::uint64_t h = 0x9E3779B97F4A7C15ull;
        for (long long x : v) {
            std::uint64_t s = h ^ static_cast<std::uint64_t>(x);
            h = splitmix64(s);
        }
        return static_cast<std::size_t>(h);
    }
};

using CellCounts = std::unordered_map<std::vector<long long>, std::uint64_t, IndexHash>;

}  // namespace detail

inline SpectrumEstimate output_info_spectrum(const Lattice& lat, const ContinuousSource& src,
                                             std::size_t samples, std::uint64_t seed) {
    if (src.dimension() != lat.dimension())
        throw std::invalid_argument("output_info_spectrum: dimension mismatch");
    SpectrumEstimate out;
    out.samples = samples;
    out.low_sample_flag = samples < 10000;

    Rng rng = Rng::stream(seed, 0);
    detail::CellCounts counts;
    std::vector<double> x(src.dimension());
    for (std::size_t i = 0; i < samples; ++i) {
        src.sample(rng, x);
        ++counts[lat.nearest_index(x)];
    }
    out.distinct_cells = counts.size();

    double n = static_cast<double>(samples);
    double h = 0.0, m2 = 0.0;
    std::vector<std::pair<double, double>> cells;  // (info, prob)
    cells.reserve(counts.size());
    for (const auto& [idx, c] : counts) {
        double p = static_cast<double>(c) / n;
        double info = -std::log(p);
        h += p * info;
        m2 += p * info * info;
        cells.emplace_back(info, p);
    }
    out.plugin_entropy_nats = h;
    out.entropy_nats = h + (static_cast<double>(counts.size()) - 1.0) / (2.0 * n);
    out.standard_error = std::sqrt(std::max(0.0, m2 - h * h) / n);

    std::sort(cells.begin(), cells.end());
    out.info_ccdf.resize(cells.size());
    double tail = 0.0;
    for (std::size_t i = cells.size(); i-- > 0;) {
        tail += cells[i].second;
        out.info_ccdf[i] = {cells[i].first, std::min(1.0, tail)};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Smoothness-based upper bounds on the quantizer output. For a density with
// certificate ||grad log f|| <= c1 ||x|| + c0 sqrt(n), the cell-wise maximum
// is v_C(x) = c1 ||x|| + c1 r_C + c0 sqrt(n) and
//   H(q_C(X)) <= h(X) - log V_C + 2 r_C E[v_C(X)].

struct OutputEntropyBound {
    double entropy_bound_nats = 0.0;
    double base_nats = 0.0;   // h(X) - log V_C
    double slack_nats = 0.0;  // 2 r_C E[v_C(X)]
    double expected_norm = 0.0;
};

inline OutputEntropyBound output_entropy_bound(const Lattice& lat, const ContinuousSource& src,
                                               const RegularityCertificate& cert) {
    if (src.dimension() != lat.dimension())
        throw std::invalid_argument("output_entropy_bound: dimension mismatch");
    OutputEntropyBound out;
    double r = lat.covering_radius();
    double root_n = std::sqrt(static_cast<double>(src.dimension()));
    out.expected_norm = src.expected_norm();
    out.base_nats = src.diff_entropy() - lat.log_cell_volume();
    out.slack_nats = 2.0 * r * (cert.c1 * out.expected_norm + cert.c1 * r + cert.c0 * root_n);
    out.entropy_bound_nats = out.base_nats + out.slack_nats;
    return out;
}

// Pointwise version for the information random variable at x.
inline double output_info_bound(const Lattice& lat, const ContinuousSource& src,
                                const RegularityCertificate& cert, std::span<const double> x) {
    double r = lat.covering_radius();
    double norm = 0.0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    double vc = cert.c1 * norm + cert.c1 * r + cert.c0 * std::sqrt(static_cast<double>(x.size()));
    return -src.log_density(x) - lat.log_cell_volume() + 2.0 * r * vc;
}

// ---------------------------------------------------------------------------
// Two-sided bounds on the minimum output entropy over covering lattices at
// maximal per-letter distortion d (mean-square distortion).
//
// lower  = h(X) - n log sqrt(n d) - log b_n            (ball-volume floor)
// upper  = lower + covering term + divergence term
//
// The covering term is the best of the Rogers-type existence bound
// log2(sqrt(2 pi e)) (ln n + ln ln n + c) for n >= 3 and the exact A_n*
// value n ln rho; the divergence term is 2 r_C E[v_C(X)] at r_C = sqrt(nd).

struct DEntropyBounds {
    double lower_nats = 0.0;
    double upper_nats = 0.0;
    double covering_term = 0.0;
    double kl_term = 0.0;
    double rogers_c = 2.0;
    bool used_an_star = false;
};

inline double rogers_covering_term(int n, double c) {
    if (n < 3) throw std::invalid_argument("rogers_covering_term: n must be >= 3");
    double log2_sqrt_2pie = 0.5 * std::log2(2.0 * kPi * std::exp(1.0));
    double ln_n = std::log(static_cast<double>(n));
    return log2_sqrt_2pie * (ln_n + std::log(ln_n) + c);
}

inline DEntropyBounds d_entropy_bounds(const ContinuousSource& src, int n, double d,
                                       double rogers_c = 2.0) {
    if (src.dimension() != n) throw std::invalid_argument("d_entropy_bounds: dimension mismatch");
    DEntropyBounds out;
    out.rogers_c = rogers_c;
    double r = std::sqrt(n * d);
    out.lower_nats = src.diff_entropy() - n * std::log(r) - log_ball_volume(n);

    double an_term = n * std::log(Lattice::an_star(n).covering_efficiency());
    if (n >= 3) {
        double rog = rogers_covering_term(n, rogers_c);
        out.used_an_star = an_term <= rog;
        out.covering_term = std::min(an_term, rog);
    } else {
        out.used_an_star = true;
        out.covering_term = an_term;
    }

    RegularityCertificate cert = src.v_bound();
    out.kl_term = 2.0 * r * (cert.c1 * src.expected_norm() + cert.c1 * r +
                             cert.c0 * std::sqrt(static_cast<double>(n)));
    out.upper_nats = out.lower_nats + out.covering_term + out.kl_term;
    return out;
}

}  // namespace latrd
