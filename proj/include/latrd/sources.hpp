#pragma once

// Source models: Gaussian / Uniform / Laplace letters and their i.i.d.
// products, with exact log densities, entropies, varentropies, moments,
// seeded samplers and smoothness (v-regularity) certificates.

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "latrd/math.hpp"
#include "latrd/rng.hpp"

namespace latrd {

enum class SourceFamily { Gaussian, Uniform, Laplace };

// Certificate that ||grad log f(x)|| <= c1 ||x|| + c0 sqrt(n) on the support.
struct RegularityCertificate {
    double c1 = 0.0;
    double c0 = 0.0;
    int dimension = 1;

    double value(double norm_x) const {
        return c1 * norm_x + c0 * std::sqrt(static_cast<double>(dimension));
    }
};

// Combines per-letter certificates: the Euclidean norm of per-letter bounds
// gives v(x^n) <= c1 ||x^n|| + c0 sqrt(n). Heterogeneous coefficients are
// merged with max, which stays valid.
inline RegularityCertificate product_regularity(std::span<const RegularityCertificate> parts) {
    if (parts.empty()) throw std::invalid_argument("product_regularity: no parts");
    RegularityCertificate out;
    out.dimension = 0;
    for (const auto& p : parts) {
        out.c1 = std::max(out.c1, p.c1);
        out.c0 = std::max(out.c0, p.c0);
        out.dimension += p.dimension;
    }
    return out;
}

class ContinuousSource {
  public:
    static ContinuousSource gaussian(double variance) {
        if (!(variance > 0.0)) throw std::invalid_argument("gaussian: variance must be > 0");
        ContinuousSource s;
        s.family_ = SourceFamily::Gaussian;
        s.par0_ = variance;
        return s;
    }

    static ContinuousSource uniform(double a, double b) {
        if (!(b > a)) throw std::invalid_argument("uniform: need b > a");
        ContinuousSource s;
        s.family_ = SourceFamily::Uniform;
        s.par0_ = a;
        s.par1_ = b;
        return s;
    }

    static ContinuousSource laplace(double scale) {
        if (!(scale > 0.0)) throw std::invalid_argument("laplace: scale must be > 0");
        ContinuousSource s;
        s.family_ = SourceFamily::Laplace;
        s.par0_ = scale;
        return s;
    }

    static ContinuousSource product(const ContinuousSource& letter, int n) {
        if (letter.n_ != 1) throw std::invalid_argument("product: letter must be scalar");
        if (n < 1) throw std::invalid_argument("product: n must be >= 1");
        ContinuousSource s = letter;
        s.n_ = n;
        return s;
    }

    SourceFamily family() const { return family_; }
    int dimension() const { return n_; }
    ContinuousSource letter() const {
        ContinuousSource s = *this;
        s.n_ = 1;
        return s;
    }

    // ---- per-letter scalar quantities -------------------------------------

    double letter_log_density(double x) const {
        switch (family_) {
            case SourceFamily::Gaussian:
                return -0.5 * std::log(2.0 * kPi * par0_) - x * x / (2.0 * par0_);
            case SourceFamily::Uniform:
                if (x < par0_ || x > par1_) return -kInf;
                return -std::log(par1_ - par0_);
            case SourceFamily::Laplace:
                return -std::log(2.0 * par0_) - std::abs(x) / par0_;
        }
        return -kInf;
    }

    double letter_grad_log_density(double x) const {
        switch (family_) {
            case SourceFamily::Gaussian: return -x / par0_;
            case SourceFamily::Uniform: return 0.0;
            case SourceFamily::Laplace: return x >= 0.0 ? -1.0 / par0_ : 1.0 / par0_;
        }
        return 0.0;
    }

    double letter_entropy() const {
        switch (family_) {
            case SourceFamily::Gaussian: return 0.5 * std::log(2.0 * kPi * std::exp(1.0) * par0_);
            case SourceFamily::Uniform: return std::log(par1_ - par0_);
            case SourceFamily::Laplace: return 1.0 + std::log(2.0 * par0_);
        }
        return 0.0;
    }

    double letter_varentropy() const {
        switch (family_) {
            case SourceFamily::Gaussian: return 0.5;
            case SourceFamily::Uniform: return 0.0;
            case SourceFamily::Laplace: return 1.0;
        }
        return 0.0;
    }

    double second_moment() const {
        switch (family_) {
            case SourceFamily::Gaussian: return par0_;
            case SourceFamily::Uniform: {
                double a = par0_, b = par1_;
                return (a * a + a * b + b * b) / 3.0;
            }
            case SourceFamily::Laplace: return 2.0 * par0_ * par0_;
        }
        return 0.0;
    }

    double fourth_moment() const {
        switch (family_) {
            case SourceFamily::Gaussian: return 3.0 * par0_ * par0_;
            case SourceFamily::Uniform: {
                double a = par0_, b = par1_;
                return (std::pow(b, 5) - std::pow(a, 5)) / (5.0 * (b - a));
            }
            case SourceFamily::Laplace: return 24.0 * std::pow(par0_, 4);
        }
        return 0.0;
    }

    double letter_abs_moment() const {
        switch (family_) {
            case SourceFamily::Gaussian: return std::sqrt(2.0 * par0_ / kPi);
            case SourceFamily::Uniform: {
                double a = par0_, b = par1_;
                if (a >= 0.0) return 0.5 * (a + b);
                if (b <= 0.0) return -0.5 * (a + b);
                return 0.5 * (a * a + b * b) / (b - a);
            }
            case SourceFamily::Laplace: return par0_;
        }
        return 0.0;
    }

    // E | -log f(X) - h |^3 for the per-letter information, used by
    // Berry-Esseen terms. Exact quadrature.
    double letter_third_abs_central_info_moment() const {
        switch (family_) {
            case SourceFamily::Gaussian: {
                // -log f - h = (x^2/var - 1)/2; reduce to E|Z^2 - 1|^3 / 8.
                auto f = [](double z) {
                    double w = std::abs(z * z - 1.0);
                    return w * w * w * normal_pdf(z);
                };
                double i = 2.0 * (integrate(f, 0.0, 1.0, 1e-14) +
                                  integrate_to_infinity(f, 1.0, 1e-12));
                return i / 8.0;
            }
            case SourceFamily::Uniform: return 0.0;
            case SourceFamily::Laplace: {
                // -log f - h = |x|/b - 1 with |X|/b ~ Exp(1): E|Y - 1|^3.
                auto f = [](double y) {
                    double w = std::abs(y - 1.0);
                    return w * w * w * std::exp(-y);
                };
                return integrate(f, 0.0, 1.0, 1e-14) + integrate_to_infinity(f, 1.0, 1e-12);
            }
        }
        return 0.0;
    }

    bool log_concave() const { return true; }

    // ---- vector quantities --------------------------------------------------

    double log_density(std::span<const double> x) const {
        check_dim(x.size());
        double s = 0.0;
        for (double v : x) s += letter_log_density(v);
        return s;
    }

    double diff_entropy() const { return n_ * letter_entropy(); }
    double varentropy() const { return n_ * letter_varentropy(); }

    // E ||X||. Exact for Gaussian (chi mean); Jensen bound sqrt(n E[X^2])
    // elsewhere, which keeps upper bounds built from it valid.
    double expected_norm() const {
        if (family_ == SourceFamily::Gaussian) {
            double n = static_cast<double>(n_);
            return std::sqrt(2.0 * par0_) *
                   std::exp(std::lgamma(0.5 * (n + 1.0)) - std::lgamma(0.5 * n));
        }
        return std::sqrt(n_ * second_moment());
    }

    void sample(Rng& rng, std::span<double> out) const {
        check_dim(out.size());
        switch (family_) {
            case SourceFamily::Gaussian: {
                double sd = std::sqrt(par0_);
                for (double& v : out) v = sd * rng.gaussian();
                break;
            }
            case SourceFamily::Uniform:
                for (double& v : out) v = par0_ + (par1_ - par0_) * rng.uniform01();
                break;
            case SourceFamily::Laplace:
                for (double& v : out) v = rng.laplace(par0_);
                break;
        }
    }

    // Smoothness certificate for the product density. The Gaussian constant
    // is the conservative published one (2/var); Uniform is flat; Laplace has
    // a constant gradient norm 1/b away from the kink at 0, which is
    // measure-zero and harmless to the line integrals the bound rests on.
    RegularityCertificate v_bound() const {
        RegularityCertificate c;
        c.dimension = n_;
        switch (family_) {
            case SourceFamily::Gaussian:
                c.c1 = 2.0 / par0_;
                c.c0 = 0.0;
                break;
            case SourceFamily::Uniform:
                c.c1 = 0.0;
                c.c0 = 0.0;
                break;
            case SourceFamily::Laplace:
                c.c1 = 0.0;
                c.c0 = 1.0 / par0_;
                break;
        }
        return c;
    }

    double gaussian_variance() const { return par0_; }
    double uniform_a() const { return par0_; }
    double uniform_b() const { return par1_; }
    double laplace_scale() const { return par0_; }

  private:
    void check_dim(size_t got) const {
        if (static_cast<int>(got) != n_)
            throw std::invalid_argument("source: dimension mismatch");
    }

    SourceFamily family_ = SourceFamily::Gaussian;
    double par0_ = 1.0;
    double par1_ = 0.0;
    int n_ = 1;
};

inline RegularityCertificate v_bound(const ContinuousSource& src) { return src.v_bound(); }

// Monte-Carlo varentropy with standard error, for families lacking the closed
// form and for cross-checks.
struct McEstimate {
    double value = 0.0;
    double standard_error = 0.0;
    std::size_t samples = 0;
};

inline McEstimate varentropy_mc(const ContinuousSource& src, std::size_t samples,
                                std::uint64_t seed) {
    Rng rng = Rng::stream(seed, 0);
    std::vector<double> x(src.dimension());
    // Accumulate moments of the information -log f(X).
    double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
        src.sample(rng, x);
        double info = -src.log_density(x);
        m1 += info;
        m2 += info * info;
        m3 += info * info * info;
        m4 += info * info * info * info;
    }
    double n = static_cast<double>(samples);
    m1 /= n; m2 /= n; m3 /= n; m4 /= n;
    double var = m2 - m1 * m1;
    // Variance of the sample variance via central fourth moment.
    double mu4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * std::pow(m1, 4);
    double se = std::sqrt(std::max(0.0, mu4 - var * var) / n);
    return {var, se, samples};
}

inline double varentropy(const ContinuousSource& src) { return src.varentropy(); }

}  // namespace latrd
