#pragma once

// Straightforward reference implementations used only by the tests. They
// share no code with the library beyond plain data types.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;
using Point = std::array<double, 4>;

// Gauss-Jordan inversion with partial pivoting.
inline Matrix inverse(Matrix a) {
    const std::size_t n = a.size();
    Matrix inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (a[piv][col] == 0.0) throw std::runtime_error("singular matrix");
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const double d = a[col][col];
        for (std::size_t k = 0; k < n; ++k) {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t k = 0; k < n; ++k) {
                a[r][k] -= f * a[col][k];
                inv[r][k] -= f * inv[col][k];
            }
        }
    }
    return inv;
}

inline double rbf(const Point& a, const Point& b, double sf2, double ell) {
    double d2 = 0;
    for (std::size_t i = 0; i < 4; ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
    return sf2 * std::exp(-d2 / (2 * ell * ell));
}

struct DenseGp {
    std::vector<Point> x;
    std::vector<double> y;
    double sf2, ell, sn2, offset = 0.0;
    Matrix kinv;
    std::vector<double> alpha;

    DenseGp(std::vector<Point> xs, std::vector<double> ys, double sf2_, double ell_, double sn2_, bool center)
        : x(std::move(xs)), y(std::move(ys)), sf2(sf2_), ell(ell_), sn2(sn2_) {
        const std::size_t n = x.size();
        if (center) {
            for (double v : y) offset += v;
            offset /= static_cast<double>(n);
        }
        Matrix k(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) k[i][j] = rbf(x[i], x[j], sf2, ell) + (i == j ? sn2 : 0.0);
        kinv = inverse(k);
        alpha.assign(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) alpha[i] += kinv[i][j] * (y[j] - offset);
    }

    double mean(const Point& p) const {
        double m = offset;
        for (std::size_t i = 0; i < x.size(); ++i) m += rbf(p, x[i], sf2, ell) * alpha[i];
        return m;
    }

    double variance(const Point& p) const {
        const std::size_t n = x.size();
        std::vector<double> ks(n);
        for (std::size_t i = 0; i < n; ++i) ks[i] = rbf(p, x[i], sf2, ell);
        double q = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) q += ks[i] * kinv[i][j] * ks[j];
        return sf2 - q;
    }
};

// Otsu by direct minimization of the within-class variance, recomputed from
// scratch for every threshold. Class 0 is gray <= t. Returns the within-class
// variance for threshold t (infinity if a class is empty).
inline double within_class_variance(const std::vector<int>& gray, int t) {
    double n0 = 0, n1 = 0, s0 = 0, s1 = 0;
    for (int g : gray) (g <= t ? (n0 += 1, s0 += g) : (n1 += 1, s1 += g));
    if (n0 == 0 || n1 == 0) return std::numeric_limits<double>::infinity();
    const double m0 = s0 / n0, m1 = s1 / n1;
    double v0 = 0, v1 = 0;
    for (int g : gray) (g <= t ? v0 += (g - m0) * (g - m0) : v1 += (g - m1) * (g - m1));
    return (v0 + v1) / static_cast<double>(gray.size());
}

inline int otsu_brute(const std::vector<int>& gray) {
    int best_t = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 255; ++t) {
        const double v = within_class_variance(gray, t);
        if (v < best) {
            best = v;
            best_t = t;
        }
    }
    return best_t;
}

struct Moments {
    double mean, stddev;
};

// Monte-Carlo moments of sum_ch (M_ch - t_ch)^2 with M_ch ~ N(mu_ch, sd_ch^2).
inline Moments mc_error_moments(const std::array<double, 3>& mu, const std::array<double, 3>& sd,
                                const std::array<double, 3>& t, std::size_t draws, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    double s = 0, s2 = 0;
    for (std::size_t i = 0; i < draws; ++i) {
        double d = 0;
        for (std::size_t c = 0; c < 3; ++c) {
            const double m = mu[c] + sd[c] * z(rng);
            d += (m - t[c]) * (m - t[c]);
        }
        s += d;
        s2 += d * d;
    }
    const double n = static_cast<double>(draws);
    const double mean = s / n;
    return {mean, std::sqrt(std::max(0.0, s2 / n - mean * mean))};
}

// Standard normal pdf / cdf, written out independently.
inline double phi(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846); }
inline double big_phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

} // namespace oracle
