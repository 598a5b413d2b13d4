#pragma once

// Independent reference computations used by the tests: grid quadrature,
// goodness-of-fit p-values, batch-means standard errors and exhaustive search.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double se = 0.0;  // of the mean, assuming independent draws
};

inline Moments moments(const std::vector<double>& v) {
    Moments m;
    const double n = double(v.size());
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    for (double x : v) m.var += (x - m.mean) * (x - m.mean);
    m.var /= (n - 1.0);
    m.se = std::sqrt(m.var / n);
    return m;
}

/// Standard error of the mean of a correlated series by non-overlapping batch means.
inline double batchMeansSE(const std::vector<double>& v, int nBatches = 50) {
    const std::size_t b = v.size() / std::size_t(nBatches);
    std::vector<double> means;
    for (int k = 0; k < nBatches; ++k) {
        double s = 0;
        for (std::size_t t = 0; t < b; ++t) s += v[std::size_t(k) * b + t];
        means.push_back(s / double(b));
    }
    return std::sqrt(moments(means).var / nBatches);
}

/// Mean and variance of a 1-D density known up to a constant, by midpoint rule.
inline Moments gridMoments(const std::function<double(double)>& logDensity, double lo, double hi, int n = 200000) {
    const double h = (hi - lo) / n;
    std::vector<double> lv(static_cast<std::size_t>(n));
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
        lv[std::size_t(k)] = logDensity(lo + (k + 0.5) * h);
        mx = std::max(mx, lv[std::size_t(k)]);
    }
    double z = 0, s1 = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
        const double x = lo + (k + 0.5) * h;
        const double w = std::exp(lv[std::size_t(k)] - mx);
        z += w;
        s1 += w * x;
        s2 += w * x * x;
    }
    Moments m;
    m.mean = s1 / z;
    m.var = s2 / z - m.mean * m.mean;
    return m;
}

/// Moments of each coordinate of a 2-D density known up to a constant.
struct Moments2 {
    Moments a, b;
};
inline Moments2 gridMoments2(const std::function<double(double, double)>& logDensity, double aLo, double aHi,
                             double bLo, double bHi, int n = 1200) {
    const double ha = (aHi - aLo) / n, hb = (bHi - bLo) / n;
    std::vector<double> lv(std::size_t(n) * std::size_t(n));
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = logDensity(aLo + (i + 0.5) * ha, bLo + (j + 0.5) * hb);
            lv[std::size_t(i) * std::size_t(n) + std::size_t(j)] = v;
            mx = std::max(mx, v);
        }
    }
    double z = 0, a1 = 0, a2 = 0, b1 = 0, b2 = 0;
    for (int i = 0; i < n; ++i) {
        const double a = aLo + (i + 0.5) * ha;
        for (int j = 0; j < n; ++j) {
            const double b = bLo + (j + 0.5) * hb;
            const double w = std::exp(lv[std::size_t(i) * std::size_t(n) + std::size_t(j)] - mx);
            z += w;
            a1 += w * a;
            a2 += w * a * a;
            b1 += w * b;
            b2 += w * b * b;
        }
    }
    Moments2 m;
    m.a.mean = a1 / z;
    m.a.var = a2 / z - m.a.mean * m.a.mean;
    m.b.mean = b1 / z;
    m.b.var = b2 / z - m.b.mean * m.b.mean;
    return m;
}

/// Integral of exp(logDensity) over [lo, hi] by the midpoint rule.
inline double integrate(const std::function<double(double)>& logDensity, double lo, double hi, int n = 100000) {
    const double h = (hi - lo) / n;
    double s = 0;
    for (int k = 0; k < n; ++k) s += std::exp(logDensity(lo + (k + 0.5) * h));
    return s * h;
}

/// One-sample Kolmogorov-Smirnov test against a continuous CDF (Stephens' approximation).
inline double ksPValue(std::vector<double> sample, const std::function<double(double)>& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = double(sample.size());
    double d = 0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, (double(i) + 1.0) / n - f, f - double(i) / n});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0;
    for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

/// Pearson chi-square goodness-of-fit p-value.
inline double chiSquarePValue(const std::vector<double>& observed, const std::vector<double>& expected,
                              int lostDof = 1) {
    double stat = 0;
    for (std::size_t k = 0; k < observed.size(); ++k) {
        stat += (observed[k] - expected[k]) * (observed[k] - expected[k]) / expected[k];
    }
    const double dof = double(observed.size()) - lostDof;
    return boost::math::gamma_q(dof / 2.0, stat / 2.0);
}

/// Minimum total dissimilarity to the nearest of k medoids over every medoid set.
inline double exhaustiveMedoidCost(const Eigen::MatrixXd& d, int k) {
    const int n = int(d.rows());
    std::vector<int> pick(static_cast<std::size_t>(n), 0);
    std::fill(pick.end() - k, pick.end(), 1);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0;
        for (int i = 0; i < n; ++i) {
            double m = std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                if (pick[std::size_t(j)]) m = std::min(m, d(i, j));
            }
            cost += m;
        }
        best = std::min(best, cost);
    } while (std::next_permutation(pick.begin(), pick.end()));
    return best;
}

}  // namespace oracle
