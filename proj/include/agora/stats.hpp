#pragma once

// Statistics kernel: overflow-safe moments, type-7 quantiles, Pearson
// correlation, the F-distribution CDF via the regularized incomplete beta
// function, and the Brown-Forsythe variance-homogeneity test.
//
// Series produced under the mark-to-market regime can reach magnitudes near
// the double range, so every second-moment computation rescales by the peak
// magnitude first; the exported quantities (std, cv, correlation, the BF
// statistic) are all scale-covariant or scale-invariant, so rescaling is
// exact up to rounding.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace agora {

inline constexpr double k_nan = std::numeric_limits<double>::quiet_NaN();

/// Welford running mean / second moment.
class RunningStat {
public:
    void push(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return n_ > 0 ? mean_ : k_nan; }
    /// Population variance (divide by n).
    double variance() const {
        return n_ > 0 ? m2_ / static_cast<double>(n_) : k_nan;
    }
    double stddev() const { return std::sqrt(variance()); }
    /// Sample variance (divide by n-1).
    double sample_variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : k_nan;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// Mean and population std of a span, computed on data rescaled by its peak
/// magnitude so that huge-but-finite series do not overflow the second
/// moment.
struct Moments {
    double mean = k_nan;
    double stddev = k_nan;
    std::size_t n = 0;
};

inline Moments moments(std::span<const double> xs) {
    if (xs.empty()) return {};
    double peak = 0.0;
    for (double x : xs) peak = std::max(peak, std::abs(x));
    const double scale = peak > 0.0 ? peak : 1.0;
    RunningStat rs;
    for (double x : xs) rs.push(x / scale);
    return Moments{rs.mean() * scale, rs.stddev() * scale, rs.count()};
}

/// Linear-interpolation quantile (the common "type 7" convention:
/// h = (n-1)q, interpolate between the straddling order statistics).
/// Input must already be sorted ascending.
inline double quantile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile: empty data");
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: q outside [0,1]");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

/// Sorting convenience for unsorted input.
inline double quantile(std::vector<double> data, double q) {
    std::sort(data.begin(), data.end());
    return quantile_sorted(data, q);
}

inline double median(std::vector<double> data) { return quantile(std::move(data), 0.5); }

/// Pearson correlation of (x_t, y_{t-lag}) over the overlapping range.
/// Returns NaN (the undefined-marker) when either side has zero variance or
/// fewer than three pairs overlap.
inline double correlation(std::span<const double> x, std::span<const double> y,
                          std::size_t lag = 0) {
    if (x.size() != y.size())
        throw std::invalid_argument("correlation: length mismatch");
    if (x.size() < lag + 3) return k_nan;
    const std::size_t n = x.size() - lag;
    const auto xs = x.subspan(lag, n);
    const auto ys = y.subspan(0, n);

    const Moments mx = moments(xs);
    const Moments my = moments(ys);
    if (!(mx.stddev > 0.0) || !(my.stddev > 0.0)) return k_nan;

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        acc += ((xs[i] - mx.mean) / mx.stddev) * ((ys[i] - my.mean) / my.stddev);
    return std::clamp(acc / static_cast<double>(n), -1.0, 1.0);
}

namespace detail {

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

/// Continued fraction for the incomplete beta function, modified Lentz
/// algorithm (same scheme as the classic Numerical Recipes betacf).
inline double ibeta_cf(double a, double b, double x) {
    constexpr int k_max_iter = 500;
    constexpr double k_eps = 1e-15;
    constexpr double k_tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < k_tiny) d = k_tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= k_max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < k_tiny) d = k_tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < k_tiny) c = k_tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < k_tiny) d = k_tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < k_tiny) c = k_tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < k_eps) break;
    }
    return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0)
        throw std::invalid_argument("incomplete_beta: a, b must be > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double bt = std::exp(a * std::log(x) + b * std::log1p(-x) -
                               detail::log_beta(a, b));
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * detail::ibeta_cf(a, b, x) / a;
    return 1.0 - bt * detail::ibeta_cf(b, a, 1.0 - x) / b;
}

/// CDF of the F(d1, d2) distribution.
inline double f_cdf(double x, int d1, int d2) {
    if (d1 < 1 || d2 < 1)
        throw std::invalid_argument("f_cdf: degrees of freedom must be >= 1");
    if (x < 0.0) throw std::invalid_argument("f_cdf: x must be >= 0");
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    const double xx = d1 * x / (d1 * x + static_cast<double>(d2));
    return incomplete_beta(0.5 * d1, 0.5 * d2, xx);
}

struct BrownForsythe {
    double statistic = 0.0;
    bool pass = false;
};

/// Brown-Forsythe homogeneity-of-variances test on contiguous blocks of a
/// series: z = |y - block median|, one-way ANOVA F on z with (k-1, n-k)
/// degrees of freedom; pass when the statistic is below the 1-alpha quantile.
/// Blocks are balanced (the first n mod k blocks take one extra element).
/// All-equal data in every block passes trivially with statistic 0.
inline BrownForsythe brown_forsythe(std::span<const double> y, int k = 10,
                                    double alpha = 0.05) {
    const std::size_t n = y.size();
    if (k < 2) throw std::invalid_argument("brown_forsythe: need k >= 2 blocks");
    if (n < 2 * static_cast<std::size_t>(k))
        throw std::invalid_argument("brown_forsythe: need blocks of >= 2 values");

    std::vector<double> z(n);
    std::vector<double> block_mean(static_cast<std::size_t>(k));
    std::vector<std::size_t> block_size(static_cast<std::size_t>(k));

    double peak = 0.0;
    std::size_t begin = 0;
    std::vector<double> buf;
    for (int j = 0; j < k; ++j) {
        const std::size_t size = n / k + (static_cast<std::size_t>(j) < n % k ? 1 : 0);
        buf.assign(y.begin() + begin, y.begin() + begin + size);
        const double med = median(std::move(buf));
        for (std::size_t i = begin; i < begin + size; ++i) {
            z[i] = std::abs(y[i] - med);
            peak = std::max(peak, z[i]);
        }
        block_size[static_cast<std::size_t>(j)] = size;
        begin += size;
    }

    // Rescale the absolute deviations; F is invariant under the scaling.
    const double scale = peak > 0.0 ? peak : 1.0;
    for (double& v : z) v /= scale;

    double grand = 0.0;
    begin = 0;
    for (int j = 0; j < k; ++j) {
        const std::size_t size = block_size[static_cast<std::size_t>(j)];
        double sum = 0.0;
        for (std::size_t i = begin; i < begin + size; ++i) sum += z[i];
        block_mean[static_cast<std::size_t>(j)] = sum / static_cast<double>(size);
        grand += sum;
        begin += size;
    }
    grand /= static_cast<double>(n);

    double ss_between = 0.0;
    double ss_within = 0.0;
    begin = 0;
    for (int j = 0; j < k; ++j) {
        const std::size_t size = block_size[static_cast<std::size_t>(j)];
        const double bm = block_mean[static_cast<std::size_t>(j)];
        ss_between += static_cast<double>(size) * (bm - grand) * (bm - grand);
        for (std::size_t i = begin; i < begin + size; ++i)
            ss_within += (z[i] - bm) * (z[i] - bm);
        begin += size;
    }

    if (ss_within == 0.0) {
        if (ss_between == 0.0) return BrownForsythe{0.0, true};
        return BrownForsythe{std::numeric_limits<double>::infinity(), false};
    }
    const double stat = (ss_between / (k - 1)) /
                        (ss_within / static_cast<double>(n - static_cast<std::size_t>(k)));
    const bool pass =
        f_cdf(stat, k - 1, static_cast<int>(n) - k) < 1.0 - alpha;
    return BrownForsythe{stat, pass};
}

}  // namespace agora
