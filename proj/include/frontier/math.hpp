#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace frontier {

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * M_SQRT1_2);
}

// Inverse standard normal CDF. Acklam's rational approximation polished by
// one Halley step against erfc; accurate to ~1e-15 over (0,1).
inline double inv_norm_cdf(double u) {
    if (!(u > 0.0 && u < 1.0))
        throw std::invalid_argument("inv_norm_cdf: argument must lie strictly in (0,1)");

    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};

    const double p_low = 0.02425;
    double x;
    if (u < p_low) {
        double q = std::sqrt(-2.0 * std::log(u));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (u <= 1.0 - p_low) {
        double q = u - 0.5;
        double t = q * q;
        x = (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * q /
            (((((b[0] * t + b[1]) * t + b[2]) * t + b[3]) * t + b[4]) * t + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - u));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    double e = norm_cdf(x) - u;
    double t = e * 2.5066282746310002 * std::exp(0.5 * x * x); // sqrt(2*pi)
    return x - t / (1.0 + 0.5 * x * t);
}

// Pairwise (cascade) summation over f(lo..hi-1). Fixed association order makes
// the result independent of how work was scheduled elsewhere.
template <class F>
double pairwise_sum(std::size_t lo, std::size_t hi, F&& f) {
    if (hi <= lo) return 0.0;
    if (hi - lo <= 64) {
        double s = 0.0;
        for (std::size_t i = lo; i < hi; ++i) s += f(i);
        return s;
    }
    std::size_t mid = lo + (hi - lo) / 2;
    return pairwise_sum(lo, mid, f) + pairwise_sum(mid, hi, f);
}

inline double pairwise_sum(const double* x, std::size_t n) {
    return pairwise_sum(std::size_t{0}, n, [x](std::size_t i) { return x[i]; });
}

struct WeightedMoments {
    double mean = 0.0;
    double std_error = 0.0; // population convention: sd / sqrt(effective sample size)
    double sum_w = 0.0;
    double ess = 0.0;
};

// Mean and standard error of values under positive weights. With unit weights
// this is the plain sample mean with se = sd/sqrt(n).
template <class FV, class FW>
WeightedMoments weighted_moments(std::size_t n, FV&& value, FW&& weight) {
    if (n == 0) throw std::invalid_argument("weighted_moments: empty sample");
    double sw = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) { return weight(i); });
    if (!(sw > 0.0)) throw std::invalid_argument("weighted_moments: weights must sum > 0");
    double swx = pairwise_sum(std::size_t{0}, n,
                              [&](std::size_t i) { return weight(i) * value(i); });
    double m = swx / sw;
    double sw2 = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) {
        double w = weight(i);
        return w * w;
    });
    double swd = pairwise_sum(std::size_t{0}, n, [&](std::size_t i) {
        double d = value(i) - m;
        return weight(i) * d * d;
    });
    WeightedMoments out;
    out.mean = m;
    out.sum_w = sw;
    out.ess = sw * sw / sw2;
    out.std_error = std::sqrt((swd / sw) / out.ess);
    return out;
}

inline WeightedMoments weighted_moments(const std::vector<double>& values,
                                        const std::vector<double>& weights) {
    if (values.size() != weights.size())
        throw std::invalid_argument("weighted_moments: size mismatch");
    return weighted_moments(
        values.size(), [&](std::size_t i) { return values[i]; },
        [&](std::size_t i) { return weights[i]; });
}

} // namespace frontier
