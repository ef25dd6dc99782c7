// Dice evaluation and the statistical battery: Shapiro-Wilk normality test
// (Royston AS R94), paired t-test, Wilcoxon signed-rank (exact enumeration
// for n <= 20, tie/continuity-corrected normal approximation above), one-way
// ANOVA, and the special functions backing their p-values.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "mrseg/errors.hpp"
#include "mrseg/tensor.hpp"

namespace mrseg {

struct DiceResult {
    std::string case_id;
    double dice = 0.0;
};

struct StatTestResult {
    std::string test_name;
    double statistic = 0.0;
    double p_value = 1.0;
    int n = 0;
    double alpha = 0.05;
};

// 2|P n T| / (|P| + |T|); two empty masks score 1.0 so aggregate tables
// never see NaN.
inline double dice_score(const MaskGrid& pred, const MaskGrid& truth) {
    if (pred.height != truth.height || pred.width != truth.width) throw ShapeError("dice_score: shape mismatch");
    std::size_t inter = 0, p = 0, t = 0;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        p += pred.data[i];
        t += truth.data[i];
        inter += pred.data[i] & truth.data[i];
    }
    if (p + t == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(p + t);
}

struct Summary {
    double mean = 0.0;
    double stddev = 0.0;  // sample std (n-1); 0 for a single value
    int n = 0;
};

inline Summary summarize(const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("summarize: empty sample");
    Summary s;
    s.n = static_cast<int>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.n;
    if (s.n > 1) {
        double acc = 0.0;
        for (double v : values) acc += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(acc / (s.n - 1));
    }
    return s;
}

// ---------------------------------------------------------------------------
// Special functions.

namespace special {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation refined by one Halley step.
inline double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0) throw ValidationError("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                               1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                               6.680131188771972e+01,  -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                               -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                               3.754408661907416e+00};
    constexpr double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * 3.14159265358979323846) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// Continued fraction for the regularized incomplete beta (modified Lentz).
inline double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return h;
}

}  // namespace special

// I_x(a, b), absolute error well under 1e-10 in the tested domain.
inline double regularized_incomplete_beta(double x, double a, double b) {
    if (x < 0.0 || x > 1.0 || a <= 0.0 || b <= 0.0) {
        throw ValidationError("regularized_incomplete_beta: domain violation");
    }
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * special::betacf(a, b, x) / a;
    }
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) + b * std::log1p(-x) + a * std::log(x)) *
                     special::betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for Student's t with dof degrees of freedom.
inline double student_t_two_sided_p(double t, double dof) {
    double x = dof / (dof + t * t);
    return regularized_incomplete_beta(x, dof / 2.0, 0.5);
}

// Upper-tail p for the F distribution with (d1, d2) degrees of freedom.
inline double f_upper_p(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    double x = d2 / (d2 + d1 * f);
    return regularized_incomplete_beta(x, d2 / 2.0, d1 / 2.0);
}

// ---------------------------------------------------------------------------
// Shapiro-Wilk, Royston's AS R94 approximation. Valid for 3 <= n <= 5000.

inline StatTestResult shapiro_wilk(std::vector<double> sample) {
    int n = static_cast<int>(sample.size());
    if (n < 3) throw ValidationError("shapiro_wilk: need at least 3 values");
    if (n > 5000) throw ValidationError("shapiro_wilk: n > 5000 unsupported");
    std::sort(sample.begin(), sample.end());
    if (sample.front() == sample.back()) throw ValidationError("shapiro_wilk: zero variance");

    // expected normal order statistics (Blom-style)
    std::vector<double> m(n);
    double ssq_m = 0.0;
    for (int i = 0; i < n; ++i) {
        m[i] = special::normal_quantile((i + 1 - 0.375) / (n + 0.25));
        ssq_m += m[i] * m[i];
    }
    std::vector<double> a(n, 0.0);
    if (n == 3) {
        a[0] = -std::sqrt(0.5);
        a[2] = std::sqrt(0.5);
    } else {
        double rsn = 1.0 / std::sqrt(static_cast<double>(n));
        double cn = m[n - 1] / std::sqrt(ssq_m);
        double cn1 = m[n - 2] / std::sqrt(ssq_m);
        double an = -2.706056 * std::pow(rsn, 5) + 4.434685 * std::pow(rsn, 4) - 2.071190 * std::pow(rsn, 3) -
                    0.147981 * rsn * rsn + 0.221157 * rsn + cn;
        double an1 = 0.0;
        double phi;
        if (n > 5) {
            an1 = -3.582633 * std::pow(rsn, 5) + 5.682633 * std::pow(rsn, 4) - 1.752461 * std::pow(rsn, 3) -
                  0.293762 * rsn * rsn + 0.042981 * rsn + cn1;
            phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1] - 2.0 * m[n - 2] * m[n - 2]) /
                  (1.0 - 2.0 * an * an - 2.0 * an1 * an1);
        } else {
            phi = (ssq_m - 2.0 * m[n - 1] * m[n - 1]) / (1.0 - 2.0 * an * an);
        }
        a[n - 1] = an;
        a[0] = -an;
        int start = 1;
        if (n > 5) {
            a[n - 2] = an1;
            a[1] = -an1;
            start = 2;
        }
        for (int i = start; i < n - start; ++i) a[i] = m[i] / std::sqrt(phi);
    }

    double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < n; ++i) {
        num += a[i] * sample[i];
        den += (sample[i] - mean) * (sample[i] - mean);
    }
    double w = num * num / den;
    if (w > 1.0) w = 1.0;

    double p;
    if (n == 3) {
        constexpr double pi = 3.14159265358979323846;
        p = 6.0 / pi * (std::asin(std::sqrt(w)) - std::asin(std::sqrt(0.75)));
        p = std::clamp(p, 0.0, 1.0);
    } else if (n <= 11) {
        double g = -2.273 + 0.459 * n;
        double mu = 0.5440 - 0.39978 * n + 0.025054 * n * n - 0.0006714 * n * n * n;
        double sigma = std::exp(1.3822 - 0.77857 * n + 0.062767 * n * n - 0.0020322 * n * n * n);
        double arg = g - std::log(1.0 - w);
        if (arg <= 0.0) {
            p = 0.0;
        } else {
            double z = (-std::log(arg) - mu) / sigma;
            p = 1.0 - special::normal_cdf(z);
        }
    } else {
        double u = std::log(static_cast<double>(n));
        double mu = -1.5861 - 0.31082 * u - 0.083751 * u * u + 0.0038915 * u * u * u;
        double sigma = std::exp(-0.4803 - 0.082676 * u + 0.0030302 * u * u);
        double z = (std::log(1.0 - w) - mu) / sigma;
        p = 1.0 - special::normal_cdf(z);
    }
    return {"shapiro_wilk", w, p, n, 0.05};
}

// ---------------------------------------------------------------------------
// Paired tests.

inline std::vector<double> paired_differences(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ValidationError("paired test: unequal lengths");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

inline StatTestResult paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d = paired_differences(a, b);
    int n = static_cast<int>(d.size());
    if (n < 2) throw ValidationError("paired_t_test: need n >= 2");
    Summary s = summarize(d);
    if (s.stddev < 1e-300) throw ValidationError("paired_t_test: zero-variance differences");
    double t = s.mean / (s.stddev / std::sqrt(static_cast<double>(n)));
    double p = student_t_two_sided_p(t, n - 1);
    return {"paired_t", t, p, n, 0.05};
}

namespace detail {

// average ranks of |values|, ties averaged
inline std::vector<double> average_ranks(const std::vector<double>& abs_d) {
    int n = static_cast<int>(abs_d.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return abs_d[x] < abs_d[y]; });
    std::vector<double> ranks(n);
    int i = 0;
    while (i < n) {
        int j = i;
        while (j + 1 < n && abs_d[idx[j + 1]] == abs_d[idx[i]]) ++j;
        double avg = (i + j + 2) / 2.0;  // ranks are 1-based
        for (int k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

}  // namespace detail

// W = min(W+, W-); zero differences dropped, tied |d| get averaged ranks.
// Exact two-sided p by enumerating all 2^n sign assignments for n <= 20;
// tie- and continuity-corrected normal approximation beyond.
inline StatTestResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d;
    for (double x : paired_differences(a, b)) {
        if (x != 0.0) d.push_back(x);
    }
    int n = static_cast<int>(d.size());
    if (n == 0) throw ValidationError("wilcoxon_signed_rank: all differences zero");
    std::vector<double> abs_d(n);
    for (int i = 0; i < n; ++i) abs_d[i] = std::abs(d[i]);
    std::vector<double> ranks = detail::average_ranks(abs_d);
    double w_plus = 0.0, total = 0.0;
    for (int i = 0; i < n; ++i) {
        total += ranks[i];
        if (d[i] > 0.0) w_plus += ranks[i];
    }
    double w_minus = total - w_plus;
    double w = std::min(w_plus, w_minus);

    double p;
    if (n <= 20) {
        // exact: count sign assignments with W+ in either tail
        std::uint64_t count_low = 0, count_high = 0, all = 1ULL << n;
        double lo = w + 1e-9, hi = total - w - 1e-9;
        for (std::uint64_t bits = 0; bits < all; ++bits) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                if (bits & (1ULL << i)) s += ranks[i];
            }
            if (s <= lo) ++count_low;
            if (s >= hi) ++count_high;
        }
        p = static_cast<double>(count_low + count_high) / static_cast<double>(all);
        if (p > 1.0) p = 1.0;
    } else {
        double mean = total / 2.0;
        double var = 0.0;
        for (int i = 0; i < n; ++i) var += ranks[i] * ranks[i];
        var /= 4.0;  // sum r_i^2 / 4 absorbs the tie correction
        double z = (std::abs(w_plus - mean) - 0.5) / std::sqrt(var);
        if (z < 0.0) z = 0.0;
        p = 2.0 * (1.0 - special::normal_cdf(z));
        if (p > 1.0) p = 1.0;
    }
    return {"wilcoxon", w, p, n, 0.05};
}

inline StatTestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw ValidationError("anova_oneway: need >= 2 groups");
    int total_n = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() < 2) throw ValidationError("anova_oneway: every group needs n >= 2");
        total_n += static_cast<int>(g.size());
        grand_sum += std::accumulate(g.begin(), g.end(), 0.0);
    }
    double grand_mean = grand_sum / total_n;
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        double mean = std::accumulate(g.begin(), g.end(), 0.0) / g.size();
        ssb += static_cast<double>(g.size()) * (mean - grand_mean) * (mean - grand_mean);
        for (double v : g) ssw += (v - mean) * (v - mean);
    }
    int k = static_cast<int>(groups.size());
    double total_ss = ssb + ssw;
    if (total_ss < 1e-300) throw ValidationError("anova_oneway: degenerate total variance");
    double d1 = k - 1, d2 = total_n - k;
    if (ssw < 1e-300) {
        return {"anova", std::numeric_limits<double>::infinity(), 0.0, total_n, 0.05};
    }
    double f = (ssb / d1) / (ssw / d2);
    return {"anova", f, f_upper_p(f, d1, d2), total_n, 0.05};
}

// Decision rule: test the paired differences for normality,
// then run the paired t-test if they look normal, Wilcoxon otherwise.
inline StatTestResult choose_paired_test(const std::vector<double>& a, const std::vector<double>& b,
                                         double alpha = 0.05) {
    std::vector<double> d = paired_differences(a, b);
    bool constant = true;
    for (double x : d) {
        if (x != d[0]) constant = false;
    }
    if (constant) throw ValidationError("choose_paired_test: constant differences");
    StatTestResult normality = shapiro_wilk(d);
    StatTestResult result = normality.p_value >= alpha ? paired_t_test(a, b) : wilcoxon_signed_rank(a, b);
    result.alpha = alpha;
    return result;
}

}  // namespace mrseg
