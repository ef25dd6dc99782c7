#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "mrseg/rng.hpp"
#include "mrseg/stats.hpp"

using namespace mrseg;

namespace {

// Simpson quadrature of the beta density, the oracle for the continued fraction.
double ibeta_quadrature(double x, double a, double b) {
    const int steps = 20000;
    double lnc = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    auto f = [&](double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return std::exp(lnc + (a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t));
    };
    double h = x / steps;
    double acc = f(0.0) + f(x);
    for (int i = 1; i < steps; ++i) acc += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Independent recursive enumeration of the exact two-sided Wilcoxon p.
double wilcoxon_exact_oracle(const std::vector<double>& ranks, double w, double total) {
    int n = static_cast<int>(ranks.size());
    long count = 0;
    long all = 1L << n;
    for (long bits = 0; bits < all; ++bits) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) {
            if (bits & (1L << i)) s += ranks[i];
        }
        if (s <= w + 1e-9 || s >= total - w - 1e-9) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(all);
}

MaskGrid mask_from(const std::vector<std::uint8_t>& bits, int h, int w) {
    MaskGrid m(h, w);
    m.data = bits;
    return m;
}

}  // namespace

TEST_CASE("dice score worked examples") {
    MaskGrid a = mask_from({1, 1, 0, 0}, 2, 2);
    MaskGrid b = mask_from({0, 0, 1, 1}, 2, 2);
    CHECK(dice_score(a, a) == 1.0);
    CHECK(dice_score(a, b) == 0.0);

    MaskGrid p = mask_from({1, 1, 1, 1, 0, 0, 0, 0, 0}, 3, 3);
    MaskGrid t = mask_from({0, 0, 1, 1, 1, 1, 0, 0, 0}, 3, 3);
    CHECK(dice_score(p, t) == 0.5);  // 2*2/(4+4)

    MaskGrid empty(2, 2, 0);
    CHECK(dice_score(empty, empty) == 1.0);
    CHECK(dice_score(p, t) == dice_score(t, p));
    CHECK_THROWS_AS(dice_score(a, MaskGrid(3, 3, 0)), ShapeError);
}

TEST_CASE("summarize") {
    Summary s = summarize({0.5, 0.5, 0.5});
    CHECK(s.mean == 0.5);
    CHECK(s.stddev == 0.0);

    Summary z = summarize({0.0, 1.0});
    CHECK(z.mean == doctest::Approx(0.5));
    CHECK(z.stddev == doctest::Approx(0.70710678).epsilon(1e-6));

    Summary one = summarize({0.3});
    CHECK(one.mean == 0.3);
    CHECK(one.stddev == 0.0);

    CHECK_THROWS_AS(summarize({}), ValidationError);
}

TEST_CASE("regularized incomplete beta") {
    CHECK(regularized_incomplete_beta(1.0, 2.5, 0.7) == 1.0);
    CHECK(regularized_incomplete_beta(0.0, 2.5, 0.7) == 0.0);
    CHECK(regularized_incomplete_beta(0.5, 1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-12));

    // analytic: 12 * [t^2/2 - 2t^3/3 + t^4/4] at 0.25 = 0.26171875
    CHECK(regularized_incomplete_beta(0.25, 2.0, 3.0) == doctest::Approx(0.26171875).epsilon(1e-10));

    // quadrature oracle needs a, b > 1 (integrand must vanish at the endpoints)
    for (auto [x, a, b] : {std::tuple{0.25, 2.0, 3.0}, {0.33, 5.0, 1.5}, {0.9, 3.0, 3.0}, {0.6, 2.5, 7.0}}) {
        CHECK(std::abs(regularized_incomplete_beta(x, a, b) - ibeta_quadrature(x, a, b)) < 1e-8);
    }
    // a < 1 case frozen from an independent reference implementation
    CHECK(regularized_incomplete_beta(0.7, 0.5, 4.0) == doctest::Approx(0.997455625384).epsilon(1e-9));

    CHECK_THROWS_AS(regularized_incomplete_beta(-0.1, 1, 1), ValidationError);
    CHECK_THROWS_AS(regularized_incomplete_beta(0.5, 0, 1), ValidationError);
}

TEST_CASE("shapiro-wilk: collinear, constant, skewed") {
    StatTestResult lin = shapiro_wilk({1.0, 2.0, 3.0});
    CHECK(lin.statistic == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(lin.p_value == doctest::Approx(1.0).epsilon(1e-6));

    CHECK_THROWS_AS(shapiro_wilk({2.0, 2.0, 2.0}), ValidationError);
    CHECK_THROWS_AS(shapiro_wilk({1.0, 2.0}), ValidationError);

    // frozen from an independent reference implementation (one-time run)
    StatTestResult skew = shapiro_wilk({1, 1, 1, 1, 10, 100});
    CHECK(skew.statistic == doctest::Approx(0.5517595202).epsilon(1e-6));
    CHECK(skew.p_value == doctest::Approx(0.0001148747).epsilon(1e-4));
    CHECK(skew.p_value < 0.05);

    // a near-normal sample should not be rejected
    StatTestResult norm = shapiro_wilk({-1.2, -0.5, 0.3, 0.8, 1.5, -0.9, 0.1, 0.6, -0.2, 1.0});
    CHECK(norm.p_value > 0.05);
}

TEST_CASE("paired t-test worked example and antisymmetry") {
    std::vector<double> a = {2, 3, 4, 5};
    std::vector<double> b = {1, 1, 1, 1};
    StatTestResult r = paired_t_test(a, b);  // diffs {1,2,3,4}
    CHECK(r.statistic == doctest::Approx(3.8729833462).epsilon(1e-9));
    CHECK(r.p_value == doctest::Approx(0.0304662917).epsilon(1e-8));
    CHECK(r.n == 4);

    StatTestResult s = paired_t_test(b, a);
    CHECK(s.statistic == doctest::Approx(-r.statistic).epsilon(1e-12));
    CHECK(s.p_value == doctest::Approx(r.p_value).epsilon(1e-12));

    CHECK_THROWS_AS(paired_t_test(a, a), ValidationError);
    CHECK_THROWS_AS(paired_t_test({1.0}, {2.0}), ValidationError);
}

TEST_CASE("wilcoxon worked examples") {
    // n=6, all positive, no ties: W=0, both tails are the two extreme patterns
    StatTestResult r = wilcoxon_signed_rank({2, 3, 4, 5, 6, 7}, {1, 1, 1, 1, 1, 1});
    CHECK(r.statistic == 0.0);
    CHECK(r.p_value == doctest::Approx(2.0 / 64.0).epsilon(1e-12));

    // one pair: both tails cover the whole space
    StatTestResult one = wilcoxon_signed_rank({2}, {1});
    CHECK(one.statistic == 0.0);
    CHECK(one.p_value == 1.0);

    // symmetric {+1, -1} tie: W+ = W- = 1.5
    StatTestResult sym = wilcoxon_signed_rank({2, 1}, {1, 2});
    CHECK(sym.statistic == 1.5);
    CHECK(sym.p_value == 1.0);

    // zero differences dropped
    StatTestResult dz = wilcoxon_signed_rank({1, 2, 3}, {1, 1, 1});
    CHECK(dz.n == 2);

    CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2}, {1, 2}), ValidationError);
}

TEST_CASE("wilcoxon exact p matches an independent enumeration for n <= 12") {
    Pcg32 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        int n = 2 + static_cast<int>(rng.next_below(11));
        std::vector<double> a(n), b(n, 0.0);
        for (auto& v : a) {
            v = rng.uniform(-1, 1);
            if (v == 0.0) v = 0.5;
        }
        StatTestResult r = wilcoxon_signed_rank(a, b);

        std::vector<double> abs_d(n);
        for (int i = 0; i < n; ++i) abs_d[i] = std::abs(a[i]);
        std::vector<double> ranks = detail::average_ranks(abs_d);
        double total = 0.0;
        for (double v : ranks) total += v;
        double oracle = wilcoxon_exact_oracle(ranks, r.statistic, total);
        REQUIRE(r.p_value == doctest::Approx(oracle).epsilon(1e-12));

        // without ties, exact p is a multiple of 2^-n
        double scaled = r.p_value * std::pow(2.0, n);
        REQUIRE(std::abs(scaled - std::round(scaled)) < 1e-6);
    }
}

TEST_CASE("wilcoxon normal approximation stays within 0.05 of exact for n <= 12") {
    Pcg32 rng(6);
    for (int trial = 0; trial < 60; ++trial) {
        int n = 5 + static_cast<int>(rng.next_below(8));
        std::vector<double> a(n), b(n, 0.0);
        for (auto& v : a) {
            v = rng.uniform(-1, 1);
            if (v == 0.0) v = 0.5;
        }
        StatTestResult r = wilcoxon_signed_rank(a, b);

        // recompute the large-n path by hand on the same ranks
        std::vector<double> abs_d(n);
        for (int i = 0; i < n; ++i) abs_d[i] = std::abs(a[i]);
        std::vector<double> ranks = detail::average_ranks(abs_d);
        double total = 0.0, w_plus = 0.0, var = 0.0;
        for (int i = 0; i < n; ++i) {
            total += ranks[i];
            var += ranks[i] * ranks[i];
            if (a[i] > 0.0) w_plus += ranks[i];
        }
        var /= 4.0;
        double z = (std::abs(w_plus - total / 2.0) - 0.5) / std::sqrt(var);
        if (z < 0.0) z = 0.0;
        double approx = std::min(1.0, 2.0 * (1.0 - special::normal_cdf(z)));
        REQUIRE(std::abs(approx - r.p_value) < 0.05);
    }
}

TEST_CASE("anova worked examples") {
    StatTestResult flat = anova_oneway({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    CHECK(flat.statistic == doctest::Approx(0.0));
    CHECK(flat.p_value == doctest::Approx(1.0));

    // SSB = 16, SSW = 1, F = 16 / (1/2) = 32
    StatTestResult r = anova_oneway({{1, 2}, {5, 6}});
    CHECK(r.statistic == doctest::Approx(32.0).epsilon(1e-12));
    CHECK(r.p_value == doctest::Approx(0.0298574998).epsilon(1e-8));

    CHECK_THROWS_AS(anova_oneway({{1.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(anova_oneway({{1.0}, {2.0, 3.0}}), ValidationError);
    CHECK_THROWS_AS(anova_oneway({{1.0, 1.0}, {1.0, 1.0}}), ValidationError);

    StatTestResult sep = anova_oneway({{1, 1}, {2, 2}});
    CHECK(std::isinf(sep.statistic));
    CHECK(sep.p_value == 0.0);
}

TEST_CASE("anova on two groups equals the squared unpaired t statistic") {
    Pcg32 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        int na = 3 + static_cast<int>(rng.next_below(8));
        int nb = 3 + static_cast<int>(rng.next_below(8));
        std::vector<double> a(na), b(nb);
        for (auto& v : a) v = rng.normal(0.0, 1.0);
        for (auto& v : b) v = rng.normal(0.5, 1.2);

        Summary sa = summarize(a), sb = summarize(b);
        double sp2 = ((na - 1) * sa.stddev * sa.stddev + (nb - 1) * sb.stddev * sb.stddev) / (na + nb - 2);
        double t = (sa.mean - sb.mean) / std::sqrt(sp2 * (1.0 / na + 1.0 / nb));

        StatTestResult f = anova_oneway({a, b});
        REQUIRE(f.statistic == doctest::Approx(t * t).epsilon(1e-9));
        REQUIRE(f.p_value == doctest::Approx(student_t_two_sided_p(t, na + nb - 2)).epsilon(1e-9));
    }
}

TEST_CASE("all p-values stay in [0, 1] on random inputs") {
    Pcg32 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 4 + static_cast<int>(rng.next_below(20));
        std::vector<double> a(n), b(n);
        for (int i = 0; i < n; ++i) {
            a[i] = rng.normal(0.5, 1.0);
            b[i] = rng.normal(0.0, 2.0);
        }
        for (const auto& r : {paired_t_test(a, b), wilcoxon_signed_rank(a, b), anova_oneway({a, b}),
                              shapiro_wilk(a)}) {
            REQUIRE(r.p_value >= 0.0);
            REQUIRE(r.p_value <= 1.0);
        }
    }
}

TEST_CASE("choose_paired_test routes by normality of the differences") {
    // near-normal differences: Shapiro-Wilk accepts, t-test runs
    std::vector<double> base = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    std::vector<double> normal_shift = {-0.9, -0.4, 0.2, 0.7, 1.3, -0.6, 0.05, 0.5, -0.15, 0.9};
    StatTestResult t = choose_paired_test(normal_shift, base);
    CHECK(t.test_name == "paired_t");

    // heavy-tailed differences: normality rejected, Wilcoxon runs
    std::vector<double> heavy = {1, 1.01, 0.99, 1.02, 10, 100};
    std::vector<double> zero6 = {0, 0, 0, 0, 0, 0};
    StatTestResult w = choose_paired_test(heavy, zero6);
    CHECK(w.test_name == "wilcoxon");

    std::vector<double> constant = {1, 1, 1, 1};
    std::vector<double> zero4 = {0, 0, 0, 0};
    CHECK_THROWS_AS(choose_paired_test(constant, zero4), ValidationError);
}
