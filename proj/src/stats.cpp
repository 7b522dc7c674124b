#include "vh/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "vh/errors.hpp"

namespace vh::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

template <std::size_t N>
double rational(const std::array<double, N>& num,
                const std::array<double, N>& den, double r) {
    double p = 0.0, q = 0.0;
    for (std::size_t i = N; i-- > 0;) {
        p = p * r + num[i];
        q = q * r + den[i];
    }
    return p / q;
}

}  // namespace

// Wichura (1988), algorithm AS 241, PPND16
double normal_ppf(double p) {
    if (p <= 0.0 || p >= 1.0)
        throw Error("normal_ppf requires p in (0,1)");
    static const std::array<double, 8> a = {
        3.3871328727963666080e0, 1.3314166789178437745e2,
        1.9715909503065514427e3, 1.3731693765509461125e4,
        4.5921953931549871457e4, 6.7265770927008700853e4,
        3.3430575583588128105e4, 2.5090809287301226727e3};
    static const std::array<double, 8> b = {
        1.0, 4.2313330701600911252e1, 6.8718700749205790830e2,
        5.3941960214247511077e3, 2.1213794301586595867e4,
        3.9307895800092710610e4, 2.8729085735721942674e4,
        5.2264952788528545610e3};
    static const std::array<double, 8> c = {
        1.42343711074968357734e0, 4.63033784615654529590e0,
        5.76949722146069140550e0, 3.64784832476320460504e0,
        1.27045825245236838258e0, 2.41780725177450611770e-1,
        2.27238449892691845833e-2, 7.74545014278341407640e-4};
    static const std::array<double, 8> d = {
        1.0, 2.05319162663775882187e0, 1.67638483018380384940e0,
        6.89767334985100004550e-1, 1.48103976427480074590e-1,
        1.51986665636164571966e-2, 5.47593808499534494600e-4,
        1.05075007164441684324e-9};
    static const std::array<double, 8> e = {
        6.65790464350110377720e0, 5.46378491116411436990e0,
        1.78482653991729133580e0, 2.96560571828504891230e-1,
        2.65321895265761230930e-2, 1.24266094738807843860e-3,
        2.71155556874348757815e-5, 2.01033439929228813265e-7};
    static const std::array<double, 8> f = {
        1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1,
        1.48753612908506148525e-2, 7.86869131145613259100e-4,
        1.84631831751005468180e-5, 1.42151175831644588870e-7,
        2.04426310338993978564e-15};

    const double q = p - 0.5;
    if (std::abs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * rational(a, b, r);
    }
    double r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        val = rational(c, d, r - 1.6);
    } else {
        val = rational(e, f, r - 5.0);
    }
    return q < 0 ? -val : val;
}

std::vector<double> midranks(const std::vector<double>& values,
                             double* tie_correction, int* tie_groups) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
    std::vector<double> ranks(n);
    double tc = 0.0;
    int groups = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1) {
            tc += t * t * t - t;
            ++groups;
        }
        i = j + 1;
    }
    if (tie_correction) *tie_correction = tc;
    if (tie_groups) *tie_groups = groups;
    return ranks;
}

namespace {

double poly(const std::vector<double>& c, double x) {
    double v = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) v = v * x + c[i];
    return v;
}

// two-sided p from an integer-indexed pmf of counts
double two_sided_from_counts(const std::vector<double>& counts, long stat2) {
    double total = 0.0, le = 0.0, ge = 0.0;
    for (long s = 0; s < static_cast<long>(counts.size()); ++s) {
        total += counts[s];
        if (s <= stat2) le += counts[s];
        if (s >= stat2) ge += counts[s];
    }
    return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace

TestReport shapiro_wilk(const std::vector<double>& samples) {
    const int n = static_cast<int>(samples.size());
    if (n < 3) throw TooFewSamples("Shapiro-Wilk needs n >= 3");
    if (n > 5000) throw Error("Shapiro-Wilk approximation limited to n <= 5000");
    std::vector<double> x = samples;
    std::sort(x.begin(), x.end());
    if (x.front() == x.back())
        throw DegenerateSample("all sample values equal");

    const int n2 = n / 2;
    std::vector<double> m(n2);
    for (int i = 0; i < n2; ++i)
        m[i] = normal_ppf((i + 1 - 0.375) / (n + 0.25));
    double summ2 = 0.0;
    for (double v : m) summ2 += 2.0 * v * v;
    const double ssqrt = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(static_cast<double>(n));

    static const std::vector<double> c1 = {0.0,      0.221157,  -0.147981,
                                           -2.071190, 4.434685, -2.706056};
    static const std::vector<double> c2 = {0.0,      0.042981,  -0.293762,
                                           -1.752461, 5.682633, -3.582633};

    // weights for the lower half; upper half is the mirror image
    std::vector<double> a(n2);
    int i1;
    if (n > 5) {
        i1 = 2;
        a[0] = poly(c1, rsn) - m[0] / ssqrt;
        a[1] = poly(c2, rsn) - m[1] / ssqrt;
        const double fac =
            std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) /
                      (1.0 - 2.0 * a[0] * a[0] - 2.0 * a[1] * a[1]));
        for (int i = i1; i < n2; ++i) a[i] = -m[i] / fac;
    } else if (n > 3) {
        i1 = 1;
        a[0] = poly(c1, rsn) - m[0] / ssqrt;
        const double fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) /
                                     (1.0 - 2.0 * a[0] * a[0]));
        for (int i = i1; i < n2; ++i) a[i] = -m[i] / fac;
    } else {
        a[0] = std::sqrt(0.5);
    }

    const double mean =
        std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
    double ssq = 0.0;
    for (double v : x) ssq += (v - mean) * (v - mean);
    double num = 0.0;
    for (int i = 0; i < n2; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
    const double w = num * num / ssq;

    double p;
    if (n == 3) {
        constexpr double pi6 = 1.90985931710274;          // 6/pi
        constexpr double stqr = 1.04719755119660;         // asin(sqrt(3/4))
        p = pi6 * (std::asin(std::sqrt(w)) - stqr);
        p = std::clamp(p, 0.0, 1.0);
    } else {
        double z;
        if (n <= 11) {
            static const std::vector<double> c3 = {0.5440, -0.39978, 0.025054,
                                                   -6.714e-4};
            static const std::vector<double> c4 = {1.3822, -0.77857, 0.062767,
                                                   -0.0020322};
            const double gamma = -2.273 + 0.459 * n;
            const double ws = -std::log(gamma - std::log1p(-w));
            z = (ws - poly(c3, static_cast<double>(n))) /
                std::exp(poly(c4, static_cast<double>(n)));
        } else {
            static const std::vector<double> c5 = {-1.5861, -0.31082, -0.083751,
                                                   0.0038915};
            static const std::vector<double> c6 = {-0.4803, -0.082676,
                                                   0.0030302};
            const double u = std::log(static_cast<double>(n));
            z = (std::log1p(-w) - poly(c5, u)) / std::exp(poly(c6, u));
        }
        p = 1.0 - normal_cdf(z);
    }

    TestReport report;
    report.test = "shapiro-wilk";
    report.statistic = w;
    report.p_value = p;
    report.n = n;
    return report;
}

TestReport wilcoxon_signed_rank(const std::vector<double>& a,
                                const std::vector<double>& b) {
    if (a.size() != b.size())
        throw LengthMismatch("paired samples differ in length");
    if (a.empty()) throw EmptySample("empty paired sample");

    std::vector<double> diffs;
    int zeros = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0)
            ++zeros;
        else
            diffs.push_back(d);
    }
    if (diffs.empty())
        throw AllZeroDifferences("all paired differences are zero");

    const int n = static_cast<int>(diffs.size());
    std::vector<double> abs_d(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) abs_d[i] = std::abs(diffs[i]);
    double tie_corr = 0.0;
    int tie_groups = 0;
    auto ranks = midranks(abs_d, &tie_corr, &tie_groups);

    double wplus = 0.0;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        if (diffs[i] > 0) wplus += ranks[i];
    const double total = static_cast<double>(n) * (n + 1) / 2.0;
    const double wminus = total - wplus;
    const double stat = std::min(wplus, wminus);

    TestReport report;
    report.test = "wilcoxon";
    report.statistic = stat;
    report.n = n;
    report.n1 = static_cast<int>(a.size());
    report.n2 = static_cast<int>(b.size());
    report.zero_diffs = zeros;
    report.tie_groups = tie_groups;

    if (n <= 25) {
        report.exact = true;
        // distribution of W+ over all sign assignments; doubled ranks keep
        // midrank sums integral
        std::vector<long> r2(diffs.size());
        long sum2 = 0;
        for (std::size_t i = 0; i < ranks.size(); ++i) {
            r2[i] = std::lround(2.0 * ranks[i]);
            sum2 += r2[i];
        }
        std::vector<double> counts(sum2 + 1, 0.0);
        counts[0] = 1.0;
        for (long r : r2) {
            for (long s = sum2 - r; s >= 0; --s) {
                if (counts[s] > 0) counts[s + r] += counts[s];
            }
        }
        report.p_value =
            two_sided_from_counts(counts, std::lround(2.0 * wplus));
    } else {
        const double mean = total / 2.0;
        const double var = static_cast<double>(n) * (n + 1) * (2 * n + 1) / 24.0 -
                           tie_corr / 48.0;
        const double cc = wplus > mean ? -0.5 : (wplus < mean ? 0.5 : 0.0);
        const double z = (wplus - mean + cc) / std::sqrt(var);
        report.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
    }

    report.effect_size = effect_size_paired(stat, report.n1, report.n2);
    report.effect_size_matched = (wplus - wminus) / (wplus + wminus);
    return report;
}

TestReport mann_whitney_u(const std::vector<double>& a,
                          const std::vector<double>& b) {
    if (a.empty() || b.empty()) throw EmptySample("empty sample");
    const int n1 = static_cast<int>(a.size());
    const int n2 = static_cast<int>(b.size());
    const int n = n1 + n2;

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    double tie_corr = 0.0;
    int tie_groups = 0;
    auto ranks = midranks(pooled, &tie_corr, &tie_groups);

    double r1 = 0.0;
    for (int i = 0; i < n1; ++i) r1 += ranks[i];
    const double u1 = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;
    const double total_ranks = static_cast<double>(n) * (n + 1) / 2.0;

    TestReport report;
    report.test = "mann-whitney";
    report.statistic = u1;
    report.n = n;
    report.n1 = n1;
    report.n2 = n2;
    report.tie_groups = tie_groups;
    report.rank_sum_1 = r1;
    report.rank_sum_total = total_ranks;

    const long max_u = static_cast<long>(n1) * n2;
    if (tie_groups == 0 && max_u <= 400) {
        report.exact = true;
        // counts[u] = number of (n1 out of n) rank subsets with U == u
        std::vector<std::vector<double>> dp(
            n1 + 1, std::vector<double>(max_u + 1, 0.0));
        dp[0][0] = 1.0;
        for (int item = 1; item <= n; ++item) {
            for (int k = std::min(item, n1); k >= 1; --k) {
                for (long u = max_u; u >= 0; --u) {
                    // adding pooled element with rank `item` as the k-th
                    // member of sample a contributes item - k to U
                    const long add = item - k;
                    if (u >= add && add <= max_u && dp[k - 1][u - add] > 0)
                        dp[k][u] += dp[k - 1][u - add];
                }
            }
        }
        report.p_value =
            two_sided_from_counts(dp[n1], std::lround(u1));
    } else {
        const double mean = static_cast<double>(n1) * n2 / 2.0;
        const double var =
            static_cast<double>(n1) * n2 / 12.0 *
            (static_cast<double>(n + 1) -
             tie_corr / (static_cast<double>(n) * (n - 1)));
        const double cc = u1 > mean ? -0.5 : (u1 < mean ? 0.5 : 0.0);
        const double z = (u1 - mean + cc) / std::sqrt(var);
        report.p_value = std::min(1.0, 2.0 * normal_cdf(-std::abs(z)));
    }

    // signed rank-sum difference over the total rank sum; negative when
    // sample a carries the lower ranks
    const double r2 = total_ranks - r1;
    report.effect_size = effect_size_unpaired(r1 - r2, total_ranks);
    return report;
}

double effect_size_paired(double u, int n1, int n2) {
    if (n1 < 1 || n2 < 1)
        throw OutOfRangeStatistic("sample sizes must be >= 1");
    const double max_u = static_cast<double>(n1) * n2;
    if (u < 0.0 || u > max_u)
        throw OutOfRangeStatistic("statistic outside [0, n1*n2]");
    const double f = u / max_u;
    return f - (1.0 - f);
}

double effect_size_unpaired(double t, double s) {
    if (s <= 0.0) throw ZeroRankSum("rank sum must be positive");
    return t / s;
}

}  // namespace vh::stats
