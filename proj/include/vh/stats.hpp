#pragma once

#include <string>
#include <vector>

namespace vh::stats {

struct TestReport {
    std::string test;
    double statistic = 0.0;
    double p_value = 1.0;
    double effect_size = 0.0;
    // conventional matched-pairs rank-biserial (W+ - W-)/(W+ + W-),
    // reported alongside for the signed-rank test
    double effect_size_matched = 0.0;
    int n = 0;       // effective sample size (pairs after zero removal)
    int n1 = 0, n2 = 0;
    int zero_diffs = 0;
    int tie_groups = 0;
    bool exact = false;
    double rank_sum_1 = 0.0;      // Mann-Whitney: rank sum of sample a
    double rank_sum_total = 0.0;  // N(N+1)/2
};

double normal_cdf(double x);
double normal_ppf(double p);  // AS 241

// Royston's AS R94 approximation; valid for 3 <= n <= 5000.
TestReport shapiro_wilk(const std::vector<double>& samples);

// Paired test. Zero differences are discarded; midranks for ties; the
// statistic is min(W+, W-). Exact sign-flip distribution for n <= 25,
// normal approximation with tie and continuity correction otherwise.
// Two-sided p-values.
TestReport wilcoxon_signed_rank(const std::vector<double>& a,
                                const std::vector<double>& b);

// Unpaired test; statistic is U of sample a. Exact distribution when the
// pooled data is tie-free and n1*n2 <= 400.
TestReport mann_whitney_u(const std::vector<double>& a,
                          const std::vector<double>& b);

// r = 2*U/(n1*n2) - 1, the common-language rank-biserial
double effect_size_paired(double u, int n1, int n2);

// r = T/S
double effect_size_unpaired(double t, double s);

// Pooled midranks; also reports tie-group correction sum(t^3 - t).
std::vector<double> midranks(const std::vector<double>& values,
                             double* tie_correction = nullptr,
                             int* tie_groups = nullptr);

}  // namespace vh::stats
