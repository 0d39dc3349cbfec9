#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace gge::stats {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe mean_se(std::span<const double> x);
// Standard error from non-overlapping batch means; robust to autocorrelation.
MeanSe batch_means(std::span<const double> x, std::size_t n_batches = 50);
// Ratio of batch-means variance to naive variance; ≈ 1 for independent draws.
double autocorrelation_inflation(std::span<const double> x, std::size_t n_batches = 50);

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
};

// Asymptotic Kolmogorov survival function Q(λ) = 2Σ(−1)^{k−1}e^{−2k²λ²}.
double kolmogorov_q(double lambda);

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

double normal_two_sided_p(double z);

// Welch two-sample z statistic and its two-sided p-value.
struct ZTest {
    double z = 0.0;
    double p_value = 1.0;
};
ZTest two_sample_z(std::span<const double> a, std::span<const double> b);

}  // namespace gge::stats
