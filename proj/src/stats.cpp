#include "gge/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gge/error.hpp"

namespace gge::stats {

MeanSe mean_se(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n == 0) throw ShapeError("mean of an empty sample");
    double m = 0.0;
    for (double v : x) m += v;
    m /= n;
    if (n < 2) return {m, 0.0};
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / (n - 1) / n)};
}

MeanSe batch_means(std::span<const double> x, std::size_t n_batches) {
    const std::size_t n = x.size();
    if (n < 2 * n_batches) return mean_se(x);
    const std::size_t b = n / n_batches;
    std::vector<double> means(n_batches);
    for (std::size_t k = 0; k < n_batches; ++k) {
        double s = 0.0;
        for (std::size_t i = k * b; i < (k + 1) * b; ++i) s += x[i];
        means[k] = s / b;
    }
    MeanSe bm = mean_se(means);
    MeanSe all = mean_se(x);
    // Report the overall mean; inflate the error if batching reveals correlation.
    return {all.mean, std::max(bm.se, all.se)};
}

double autocorrelation_inflation(std::span<const double> x, std::size_t n_batches) {
    const std::size_t n = x.size();
    if (n < 2 * n_batches) return 1.0;
    const std::size_t b = n / n_batches;
    std::vector<double> means(n_batches);
    for (std::size_t k = 0; k < n_batches; ++k) {
        double s = 0.0;
        for (std::size_t i = k * b; i < (k + 1) * b; ++i) s += x[i];
        means[k] = s / b;
    }
    double naive = mean_se(x).se;
    if (naive == 0.0) return 1.0;
    double r = mean_se(means).se / naive;
    return r * r;
}

double kolmogorov_q(double lambda) {
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0, sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-17) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

double effective_lambda(double d, double n_eff) {
    const double sn = std::sqrt(n_eff);
    return (sn + 0.12 + 0.11 / sn) * d;
}

}  // namespace

KsResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf) {
    if (x.empty()) throw ShapeError("KS test on an empty sample");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double f = cdf(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return {d, kolmogorov_q(effective_lambda(d, n))};
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ShapeError("KS test on an empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return {d, kolmogorov_q(effective_lambda(d, na * nb / (na + nb)))};
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

ZTest two_sample_z(std::span<const double> a, std::span<const double> b) {
    MeanSe ma = mean_se(a), mb = mean_se(b);
    double se = std::hypot(ma.se, mb.se);
    if (se == 0.0) return {0.0, ma.mean == mb.mean ? 1.0 : 0.0};
    double z = (ma.mean - mb.mean) / se;
    return {z, normal_two_sided_p(z)};
}

}  // namespace gge::stats
