#include "gge/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include "gge/error.hpp"

namespace gge {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double t) {
    double w = std::remainder(t, kTwoPi);  // (−π, π]
    if (w >= kPi) w -= kTwoPi;
    return w;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> angles) : angles_(std::move(angles)) {
    for (double& t : angles_) {
        if (!std::isfinite(t)) throw DomainError("non-finite angle");
        t = wrap_angle(t);
    }
    std::sort(angles_.begin(), angles_.end());
}

EmpiricalMeasure EmpiricalMeasure::of(const CmvMatrix& m) { return EmpiricalMeasure(eigen_angles(m)); }

IntervalEmpiricalMeasure::IntervalEmpiricalMeasure(std::vector<double> points) : points_(std::move(points)) {
    for (double x : points_)
        if (!(x >= -1.0 && x <= 1.0)) throw DomainError("interval measure points must lie in [-1, 1]");
    std::sort(points_.begin(), points_.end());
}

IntervalEmpiricalMeasure IntervalEmpiricalMeasure::from_paired_angles(const std::vector<double>& angles) {
    if (angles.size() % 2 != 0) throw ShapeError("paired spectrum needs an even number of angles");
    std::vector<double> c(angles.size());
    for (std::size_t i = 0; i < angles.size(); ++i) c[i] = std::cos(angles[i]);
    std::sort(c.begin(), c.end());
    std::vector<double> x(c.size() / 2);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.5 * (c[2 * i] + c[2 * i + 1]);
    return IntervalEmpiricalMeasure(std::move(x));
}

GridDensity::GridDensity(std::vector<double> values, bool normalize, bool allow_negative)
    : values_(std::move(values)) {
    if (values_.size() < 2) throw ShapeError("grid density needs at least 2 nodes");
    for (double v : values_) {
        if (!std::isfinite(v)) throw DomainError("non-finite density value");
        if (!allow_negative && v < 0.0) throw DomainError("negative density value");
    }
    if (normalize) {
        double m = mass();
        if (!(m > 0.0)) throw DomainError("density has no mass");
        for (double& v : values_) v /= m;
    }
}

GridDensity GridDensity::uniform(int m) {
    return GridDensity(std::vector<double>(m, 1.0 / kTwoPi), false);
}

GridDensity GridDensity::from_function(int m, const std::function<double(double)>& rho, bool normalize) {
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) v[i] = rho(-kPi + kTwoPi * i / m);
    return GridDensity(std::move(v), normalize);
}

double GridDensity::theta(int i) const noexcept { return -kPi + kTwoPi * i / size(); }
double GridDensity::step() const noexcept { return kTwoPi / size(); }

double GridDensity::mass() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s * step();
}

const std::vector<Complex>& GridDensity::fourier() const {
    if (fourier_.empty()) {
        const int m = size();
        Eigen::FFT<double> fft;
        std::vector<Complex> spec;
        fft.fwd(spec, values_);  // Σ ρ_i e^{−2πi·ik/M}
        // ∫e^{ikθ}ρ ≈ h Σ ρ_i e^{ikθ_i}, θ_i = −π + 2πi/M; conj of the forward DFT
        // picks up e^{+ik·2πi/M}, and the −π offset contributes (−1)^k.
        fourier_.resize(m / 2 + 1);
        for (int k = 0; k <= m / 2; ++k) {
            Complex c = std::conj(spec[k]) * step();
            fourier_[k] = (k % 2 == 0) ? c : -c;
        }
    }
    return fourier_;
}

FourierCoeffs fourier_coeffs(const EmpiricalMeasure& mu, int k_max) {
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    if (mu.size() == 0) throw ShapeError("empty measure");
    FourierCoeffs out{k_max, std::vector<Complex>(k_max, 0.0)};
    for (double t : mu.angles()) {
        const Complex step = std::polar(1.0, t);
        Complex z = step;
        for (int k = 1; k <= k_max; ++k) {
            // Re-anchor periodically to stop rounding drift in the power recursion.
            if (k % 32 == 0) z = std::polar(1.0, k * t);
            out.c[k - 1] += z;
            z *= step;
        }
    }
    for (auto& c : out.c) c /= static_cast<double>(mu.size());
    return out;
}

FourierCoeffs fourier_coeffs(const GridDensity& rho, int k_max) {
    if (k_max < 1) throw DomainError("k_max must be >= 1");
    const auto& f = rho.fourier();
    FourierCoeffs out{k_max, std::vector<Complex>(k_max, 0.0)};
    const int kres = static_cast<int>(f.size()) - 1;
    for (int k = 1; k <= std::min(k_max, kres); ++k) out.c[k - 1] = f[k];
    return out;
}

Distance distance_D(const FourierCoeffs& a, const FourierCoeffs& b) {
    const int k = std::min(a.k_max, b.k_max);
    double s = 0.0;
    for (int j = 1; j <= k; ++j) s += std::norm(a(j) - b(j)) / j;
    return {std::sqrt(s), k};
}

double integrate(const std::function<double(double)>& f, const EmpiricalMeasure& mu) {
    if (mu.size() == 0) throw ShapeError("empty measure");
    double s = 0.0;
    for (double t : mu.angles()) s += f(t);
    return s / mu.size();
}

double integrate(const std::function<double(double)>& f, const GridDensity& rho) {
    double s = 0.0;
    for (int i = 0; i < rho.size(); ++i) s += f(rho.theta(i)) * rho[i];
    return s * rho.step();
}

double integrate(const std::function<double(double)>& f, const IntervalEmpiricalMeasure& mu) {
    if (mu.size() == 0) throw ShapeError("empty measure");
    double s = 0.0;
    for (double x : mu.points()) s += f(x);
    return s / mu.size();
}

GridDensity density_estimate(const EmpiricalMeasure& mu, const HistogramOptions& opt) {
    if (opt.bins < 1) throw DomainError("histogram needs at least one bin");
    if (mu.size() == 0) throw ShapeError("empty measure");
    std::vector<double> counts(std::max(opt.bins, 2), 0.0);
    const int b = opt.bins;
    for (double t : mu.angles()) {
        int i = static_cast<int>(std::floor((t + kPi) / kTwoPi * b));
        counts[std::clamp(i, 0, b - 1)] += 1.0;
    }
    if (b == 1) counts[1] = counts[0];  // a single bin is the flat density
    return GridDensity(std::move(counts), true);
}

GridDensity density_estimate(const EmpiricalMeasure& mu, const KdeOptions& opt) {
    if (!(opt.bandwidth > 0.0)) throw DomainError("KDE bandwidth must be positive");
    if (opt.grid_size < 2) throw DomainError("KDE grid needs at least 2 nodes");
    const int m = opt.grid_size;
    // Kernel multipliers e^{−σ²k²/2}; stop once they are negligible.
    int kcut = m / 2;
    for (int k = 1; k <= m / 2; ++k)
        if (0.5 * opt.bandwidth * opt.bandwidth * k * k > 40.0) {
            kcut = k;
            break;
        }
    auto mh = fourier_coeffs(mu, kcut);
    std::vector<double> v(m);
    for (int i = 0; i < m; ++i) {
        const double th = -kPi + kTwoPi * i / m;
        double s = 1.0;
        for (int k = 1; k <= kcut; ++k)
            s += 2.0 * std::exp(-0.5 * opt.bandwidth * opt.bandwidth * k * k) *
                 (std::conj(mh(k)) * std::polar(1.0, k * th)).real();
        v[i] = std::max(s, 0.0) / kTwoPi;
    }
    return GridDensity(std::move(v), true);
}

std::vector<TestFunction> default_dictionary() {
    const double inf = std::numeric_limits<double>::infinity();
    return {
        {"cos1", [](double t) { return std::cos(t); }, 4.0, 1.0},
        {"sin1", [](double t) { return std::sin(t); }, 4.0, 1.0},
        {"cos2", [](double t) { return std::cos(2 * t); }, 8.0, 2.0},
        {"sin3", [](double t) { return std::sin(3 * t); }, 12.0, 3.0},
        {"arc_indicator", [](double t) { return (t >= 0.0 && t < kPi / 2) ? 1.0 : 0.0; }, 2.0, inf},
        // |θ|/π: one descent and one ascent of height 1; chord Lipschitz constant
        // max_Δ Δ/(2π sin(Δ/2)) = 1/2 at Δ = π.
        {"tent", [](double t) { return std::abs(wrap_angle(t)) / kPi; }, 2.0, 0.5},
    };
}

BvLipReport check_bv_lip_bound(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b,
                               const std::vector<TestFunction>& dictionary, double slack) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("check_bv_lip_bound: dimension mismatch");
    BvLipReport rep;
    rep.n = static_cast<int>(a.rows());
    Eigen::MatrixXcd d = a - b;
    rep.entry_sum = d.cwiseAbs().sum();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(d);
    const auto& sv = svd.singularValues();
    const double top = sv.size() ? sv(0) : 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (top > 0.0 && sv(i) > 1e-9 * top) ++rep.rank;
    EmpiricalMeasure ma(eigen_angles(a)), mb(eigen_angles(b));
    for (const auto& tf : dictionary) {
        BvLipEntry e;
        e.name = tf.name;
        e.lhs = std::abs(integrate(tf.f, ma) - integrate(tf.f, mb));
        e.bv_rhs = tf.bv_norm * rep.rank / rep.n;
        e.lip_rhs = tf.lip_norm * rep.entry_sum / rep.n;
        if (std::isnan(e.lip_rhs)) e.lip_rhs = std::numeric_limits<double>::infinity();  // ∞·0
        e.bv_ok = e.lhs <= e.bv_rhs + slack;
        e.lip_ok = e.lhs <= e.lip_rhs + slack;
        rep.violations += !e.bv_ok + !e.lip_ok;
        rep.entries.push_back(e);
    }
    return rep;
}

BvLipReport check_bv_lip_bound(const CmvMatrix& a, const CmvMatrix& b,
                               const std::vector<TestFunction>& dictionary, double slack) {
    return check_bv_lip_bound(a.to_dense(), b.to_dense(), dictionary, slack);
}

std::string to_csv(const EmpiricalMeasure& mu) {
    std::string out = "theta,weight\n";
    const std::string w = fmt(1.0 / mu.size());
    for (double t : mu.angles()) out += fmt(t) + "," + w + "\n";
    return out;
}

std::string to_csv(const GridDensity& rho) {
    std::string out = "theta,rho\n";
    for (int i = 0; i < rho.size(); ++i) out += fmt(rho.theta(i)) + "," + fmt(rho[i]) + "\n";
    return out;
}

std::string to_json(const GridDensity& rho) {
    nlohmann::json j;
    j["grid_size"] = rho.size();
    j["convention"] = "theta_i = -pi + 2*pi*i/M, trapezoid mass 1";
    j["theta"] = nlohmann::json::array();
    for (int i = 0; i < rho.size(); ++i) j["theta"].push_back(rho.theta(i));
    j["rho"] = rho.values();
    return j.dump();
}

std::string to_json(const FourierCoeffs& c) {
    nlohmann::json j;
    j["k_max"] = c.k_max;
    j["re"] = nlohmann::json::array();
    j["im"] = nlohmann::json::array();
    for (const auto& z : c.c) {
        j["re"].push_back(z.real());
        j["im"].push_back(z.imag());
    }
    return j.dump();
}

}  // namespace gge
